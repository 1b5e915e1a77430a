/*
 * Copyright 2026 The rimg Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// rimgc: encode, decode, evaluate and benchmark range-image compression.

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "rimg/codec.h"
#include "rimg/error.h"
#include "rimg/io.h"
#include "rimg/metrics.h"
#include "rimg/scene.h"
#include "rimg/weights.h"

namespace fs = std::filesystem;
using namespace rimg;

namespace {

constexpr int kExitUsage = 2;

// Each error family gets its own status, 10 + its ErrorCode value.
int exit_code(ErrorCode code) { return 10 + static_cast<int>(code); }

BlockLayout parse_block(const std::string& text) {
  if (text == "whole" || text == "0x0") return BlockLayout::whole();
  auto x = text.find('x');
  if (x == std::string::npos) throw Error(ErrorCode::kInvalidArgument, "--block expects HxW");
  try {
    return {std::stoi(text.substr(0, x)), std::stoi(text.substr(x + 1))};
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidArgument, "--block expects HxW, got '" + text + "'");
  }
}

PredictorKind make_predictor(const std::string& name, bool temporal, const std::string& weights) {
  PredictorId id = predictor_from_string(name == "anchor" ? "anchor-intra" : name);
  if (temporal) {
    if (id != PredictorId::kAnchorIntra && id != PredictorId::kAnchorTemporal) {
      throw Error(ErrorCode::kInvalidArgument, "--temporal needs an anchor predictor");
    }
    id = PredictorId::kAnchorTemporal;
  }
  if (id == PredictorId::kPreviousValid) return PredictorKind::previous_valid();
  if (id == PredictorId::kLinear) return PredictorKind::linear();
  if (weights.empty()) throw Error(ErrorCode::kInvalidArgument, "anchor predictors need --weights");
  auto bundle = std::make_shared<const WeightBundle>(read_weights(weights));
  return id == PredictorId::kAnchorTemporal ? PredictorKind::anchor_temporal(bundle)
                                            : PredictorKind::anchor_intra(bundle);
}

// One geometry file per frame, or a single file shared by every frame.
std::vector<FrameGeometry> load_geometry(const std::vector<std::string>& paths, size_t frames) {
  if (paths.size() != 1 && paths.size() != frames) {
    throw Error(ErrorCode::kInvalidArgument, "pass one --calib per frame, or one for all frames");
  }
  std::vector<FrameGeometry> out;
  for (size_t t = 0; t < frames; ++t) out.push_back(read_frame_geometry(paths[paths.size() == 1 ? 0 : t]));
  return out;
}

std::string indexed_path(const std::string& path, size_t index, size_t count) {
  if (count == 1) return path;
  fs::path p(path);
  return (p.parent_path() / (p.stem().string() + "_" + std::to_string(index) + p.extension().string()))
      .string();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---------------------------------------------------------------------------

struct EncodeArgs {
  std::vector<std::string> inputs;
  std::vector<std::string> calibs;
  double precision = 0.1;
  std::string predictor = "linear";
  std::string weights;
  std::string block = "16x50";
  bool temporal = false;
  int threads = 1;
  std::string output;
};

int cmd_encode(const EncodeArgs& a) {
  auto start = std::chrono::steady_clock::now();
  PredictorKind kind = make_predictor(a.predictor, a.temporal, a.weights);
  std::vector<RangeImage> frames;
  for (const auto& path : a.inputs) frames.push_back(read_range_image(path));
  auto geometry = load_geometry(a.calibs, frames.size());
  std::vector<LidarCalibration> calibs;
  std::vector<PoseTrack> tracks;
  for (auto& g : geometry) {
    calibs.push_back(g.calib);
    tracks.push_back(g.track);
  }
  EncodeOptions options;
  options.layout = parse_block(a.block);
  options.threads = a.threads;
  auto encoded = encode_sequence(frames, calibs, tracks, QuantizationSpec{a.precision}, kind, options);
  write_file(a.output, serialize_sequence(encoded));
  for (size_t t = 0; t < encoded.size(); ++t) {
    std::printf("frame %zu: %zu bytes, %zu points, %.4f bpp\n", t, encoded[t].byte_size(),
                encoded[t].valid_count(),
                encoded[t].valid_count() > 0 ? bpp(encoded[t]) : 0.0);
  }
  std::fprintf(stderr, "encode time %.3f s\n", seconds_since(start));
  return 0;
}

struct DecodeArgs {
  std::string input;
  std::vector<std::string> calibs;
  std::vector<std::string> weights_dirs;
  std::vector<std::string> weights;
  int threads = 1;
  std::string output;
};

int cmd_decode(const DecodeArgs& a) {
  auto start = std::chrono::steady_clock::now();
  WeightRegistry registry;
  for (const auto& d : a.weights_dirs) registry.add_directory(d);
  for (const auto& w : a.weights) registry.add(read_weights(w));
  auto frames = parse_sequence(read_file(a.input));
  auto geometry = load_geometry(a.calibs, frames.size());
  std::vector<LidarCalibration> calibs;
  std::vector<PoseTrack> tracks;
  for (auto& g : geometry) {
    calibs.push_back(g.calib);
    tracks.push_back(g.track);
  }
  auto images = decode_sequence(frames, calibs, tracks, registry, a.threads);
  for (size_t t = 0; t < images.size(); ++t) {
    std::string path = indexed_path(a.output, t, images.size());
    write_range_image(path, images[t]);
    std::printf("frame %zu: %zu points -> %s\n", t, images[t].valid_count(), path.c_str());
  }
  std::fprintf(stderr, "decode time %.3f s\n", seconds_since(start));
  return 0;
}

struct EvalArgs {
  std::string original;
  std::string reconstructed;
  std::vector<std::string> calibs;
  std::string container;
  std::string output;
};

int cmd_eval(const EvalArgs& a) {
  RangeImage original = read_range_image(a.original);
  RangeImage recon = read_range_image(a.reconstructed);
  auto geometry = load_geometry(a.calibs, 2);
  check_dimensions(original, geometry[0].calib, geometry[0].track);
  check_dimensions(recon, geometry[1].calib, geometry[1].track);
  auto p = image_to_point_cloud(original, geometry[0].calib, geometry[0].track);
  auto q = image_to_point_cloud(recon, geometry[1].calib, geometry[1].track);
  MetricReport report;
  report.cd_sym = chamfer_sym(p, q);
  report.psnr = psnr(p, q);
  if (!a.container.empty()) {
    auto frames = parse_sequence(read_file(a.container));
    size_t bytes = 0;
    size_t points = 0;
    for (const auto& f : frames) {
      bytes += f.byte_size();
      points += f.valid_count();
    }
    if (points == 0) throw Error(ErrorCode::kZeroPoints, "container holds no points");
    report.bpp = 8.0 * static_cast<double>(bytes) / static_cast<double>(points);
  }
  std::string json = report.to_json();
  if (a.output.empty()) {
    std::cout << json;
  } else {
    std::ofstream(a.output) << json;
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct BenchArgs {
  std::string kind = "boxes-on-ground";
  std::string corpus;
  uint64_t seed = 0;
  int scenes = 4;
  int height = 32;
  int width = 512;
  std::vector<double> precisions{0.02, 0.1, 0.2};
  std::vector<std::string> predictors{"previous", "linear"};
  std::string weights;
  std::string temporal_weights;
  std::string block = "16x50";
  int threads = 1;
  std::string output = ".";
};

struct BenchFrame {
  RangeImage image;
  LidarCalibration calib;
  PoseTrack track;
  bool continues = false;  // frame t - 1 is its predecessor
};

std::vector<BenchFrame> bench_corpus(const BenchArgs& a) {
  std::vector<BenchFrame> out;
  if (!a.corpus.empty()) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(a.corpus)) {
      if (e.path().extension() == ".rimg") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      fs::path g = f;
      g.replace_extension(".json");
      FrameGeometry geo = read_frame_geometry(g.string());
      out.push_back({read_range_image(f.string()), geo.calib, geo.track, !out.empty()});
    }
    if (out.empty()) throw Error(ErrorCode::kIo, "no .rimg files in " + a.corpus);
    return out;
  }
  scene::SceneSpec spec;
  spec.kind = scene::scene_kind_from_string(a.kind);
  spec.lidar = LidarCalibration::uniform(a.height, a.width, 2.4 * std::numbers::pi / 180,
                                         -17.6 * std::numbers::pi / 180);
  for (int s = 0; s < a.scenes; ++s) {
    spec.seed = a.seed + static_cast<uint64_t>(s);
    scene::Scene sc = scene::generate(spec);
    for (size_t t = 0; t < sc.frames.size(); ++t) {
      out.push_back({std::move(sc.frames[t].image), sc.calib, std::move(sc.frames[t].track), t > 0});
    }
  }
  return out;
}

// Table rows are sorted by precision, then by predictor order on the
// command line. Columns (tab-separated, header line first):
//   precision predictor frames points bytes bpp cd_sym psnr accuracy
// psnr is the mean over frames with finite PSNR, "inf" if none is finite.
// Histograms hist_<predictor>_<precision>.tsv hold "residual<TAB>count"
// lines in increasing residual order.
int cmd_bench(const BenchArgs& a) {
  auto start = std::chrono::steady_clock::now();
  auto corpus = bench_corpus(a);
  fs::create_directories(a.output);
  std::vector<double> precisions = a.precisions;
  std::sort(precisions.begin(), precisions.end());
  EncodeOptions options;
  options.layout = parse_block(a.block);
  options.threads = a.threads;
  options.intra_fallback = true;

  std::ofstream table(fs::path(a.output) / "rd_table.tsv");
  table << "precision\tpredictor\tframes\tpoints\tbytes\tbpp\tcd_sym\tpsnr\taccuracy\n";
  for (double precision : precisions) {
    QuantizationSpec spec{precision};
    for (const auto& name : a.predictors) {
      bool temporal = name == "anchor-temporal";
      PredictorKind kind =
          make_predictor(name, false, temporal && !a.temporal_weights.empty() ? a.temporal_weights : a.weights);
      std::map<int64_t, uint64_t> hist;
      size_t bytes = 0, points = 0, hits = 0, finite_psnr = 0;
      double cd_max = 0.0, psnr_sum = 0.0;
      RangeImage previous;
      for (size_t t = 0; t < corpus.size(); ++t) {
        const BenchFrame& f = corpus[t];
        PreviousFrame prev{&previous, &corpus[t > 0 ? t - 1 : 0].calib, &corpus[t > 0 ? t - 1 : 0].track};
        bool use_prev = kind.temporal() && f.continues;
        FrameResiduals res =
            compute_residuals(f.image, f.calib, f.track, spec, kind, options, use_prev ? &prev : nullptr);
        CompressedFrame cf = encode_frame(f.image, f.calib, f.track, spec, kind, options,
                                          use_prev ? &prev : nullptr);
        bytes += cf.byte_size();
        points += cf.valid_count();
        for (int64_t d : res.deltas) {
          ++hist[d];
          hits += d == 0;
        }
        auto p = image_to_point_cloud(f.image, f.calib, f.track);
        auto q = image_to_point_cloud(res.quantized, f.calib, f.track);
        if (!p.empty()) {
          cd_max = std::max(cd_max, chamfer_sym(p, q));
          if (p.size() > kNormalNeighbors) {
            Psnr ps = psnr(p, q);
            if (!ps.infinite) {
              psnr_sum += ps.db;
              ++finite_psnr;
            }
          }
        }
        previous = std::move(res.quantized);
      }
      table << format_double(precision) << '\t' << name << '\t' << corpus.size() << '\t' << points
            << '\t' << bytes << '\t'
            << (points ? format_double(8.0 * static_cast<double>(bytes) / static_cast<double>(points)) : "nan")
            << '\t' << format_double(cd_max) << '\t'
            << (finite_psnr ? format_double(psnr_sum / static_cast<double>(finite_psnr)) : "inf") << '\t'
            << (points ? format_double(static_cast<double>(hits) / static_cast<double>(points)) : "nan")
            << '\n';
      std::ofstream h(fs::path(a.output) / ("hist_" + name + "_" + format_double(precision) + ".tsv"));
      h << "residual\tcount\n";
      for (auto [d, c] : hist) h << d << '\t' << c << '\n';
    }
  }
  std::printf("wrote %s\n", (fs::path(a.output) / "rd_table.tsv").string().c_str());
  std::fprintf(stderr, "bench time %.3f s\n", seconds_since(start));
  return 0;
}

struct GenArgs {
  std::string kind = "boxes-on-ground";
  uint64_t seed = 0;
  int height = 64;
  int width = 2650;
  double noise = 0.0;
  double dropout = 0.0;
  std::string output = "scene";
};

// Writes <output>_<t>.rimg and <output>_<t>.json per frame.
int cmd_genscene(const GenArgs& a) {
  scene::SceneSpec spec;
  spec.kind = scene::scene_kind_from_string(a.kind);
  spec.seed = a.seed;
  spec.lidar = LidarCalibration::uniform(a.height, a.width, 2.4 * std::numbers::pi / 180,
                                         -17.6 * std::numbers::pi / 180);
  spec.noise_sigma = a.noise;
  spec.dropout = a.dropout;
  scene::Scene sc = scene::generate(spec);
  for (size_t t = 0; t < sc.frames.size(); ++t) {
    std::string stem = a.output + "_" + std::to_string(t);
    write_range_image(stem + ".rimg", sc.frames[t].image);
    write_frame_geometry(stem + ".json", {sc.calib, sc.frames[t].track});
    std::printf("%s.rimg: %dx%d, %zu points\n", stem.c_str(), sc.calib.height(), sc.calib.width(),
                sc.frames[t].image.valid_count());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Range-image lidar compression"};
  app.require_subcommand(1);

  EncodeArgs enc;
  auto* encode = app.add_subcommand("encode", "Compress range images into a container");
  encode->add_option("inputs", enc.inputs, "Range images (.rimg), one per frame")->required();
  encode->add_option("--calib", enc.calibs, "Calibration and pose JSON, one per frame or one shared")
      ->required();
  encode->add_option("--precision", enc.precision, "Quantization step in meters");
  encode->add_option("--predictor", enc.predictor, "previous | linear | anchor | anchor-temporal");
  encode->add_option("--weights", enc.weights, "RWGT weight bundle for anchor predictors");
  encode->add_option("--block", enc.block, "Block size HxW, or 'whole'");
  encode->add_flag("--temporal", enc.temporal, "Use the previous frame as context");
  encode->add_option("--threads", enc.threads, "Worker threads");
  encode->add_option("-o,--output", enc.output, "Container path")->required();

  DecodeArgs dec;
  auto* decode = app.add_subcommand("decode", "Reconstruct range images from a container");
  decode->add_option("input", dec.input, "Container path")->required();
  decode->add_option("--calib", dec.calibs, "Calibration and pose JSON")->required();
  decode->add_option("--weights-dir", dec.weights_dirs, "Directory of .rwgt bundles");
  decode->add_option("--weights", dec.weights, "Individual .rwgt bundle");
  decode->add_option("--threads", dec.threads, "Worker threads");
  decode->add_option("-o,--output", dec.output, "Output .rimg path (indexed for sequences)")->required();

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Distortion metrics between two range images");
  eval->add_option("original", ev.original)->required();
  eval->add_option("reconstructed", ev.reconstructed)->required();
  eval->add_option("--calib", ev.calibs, "Calibration and pose JSON, one shared or one per image")
      ->required();
  eval->add_option("--container", ev.container, "Container to report bpp for");
  eval->add_option("-o,--output", ev.output, "MetricReport JSON path (stdout if omitted)");

  BenchArgs be;
  auto* bench = app.add_subcommand("bench", "Rate-distortion table and residual histograms");
  bench->add_option("--kind", be.kind, "Scene kind");
  bench->add_option("--corpus", be.corpus, "Directory of .rimg/.json pairs instead of scenes");
  bench->add_option("--seed", be.seed);
  bench->add_option("--scenes", be.scenes);
  bench->add_option("--height", be.height);
  bench->add_option("--width", be.width);
  bench->add_option("--precisions", be.precisions)->delimiter(',');
  bench->add_option("--predictors", be.predictors)->delimiter(',');
  bench->add_option("--weights", be.weights, "Bundle for anchor-intra");
  bench->add_option("--temporal-weights", be.temporal_weights, "Bundle for anchor-temporal");
  bench->add_option("--block", be.block);
  bench->add_option("--threads", be.threads);
  bench->add_option("-o,--output", be.output, "Output directory");

  GenArgs gen;
  auto* genscene = app.add_subcommand("genscene", "Raytrace a synthetic scene");
  genscene->add_option("--kind", gen.kind,
                       "planes | sphere | boxes-on-ground | static-pair | moving-sensor-pair");
  genscene->add_option("--seed", gen.seed);
  genscene->add_option("--height", gen.height);
  genscene->add_option("--width", gen.width);
  genscene->add_option("--noise", gen.noise, "Range noise sigma, meters");
  genscene->add_option("--dropout", gen.dropout, "Return dropout probability");
  genscene->add_option("-o,--output", gen.output, "Output prefix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*encode) return cmd_encode(enc);
    if (*decode) return cmd_decode(dec);
    if (*eval) return cmd_eval(ev);
    if (*bench) return cmd_bench(be);
    if (*genscene) return cmd_genscene(gen);
  } catch (const Error& e) {
    std::fprintf(stderr, "rimgc: %s\n", e.what());
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "rimgc: %s\n", e.what());
    return 1;
  }
  return kExitUsage;
}
