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

#include "rimg/metrics.h"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <json.hpp>

#include "rimg/error.h"
#include "rimg/spatial.h"

namespace rimg {

namespace {

// Neumaier-compensated running sum.
class Sum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      c_ += (sum_ - t) + x;
    } else {
      c_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + c_; }

 private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

KdTree make_tree(std::span<const Vec3> p) { return KdTree(std::vector<Vec3>(p.begin(), p.end())); }

double directed_chamfer(std::span<const Vec3> p, const KdTree& q) {
  Sum s;
  for (const Vec3& x : p) s.add(std::sqrt(q.nearest(x).dist2));
  return s.value() / static_cast<double>(p.size());
}

void require_nonempty(std::span<const Vec3> p, std::span<const Vec3> q) {
  if (p.empty() || q.empty()) throw Error(ErrorCode::kEmptyCloud, "chamfer needs two non-empty clouds");
}

// Neighbors of point i, excluding i itself.
std::vector<Neighbor> others(const KdTree& tree, size_t i, size_t k) {
  std::vector<Neighbor> nn = tree.knn(tree.points()[i], k + 1);
  auto self = std::find_if(nn.begin(), nn.end(), [&](const Neighbor& n) { return n.index == i; });
  if (self != nn.end()) {
    nn.erase(self);
  } else {
    nn.pop_back();
  }
  return nn;
}

std::vector<Vec3> normals_of(const KdTree& tree, size_t k) {
  const auto& pts = tree.points();
  std::vector<Vec3> out(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) {
    std::vector<Neighbor> nn = others(tree, i, k);
    Vec3 mean = Vec3::Zero();
    for (const Neighbor& n : nn) mean += pts[n.index];
    mean /= static_cast<double>(nn.size());
    Mat3 cov = Mat3::Zero();
    for (const Neighbor& n : nn) {
      Vec3 d = pts[n.index] - mean;
      cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
    out[i] = solver.eigenvectors().col(0).normalized();
  }
  return out;
}

double point_to_plane_mse(const KdTree& a, const std::vector<Vec3>& normals, const KdTree& b) {
  Sum s;
  const auto& pts = a.points();
  for (size_t i = 0; i < pts.size(); ++i) {
    const Vec3& nb = b.points()[b.nearest(pts[i]).index];
    double e = (pts[i] - nb).dot(normals[i]);
    s.add(e * e);
  }
  return s.value() / static_cast<double>(pts.size());
}

}  // namespace

double chamfer(std::span<const Vec3> p, std::span<const Vec3> q) {
  require_nonempty(p, q);
  return directed_chamfer(p, make_tree(q));
}

double chamfer_sym(std::span<const Vec3> p, std::span<const Vec3> q) {
  require_nonempty(p, q);
  return std::max(directed_chamfer(p, make_tree(q)), directed_chamfer(q, make_tree(p)));
}

std::vector<Vec3> estimate_normals(std::span<const Vec3> p, size_t k) {
  if (k == 0 || p.size() < k + 1) {
    throw Error(ErrorCode::kTooFewPoints, "normal estimation needs at least k + 1 points");
  }
  return normals_of(make_tree(p), k);
}

double intrinsic_resolution(std::span<const Vec3> p) {
  if (p.size() < 2) throw Error(ErrorCode::kTooFewPoints, "intrinsic resolution needs two points");
  KdTree tree = make_tree(p);
  double r2 = 0.0;
  for (size_t i = 0; i < p.size(); ++i) r2 = std::max(r2, others(tree, i, 1).front().dist2);
  return std::sqrt(r2);
}

Psnr psnr(std::span<const Vec3> p, std::span<const Vec3> q, size_t k) {
  if (k == 0 || p.size() < k + 1 || q.size() < k + 1) {
    throw Error(ErrorCode::kTooFewPoints, "PSNR needs at least k + 1 points in each cloud");
  }
  KdTree tp = make_tree(p);
  KdTree tq = make_tree(q);
  double mse_pq = point_to_plane_mse(tp, normals_of(tp, k), tq);
  double mse_qp = point_to_plane_mse(tq, normals_of(tq, k), tp);
  if (mse_pq < 1e-18 && mse_qp < 1e-18) return {std::numeric_limits<double>::infinity(), true};
  double r = intrinsic_resolution(p);
  return {10.0 * std::log10(r * r / std::max(mse_pq, mse_qp)), false};
}

double prediction_accuracy(const RangeImage& pred, const RangeImage& truth, double precision) {
  if (pred.height != truth.height || pred.width != truth.width || pred.valid != truth.valid) {
    throw Error(ErrorCode::kDimensionMismatch, "prediction and truth differ in shape or mask");
  }
  size_t valid = 0;
  size_t hits = 0;
  for (size_t k = 0; k < truth.size(); ++k) {
    if (!truth.valid[k]) continue;
    ++valid;
    hits += std::abs(pred.ranges[k] - truth.ranges[k]) < precision / 2.0;
  }
  if (valid == 0) throw Error(ErrorCode::kZeroPoints, "no valid pixels");
  return static_cast<double>(hits) / static_cast<double>(valid);
}

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string MetricReport::to_json() const {
  nlohmann::ordered_json j;
  j["cd_sym"] = cd_sym;
  j["psnr"] = psnr.infinite ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(psnr.db);
  j["psnr_infinite"] = psnr.infinite;
  j["bpp"] = bpp ? nlohmann::ordered_json(*bpp) : nlohmann::ordered_json(nullptr);
  nlohmann::ordered_json acc = nlohmann::ordered_json::object();
  for (const auto& [precision, fraction] : accuracy_at) acc[format_double(precision)] = fraction;
  j["accuracy_at"] = acc;
  return j.dump(2) + "\n";
}

MetricReport MetricReport::from_json(const std::string& text) {
  MetricReport r;
  try {
    auto j = nlohmann::json::parse(text);
    r.cd_sym = j.at("cd_sym").get<double>();
    r.psnr.infinite = j.at("psnr_infinite").get<bool>();
    r.psnr.db = r.psnr.infinite ? std::numeric_limits<double>::infinity() : j.at("psnr").get<double>();
    if (!j.at("bpp").is_null()) r.bpp = j.at("bpp").get<double>();
    for (const auto& [key, value] : j.at("accuracy_at").items()) {
      r.accuracy_at[std::stod(key)] = value.get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("bad metric report: ") + e.what());
  } catch (const std::logic_error& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("bad metric report key: ") + e.what());
  }
  return r;
}

bool MetricReport::operator==(const MetricReport& o) const {
  bool same_psnr = psnr.infinite == o.psnr.infinite && (psnr.infinite || psnr.db == o.psnr.db);
  return cd_sym == o.cd_sym && same_psnr && bpp == o.bpp && accuracy_at == o.accuracy_at;
}

}  // namespace rimg
