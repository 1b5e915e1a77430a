#!/usr/bin/env python3
# Copyright 2026 The rimg Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""End-to-end tests of the rimgc command line. Usage: cli_test.py RIMGC."""

import csv
import hashlib
import json
import os
import struct
import subprocess
import sys
import tempfile
import unittest

RIMGC = None

# Exit statuses: 10 + error family.
EXIT_CORRUPT = 13
EXIT_UNKNOWN_WEIGHTS = 14
EXIT_HEADER_MISMATCH = 15
EXIT_IO = 22
EXIT_USAGE = 2


def nearest_angle_bundle(dim):
    """RWGT bytes of a network that picks the context point nearest in angle."""
    w0 = [0.0] * (4 * dim)
    w0[0 * dim + 0] = 1.0
    w0[1 * dim + 0] = -1.0
    w0[2 * dim + 1] = 1.0
    w0[3 * dim + 1] = -1.0
    layers = [
        (1, 4, dim, w0, [0.0] * 4),
        (2, 4, 4, [], []),
        (3, 8, 0, [], []),
        (1, 1, 8, [-1.0] * 4 + [0.0] * 4, [0.0]),
        (1, 1, 8, [0.0] * 8, [0.0]),
    ]
    out = b"RWGT" + struct.pack("<BBHfB", 1, dim, 99 if dim == 3 else 199, 75.0, len(layers))
    for kind, rows, cols, w, b in layers:
        out += struct.pack("<BII", kind, rows, cols)
        out += struct.pack(f"<{len(w)}f", *w) + struct.pack(f"<{len(b)}f", *b)
    return out


def digest(data):
    return struct.unpack("<Q", hashlib.sha256(data).digest()[:8])[0]


class CliTest(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = self.tmp.name

    def tearDown(self):
        self.tmp.cleanup()

    def path(self, name):
        return os.path.join(self.dir, name)

    def run_cli(self, *args, expect=0):
        proc = subprocess.run([RIMGC, *args], capture_output=True, text=True)
        self.assertEqual(proc.returncode, expect,
                         f"rimgc {' '.join(args)}\nstdout: {proc.stdout}\nstderr: {proc.stderr}")
        return proc

    def genscene(self, kind="boxes-on-ground", seed=3, prefix="scene", extra=()):
        self.run_cli("genscene", "--kind", kind, "--seed", str(seed), "--height", "32", "--width", "256",
                     *extra, "-o", self.path(prefix))
        return self.path(prefix)

    def eval_report(self, a, b, calib):
        out = self.path("report.json")
        self.run_cli("eval", a, b, "--calib", calib, "-o", out)
        with open(out) as f:
            return json.load(f)

    def test_round_trip_and_distortion(self):
        p = self.genscene(extra=("--noise", "0.01"))
        self.run_cli("encode", p + "_0.rimg", "--calib", p + "_0.json", "--precision", "0.1",
                     "-o", self.path("a.rimc"))
        self.run_cli("decode", self.path("a.rimc"), "--calib", p + "_0.json", "-o", self.path("a.rimg"))
        report = self.eval_report(p + "_0.rimg", self.path("a.rimg"), p + "_0.json")
        self.assertLessEqual(report["cd_sym"], 0.05)
        self.assertFalse(report["psnr_infinite"])

        # The decoded image is already on the grid: coding it again is exact.
        self.run_cli("encode", self.path("a.rimg"), "--calib", p + "_0.json", "--precision", "0.1",
                     "-o", self.path("b.rimc"))
        self.run_cli("decode", self.path("b.rimc"), "--calib", p + "_0.json", "-o", self.path("b.rimg"))
        with open(self.path("a.rimg"), "rb") as fa, open(self.path("b.rimg"), "rb") as fb:
            self.assertEqual(fa.read(), fb.read())

        same = self.eval_report(self.path("a.rimg"), self.path("a.rimg"), p + "_0.json")
        self.assertEqual(same["cd_sym"], 0.0)
        self.assertTrue(same["psnr_infinite"])

    def test_coarser_precision_costs_fewer_bits(self):
        p = self.genscene(extra=("--noise", "0.02"))
        bpp = {}
        for prec in ("0.02", "0.1"):
            out = self.run_cli("encode", p + "_0.rimg", "--calib", p + "_0.json", "--precision", prec,
                               "-o", self.path(prec + ".rimc")).stdout
            bpp[prec] = float(out.split()[-2])
        self.assertLess(bpp["0.1"], bpp["0.02"])

    def test_temporal_sequence_with_weights(self):
        p = self.genscene(kind="moving-sensor-pair", seed=4)
        bundle = nearest_angle_bundle(4)
        wdir = self.path("weights")
        os.mkdir(wdir)
        with open(os.path.join(wdir, "nearest4.rwgt"), "wb") as f:
            f.write(bundle)
        frames = [p + "_0.rimg", p + "_1.rimg"]
        calibs = [p + "_0.json", p + "_1.json"]
        out = self.run_cli("encode", *frames, "--calib", *calibs, "--predictor", "anchor", "--temporal",
                           "--weights", os.path.join(wdir, "nearest4.rwgt"), "--threads", "4",
                           "-o", self.path("seq.rimc")).stdout
        self.assertEqual(len(out.strip().splitlines()), 2)
        self.run_cli("decode", self.path("seq.rimc"), "--calib", *calibs, "--weights-dir", wdir,
                     "-o", self.path("seq.rimg"))
        for t in (0, 1):
            report = self.eval_report(frames[t], self.path(f"seq_{t}.rimg"), calibs[t])
            self.assertLessEqual(report["cd_sym"], 0.05)

        # Without the bundle the decoder names the digest it needs.
        proc = self.run_cli("decode", self.path("seq.rimc"), "--calib", *calibs, "-o", self.path("x.rimg"),
                            expect=EXIT_UNKNOWN_WEIGHTS)
        self.assertIn(f"{digest(bundle):016x}", proc.stderr)

    def test_error_statuses(self):
        p = self.genscene()
        self.run_cli("encode", p + "_0.rimg", "--calib", p + "_0.json", "-o", self.path("a.rimc"))
        with open(self.path("a.rimc"), "rb") as f:
            data = bytearray(f.read())

        data[len(data) // 2] ^= 0x10
        with open(self.path("bad.rimc"), "wb") as f:
            f.write(data)
        self.run_cli("decode", self.path("bad.rimc"), "--calib", p + "_0.json", "-o", self.path("x.rimg"),
                     expect=EXIT_CORRUPT)

        with open(self.path("short.rimc"), "wb") as f:
            f.write(data[: len(data) // 3])
        self.run_cli("decode", self.path("short.rimc"), "--calib", p + "_0.json", "-o", self.path("x.rimg"),
                     expect=EXIT_CORRUPT)

        other = self.path("other")
        self.run_cli("genscene", "--kind", "planes", "--height", "16", "--width", "64", "-o", other)
        self.run_cli("decode", self.path("a.rimc"), "--calib", other + "_0.json", "-o", self.path("x.rimg"),
                     expect=EXIT_HEADER_MISMATCH)

        self.run_cli("decode", self.path("missing.rimc"), "--calib", p + "_0.json", "-o", self.path("x.rimg"),
                     expect=EXIT_IO)
        self.run_cli("encode", p + "_0.rimg", "-o", self.path("y.rimc"), expect=EXIT_USAGE)
        self.run_cli("frobnicate", expect=EXIT_USAGE)

    def test_bench_table(self):
        out = self.path("bench")
        self.run_cli("bench", "--kind", "boxes-on-ground", "--scenes", "2", "--height", "32", "--width", "256",
                     "--precisions", "0.2,0.02,0.1", "--predictors", "previous,linear", "-o", out)
        with open(os.path.join(out, "rd_table.tsv")) as f:
            rows = list(csv.DictReader(f, delimiter="\t"))
        precisions = [float(r["precision"]) for r in rows]
        self.assertEqual(precisions, sorted(precisions))
        for pred in ("previous", "linear"):
            bpps = [float(r["bpp"]) for r in rows if r["predictor"] == pred]
            self.assertEqual(len(bpps), 3)
            self.assertTrue(all(a > b for a, b in zip(bpps, bpps[1:])), bpps)
        for r in rows:
            self.assertLessEqual(float(r["cd_sym"]), float(r["precision"]) / 2)
        self.assertTrue(os.path.exists(os.path.join(out, "hist_linear_0.1.tsv")))


if __name__ == "__main__":
    RIMGC = sys.argv.pop(1)
    unittest.main()
