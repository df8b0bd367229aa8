#!/usr/bin/env python3
# Copyright 2026 The Emojinize Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Regenerates data/unicode/ from a Unicode Character Database snapshot.

Inputs:
  --ucd        directory of the `ucd-full` npm package (JSON rendering of the UCD)
  --emoji-test the matching emoji-test.txt from unicode.org

The JSON rendering is written back out in the UCD's own text syntax so the
C++ loader only has to understand one format.
"""

import argparse
import json
import pathlib


def fmt_range(rng):
    return rng[0] if len(rng) == 1 else f"{rng[0]}..{rng[1]}"


def write_props(path, header, rows):
    with open(path, "w", encoding="utf-8") as out:
        out.write(header)
        for rng, value in rows:
            out.write(f"{fmt_range(rng):<14} ; {value}\n")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--ucd", required=True)
    ap.add_argument("--emoji-test", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--version", default="15.1.0")
    args = ap.parse_args()

    ucd = pathlib.Path(args.ucd)
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    banner = f"# Unicode {args.version}\n"

    gbp = json.loads((ucd / "auxiliary/GraphemeBreakProperty.json").read_text())
    write_props(out / "GraphemeBreakProperty.txt",
                banner + "# Grapheme_Cluster_Break values; unlisted code points are Other.\n",
                [(r["range"], r["property"]) for r in gbp["GraphemeBreakProperty"]])

    emoji = json.loads((ucd / "emoji/emoji-data.json").read_text())
    write_props(out / "emoji-data.txt",
                banner + "# Binary emoji properties (UTS #51).\n",
                [(r["range"], r["property"]) for r in emoji["emoji-data"]])

    dcp = json.loads((ucd / "DerivedCoreProperties.json").read_text())
    write_props(out / "DerivedCoreProperties-InCB.txt",
                banner + "# Indic_Conjunct_Break subset of DerivedCoreProperties.txt.\n",
                [(r["range"], "InCB; " + r["syllabicCategory"])
                 for r in dcp["DerivedCoreProperties"] if r["property"] == "InCB"])

    tests = json.loads((ucd / "auxiliary/GraphemeBreakTest.json").read_text())
    with open(out / "GraphemeBreakTest.txt", "w", encoding="utf-8") as f:
        f.write(banner + "# Extended grapheme cluster break test vectors.\n")
        for line in tests["GraphemeBreakTest"]:
            f.write(line + "\n")

    (out / "emoji-test.txt").write_text(
        pathlib.Path(args.emoji_test).read_text(encoding="utf-8"), encoding="utf-8")


if __name__ == "__main__":
    main()
