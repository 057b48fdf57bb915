#!/usr/bin/env python3
# Copyright (c) 2026 The noisysense Authors. All Rights Reserved
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

"""Rebuild data/ml-100k.tsv (MovieLens 100K: user, item, rating).

Tries the GroupLens archive first. Without direct internet access it falls
back to the copy bundled in the pytorch-widedeep 1.7.0 wheel, which a pip
mirror can serve. Both sources hold the same 100,000 ratings in the original
u.data order. Order matters: ids are densified in order of first appearance.
"""

import argparse
import csv
import hashlib
import io
import subprocess
import sys
import tempfile
import urllib.request
import zipfile
from pathlib import Path

GROUPLENS_URL = "https://files.grouplens.org/datasets/movielens/ml-100k.zip"
WHEEL_SPEC = "pytorch-widedeep==1.7.0"
WHEEL_MEMBER = "pytorch_widedeep/datasets/data/MovieLens100k_data.parquet.brotli"
EXPECTED_MD5 = "edcd853f037729ffcea179ebf83542cd"


def from_grouplens():
    with urllib.request.urlopen(GROUPLENS_URL, timeout=30) as resp:
        archive = zipfile.ZipFile(io.BytesIO(resp.read()))
    rows = []
    for line in archive.read("ml-100k/u.data").decode().splitlines():
        user, item, rating, _ = line.split("\t")
        rows.append((int(user), int(item), int(rating)))
    return rows


def from_wheel():
    import pandas as pd  # needs pyarrow for parquet

    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "--no-deps", "-d", tmp, WHEEL_SPEC],
            check=True,
            stdout=subprocess.DEVNULL,
        )
        wheel = next(Path(tmp).glob("*.whl"))
        with zipfile.ZipFile(wheel) as zf:
            frame = pd.read_parquet(io.BytesIO(zf.read(WHEEL_MEMBER)))
    return [
        (int(u), int(i), int(r))
        for u, i, r in frame[["user_id", "movie_id", "rating"]].itertuples(index=False)
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data" / "ml-100k.tsv"))
    args = parser.parse_args()

    try:
        rows = from_grouplens()
        source = "grouplens"
    except OSError as err:
        print(f"grouplens unavailable ({err}); using the wheel copy", file=sys.stderr)
        rows = from_wheel()
        source = "pytorch-widedeep wheel"

    buf = io.StringIO()
    writer = csv.writer(buf, delimiter="\t", lineterminator="\n")
    writer.writerow(["user", "item", "rating"])
    writer.writerows(rows)
    data = buf.getvalue().encode()

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(data)
    digest = hashlib.md5(data).hexdigest()
    print(f"wrote {len(rows)} ratings from {source} to {out} (md5 {digest})")
    if digest != EXPECTED_MD5:
        print(f"warning: md5 differs from the checked-in copy ({EXPECTED_MD5})", file=sys.stderr)


if __name__ == "__main__":
    main()
