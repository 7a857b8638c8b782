#!/usr/bin/env python3
"""Convert the 5,000-image MNIST training subset shipped in the mlxtend wheel
(BSD-3-Clause; 500 images per digit) into gzip-compressed IDX files.

Usage:
    pip download --no-deps mlxtend -d /tmp/mlxtend
    python3 scripts/mnist_subset_to_idx.py /tmp/mlxtend/mlxtend-*.whl data/mnist-5k
"""
import gzip
import struct
import sys
import zipfile
from pathlib import Path

MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def main(wheel: str, out_dir: str) -> None:
    raw = gzip.decompress(zipfile.ZipFile(wheel).read(MEMBER)).decode()
    rows = [line.split(",") for line in raw.strip().split("\n")]
    pixels = bytearray()
    labels = bytearray()
    for row in rows:
        values = [int(float(v)) for v in row]
        assert len(values) == 785
        pixels.extend(values[:-1])
        labels.append(values[-1])
    n = len(rows)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    images = struct.pack(">IIII", 0x00000803, n, 28, 28) + bytes(pixels)
    label_file = struct.pack(">II", 0x00000801, n) + bytes(labels)
    for name, payload in [
        ("train-images-idx3-ubyte.gz", images),
        ("train-labels-idx1-ubyte.gz", label_file),
    ]:
        with open(out / name, "wb") as fh:
            fh.write(gzip.compress(payload, mtime=0))
    print(f"wrote {n} images to {out}")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
