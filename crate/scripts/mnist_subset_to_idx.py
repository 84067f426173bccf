#!/usr/bin/env python3
"""Convert the 5000-image MNIST sample shipped in the mlxtend wheel
(mlxtend/data/data/mnist_5k.csv.gz, 500 images per class) into gzipped
IDX files: a 4000-image train split and a disjoint 1000-image test split,
both class-balanced.

usage: mnist_subset_to_idx.py <mnist_5k.csv.gz> <out_dir>
"""
import gzip
import random
import struct
import sys
from pathlib import Path


def write_idx(path, magic, dims, payload):
    header = struct.pack(">I", magic) + b"".join(struct.pack(">I", d) for d in dims)
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(header + bytes(payload))


def main():
    src, out = Path(sys.argv[1]), Path(sys.argv[2])
    out.mkdir(parents=True, exist_ok=True)
    by_class = {c: [] for c in range(10)}
    for line in gzip.decompress(src.read_bytes()).decode().strip().split("\n"):
        fields = line.split(",")
        pixels = [int(float(v)) for v in fields[:-1]]
        assert len(pixels) == 784
        by_class[int(fields[-1])].append(pixels)

    train, test = [], []
    for c in range(10):
        rows = by_class[c]
        train += [(p, c) for p in rows[:400]]
        test += [(p, c) for p in rows[400:]]
    rng = random.Random(0)
    rng.shuffle(train)
    rng.shuffle(test)

    for name, split in (("train", train), ("t10k", test)):
        pixels = [v for p, _ in split for v in p]
        labels = [c for _, c in split]
        write_idx(out / f"{name}-images-idx3-ubyte.gz", 2051, [len(split), 28, 28], pixels)
        write_idx(out / f"{name}-labels-idx1-ubyte.gz", 2049, [len(split)], labels)


if __name__ == "__main__":
    main()
