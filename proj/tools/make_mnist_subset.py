#!/usr/bin/env python3
"""Cut the bundled MNIST subset out of the full IDX files.

The npm package `mnist-data` ships the original four IDX files:

    npm pack mnist-data && tar xzf mnist-data-*.tgz
    python3 tools/make_mnist_subset.py package/data data/mnist

Keeps the first --train-count training and --test-count test images.
"""
import argparse
import struct
from pathlib import Path


def read_idx(images_path, labels_path):
    img = Path(images_path).read_bytes()
    lab = Path(labels_path).read_bytes()
    magic, n, rows, cols = struct.unpack(">IIII", img[:16])
    if magic != 0x803:
        raise SystemExit(f"{images_path}: bad magic {magic:#x}")
    lmagic, ln = struct.unpack(">II", lab[:8])
    if lmagic != 0x801 or ln != n:
        raise SystemExit(f"{labels_path}: bad magic or count")
    size = rows * cols
    return [(img[16 + i * size:16 + (i + 1) * size], lab[8 + i]) for i in range(n)]


def write_idx(images_path, labels_path, samples):
    with open(images_path, "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(samples), 28, 28))
        for px, _ in samples:
            f.write(px)
    with open(labels_path, "wb") as f:
        f.write(struct.pack(">II", 0x801, len(samples)))
        f.write(bytes(label for _, label in samples))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("idx_dir", help="directory with the four original IDX files")
    ap.add_argument("out_dir")
    ap.add_argument("--train-count", type=int, default=10000)
    ap.add_argument("--test-count", type=int, default=2000)
    args = ap.parse_args()

    src = Path(args.idx_dir)
    train = read_idx(src / "train-images-idx3-ubyte", src / "train-labels-idx1-ubyte")
    test = read_idx(src / "t10k-images-idx3-ubyte", src / "t10k-labels-idx1-ubyte")
    train = train[:args.train_count]
    test = test[:args.test_count]

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_idx(out / "train-images-idx3-ubyte", out / "train-labels-idx1-ubyte", train)
    write_idx(out / "t10k-images-idx3-ubyte", out / "t10k-labels-idx1-ubyte", test)
    print(f"wrote {len(train)} train / {len(test)} test images to {out}")


if __name__ == "__main__":
    main()
