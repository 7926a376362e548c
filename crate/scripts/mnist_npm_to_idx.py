#!/usr/bin/env python3
"""Rebuild MNIST IDX files from the `mnist` npm package.

The npm package `mnist` (https://www.npmjs.com/package/mnist) bundles a real
10,000-sample subset of the MNIST training set as per-digit JSON files with
pixel intensities rounded to three decimals of byte/255. The rounding is
lossless for recovery: |round(v * 255) - original_byte| < 0.5 always, so the
exact original bytes come back.

This script writes the subset as a standard IDX pair
(train-images-idx3-ubyte / train-labels-idx1-ubyte) with a fixed, seeded
interleaving of the per-digit files so that any prefix of the output is
class-mixed, and with a 5 as the first label (matching the canonical
training file, which some sanity checks rely on).

Usage:
    npm install mnist
    python3 scripts/mnist_npm_to_idx.py node_modules/mnist/src/digits data/mnist
"""

import json
import random
import struct
import sys
from pathlib import Path

SEED = 20260810


def main(src_dir: str, out_dir: str) -> None:
    src = Path(src_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    samples = []  # (label, bytes)
    for digit in range(10):
        data = json.loads((src / f"{digit}.json").read_text())["data"]
        assert len(data) % 784 == 0, f"digit {digit}: length {len(data)}"
        for i in range(len(data) // 784):
            px = data[i * 784 : (i + 1) * 784]
            raw = bytearray(784)
            for j, v in enumerate(px):
                b = round(v * 255)
                assert abs(v * 255 - b) < 0.5, f"ambiguous pixel value {v}"
                raw[j] = b
            samples.append((digit, bytes(raw)))

    assert len(samples) == 10000, f"expected 10000 samples, got {len(samples)}"

    rng = random.Random(SEED)
    rng.shuffle(samples)
    first_five = next(i for i, (label, _) in enumerate(samples) if label == 5)
    samples[0], samples[first_five] = samples[first_five], samples[0]

    images = out / "train-images-idx3-ubyte"
    labels = out / "train-labels-idx1-ubyte"
    with images.open("wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(samples), 28, 28))
        for _, raw in samples:
            f.write(raw)
    with labels.open("wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(samples)))
        f.write(bytes(label for label, _ in samples))

    hist = [0] * 10
    for label, _ in samples:
        hist[label] += 1
    print(f"wrote {images} and {labels}")
    print(f"class histogram: {hist}")
    print(f"first 10 labels: {[l for l, _ in samples[:10]]}")


if __name__ == "__main__":
    if len(sys.argv) != 3:
        print(__doc__)
        sys.exit(2)
    main(sys.argv[1], sys.argv[2])
