#!/usr/bin/env python3
"""Regenerates the bundled handwritten-digits files under data/.

The images are scikit-learn's digits set (the UCI optical recognition of
handwritten digits data): 1797 grayscale 8x8 images, 10 classes. They are
rescaled to the 0..255 byte range and written in MNIST IDX layout so the
stock loader reads them unchanged. The train/test split is a fixed seeded
shuffle; running this script always reproduces identical bytes.
"""

import struct
from pathlib import Path

import numpy as np
from sklearn.datasets import load_digits

OUT = Path(__file__).resolve().parent.parent / "data"
TEST_COUNT = 500
SEED = 7


def write_idx_images(path: Path, images: np.ndarray) -> None:
    n, rows, cols = images.shape
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, n, rows, cols))
        f.write(images.astype(np.uint8).tobytes())


def write_idx_labels(path: Path, labels: np.ndarray) -> None:
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(labels.astype(np.uint8).tobytes())


def main() -> None:
    digits = load_digits()
    images = np.round(digits.images * (255.0 / 16.0)).astype(np.uint8)
    labels = digits.target.astype(np.uint8)

    rng = np.random.RandomState(SEED)
    order = rng.permutation(len(images))
    images, labels = images[order], labels[order]

    test_x, test_y = images[:TEST_COUNT], labels[:TEST_COUNT]
    train_x, train_y = images[TEST_COUNT:], labels[TEST_COUNT:]

    OUT.mkdir(exist_ok=True)
    write_idx_images(OUT / "digits-train-images-idx3-ubyte", train_x)
    write_idx_labels(OUT / "digits-train-labels-idx1-ubyte", train_y)
    write_idx_images(OUT / "digits-test-images-idx3-ubyte", test_x)
    write_idx_labels(OUT / "digits-test-labels-idx1-ubyte", test_y)
    print(f"wrote {len(train_x)} train / {len(test_x)} test samples to {OUT}")


if __name__ == "__main__":
    main()
