"""Shared test helpers: MNIST file discovery.

Real-data tests look for the four standard IDX files (optionally gzipped)
under $MNIST_DIR, falling back to ./data/mnist relative to the repo root, and
skip when they are absent.
"""

import os
from pathlib import Path

_FILES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}


def mnist_paths():
    """Paths of the four MNIST IDX files, or None when any is missing."""
    root = Path(os.environ.get("MNIST_DIR", Path(__file__).resolve().parents[1] / "data" / "mnist"))
    found = {}
    for key, stem in _FILES.items():
        for candidate in (root / stem, root / (stem + ".gz")):
            if candidate.is_file():
                found[key] = candidate
                break
        else:
            return None
    return found
