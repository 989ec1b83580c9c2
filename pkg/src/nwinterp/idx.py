"""IDX file ingestion for the MNIST 0-vs-1 binary classification task.

The IDX header is a 4-byte big-endian magic (0x00000803 for 3-D unsigned-byte
image tensors, 0x00000801 for 1-D label tensors) followed by one 4-byte
big-endian size per dimension and the raw payload bytes. Parsing is
fail-closed: any size mismatch raises instead of returning partial data.
Paths ending in ".gz" are decompressed transparently.
"""

from __future__ import annotations

import gzip
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .predictor import TrainingSet

__all__ = ["IdxTensor", "IdxFormatError", "load_idx", "mnist_binary_subset"]

MAGIC_IMAGES = 0x00000803
MAGIC_LABELS = 0x00000801
_NDIM_BY_MAGIC = {MAGIC_IMAGES: 3, MAGIC_LABELS: 1}


class IdxFormatError(ValueError):
    """Raised for malformed IDX headers or payloads."""


@dataclass(frozen=True)
class IdxTensor:
    """Raw IDX contents: dimension sizes plus the flat row-major byte payload."""

    dims: tuple[int, ...]
    data: np.ndarray

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=np.uint8)
        expected = int(np.prod(self.dims)) if self.dims else 0
        if data.ndim != 1 or data.size != expected:
            raise IdxFormatError(
                f"payload size {data.size} does not match dims {self.dims} ({expected} bytes)"
            )
        data.setflags(write=False)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "data", data)


def load_idx(path) -> IdxTensor:
    """Parse an IDX file (optionally gzip-compressed) into an IdxTensor."""
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 4:
        raise IdxFormatError(f"{path}: file too short for an IDX magic number")
    magic = int.from_bytes(raw[:4], "big")
    if magic not in _NDIM_BY_MAGIC:
        raise IdxFormatError(f"{path}: unknown IDX magic 0x{magic:08x}")
    ndim = _NDIM_BY_MAGIC[magic]
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise IdxFormatError(f"{path}: truncated header, need {header} bytes, have {len(raw)}")
    dims = tuple(
        int.from_bytes(raw[4 + 4 * k : 8 + 4 * k], "big") for k in range(ndim)
    )
    if any(d < 1 for d in dims):
        raise IdxFormatError(f"{path}: nonpositive dimension in header {dims}")
    expected = int(np.prod(dims))
    actual = len(raw) - header
    if actual != expected:
        raise IdxFormatError(
            f"{path}: payload has {actual} bytes, header {dims} requires {expected}"
        )
    return IdxTensor(dims, np.frombuffer(raw, dtype=np.uint8, offset=header))


def mnist_binary_subset(
    images: IdxTensor,
    labels: IdxTensor,
    digit_neg: int,
    digit_pos: int,
) -> TrainingSet:
    """Select two digit classes and build a +/-1 training set.

    Keeps file order, maps digit_neg to -1 and digit_pos to +1, flattens each
    image to a vector, and scales pixels to [0, 1] by dividing by 255.
    """
    if len(images.dims) != 3:
        raise ValueError(f"images tensor must be 3-D, got dims {images.dims}")
    if len(labels.dims) != 1:
        raise ValueError(f"labels tensor must be 1-D, got dims {labels.dims}")
    if images.dims[0] != labels.dims[0]:
        raise ValueError(
            f"image count {images.dims[0]} does not match label count {labels.dims[0]}"
        )
    for digit in (digit_neg, digit_pos):
        if not (0 <= digit <= 9):
            raise ValueError(f"digits must lie in 0..9, got {digit}")
    if digit_neg == digit_pos:
        raise ValueError(f"digits must be distinct, got {digit_neg} twice")

    lab = labels.data
    keep = (lab == digit_neg) | (lab == digit_pos)
    if not (lab == digit_neg).any() or not (lab == digit_pos).any():
        raise ValueError(f"digit pair ({digit_neg}, {digit_pos}) absent from the data")
    n, rows, cols = images.dims
    flat = images.data.reshape(n, rows * cols)[keep].astype(np.float64) / 255.0
    y = np.where(lab[keep] == digit_neg, -1, 1)
    return TrainingSet(flat, y)
