"""Interpolating Nadaraya-Watson classifier with a singular inverse-distance kernel.

The predictor labels a query x by the sign of sum_i y_i * ||x - x_i||^(-beta),
returning the stored label verbatim when x coincides with a training point.
Because the weight diverges at zero distance, the rule interpolates every
training label for any beta > 0.

All score arithmetic happens in the log domain: per-class accumulations use
log-sum-exp with max-subtraction, so exponents like beta = 400 neither
overflow nor underflow. Distances enter as 0.5*log(sum of squared diffs);
no square root is ever taken before the log.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "TrainingSet",
    "LabeledPoint",
    "PredictorConfig",
    "ScoreResult",
    "raw_score",
    "predict",
    "predict_batch",
    "knn_predict",
    "log_distance_matrix",
    "signs_from_log_distances",
]

# Serializes BLAS-backed matrix products so results do not depend on how many
# worker threads call into the kernel concurrently.
_BLAS_LOCK = threading.Lock()

# Above this input dimension the pairwise-difference tensor gets too large and
# the distance matrix is computed via a matrix product instead.
_DIRECT_DIFF_MAX_DIM = 8

# Entries where the product formula loses too much precision (squared distance
# below this fraction of the coordinate scale) are recomputed from explicit
# differences.
_REFINE_REL = 4e-6

_LN2 = math.log(2.0)


class LabeledPoint(NamedTuple):
    """One training example: coordinates plus a label in {-1, +1}."""

    x: np.ndarray
    y: int


@dataclass(frozen=True)
class TrainingSet:
    """Immutable labeled sample; X has shape (m, d), y holds -1/+1 labels."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        X = np.ascontiguousarray(self.X, dtype=np.float64)
        y = np.asarray(self.y)
        if X.ndim != 2:
            raise ValueError(f"X must be 2-D (m, d), got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise ValueError(f"y must have shape ({X.shape[0]},), got {y.shape}")
        if X.shape[1] < 1:
            raise ValueError("points must have at least one coordinate")
        if not np.isfinite(X).all():
            raise ValueError("training coordinates must be finite")
        y = y.astype(np.int64)
        if not np.isin(y, (-1, 1)).all():
            raise ValueError("labels must be -1 or +1 exactly")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def m(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.m

    def __getitem__(self, i: int) -> LabeledPoint:
        return LabeledPoint(self.X[i], int(self.y[i]))

    def with_labels(self, y: np.ndarray) -> "TrainingSet":
        return TrainingSet(self.X, y)

    @classmethod
    def from_points(cls, points: "list[tuple]") -> "TrainingSet":
        coords = np.array([np.atleast_1d(np.asarray(p[0], dtype=np.float64)) for p in points])
        labels = np.array([p[1] for p in points])
        return cls(coords, labels)


@dataclass(frozen=True)
class PredictorConfig:
    """Kernel exponent beta > 0 plus the tie-break label for exact zero scores."""

    beta: float
    tie_break: int = 1

    def __post_init__(self) -> None:
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise ValueError(f"beta must be a positive finite real, got {self.beta}")
        if self.tie_break not in (-1, 1):
            raise ValueError(f"tie_break must be -1 or +1, got {self.tie_break}")


class ScoreResult(NamedTuple):
    """Sign and log magnitude of the kernel score at one query.

    sign is 0 only when the positive and negative accumulations are exactly
    equal; log_magnitude is -inf in that case and +inf on an exact hit.
    """

    sign: int
    log_magnitude: float
    exact_hit: int | None


def _validate_query(x: np.ndarray, dim: int) -> np.ndarray:
    x = np.ascontiguousarray(np.atleast_1d(x), dtype=np.float64)
    if x.shape != (dim,):
        raise ValueError(f"query has shape {x.shape}, training dimension is {dim}")
    if not np.isfinite(x).all():
        raise ValueError("query coordinates must be finite")
    return x


def _scaled_log_distance(a: np.ndarray, b: np.ndarray) -> float:
    """log ||a - b|| via rescaling; assumes a != b. Safe when the squared
    difference under- or overflows double precision."""
    scale = max(float(np.abs(a).max()), float(np.abs(b).max()))
    z = a / scale - b / scale
    return math.log(scale) + 0.5 * math.log(float(z @ z))


def _log_norms_to_point(X: np.ndarray, x: np.ndarray) -> np.ndarray:
    """log Euclidean distance from each row of X to x (no exact coincidences)."""
    diffs = X - x
    sumsq = np.einsum("ij,ij->i", diffs, diffs)
    with np.errstate(divide="ignore"):
        out = 0.5 * np.log(sumsq)
    for i in np.flatnonzero((sumsq == 0.0) | ~np.isfinite(sumsq)):
        out[i] = _scaled_log_distance(X[i], x)
    return out


def _logsumexp(a: np.ndarray) -> float:
    """Stable log(sum(exp(a))) for a 1-D array; -inf when empty."""
    if a.size == 0:
        return -math.inf
    amax = float(a.max())
    return amax + math.log(float(np.exp(a - amax).sum()))


def _log1mexp(delta: float) -> float:
    """log(1 - exp(-delta)) for delta > 0, accurate for small and large delta."""
    if delta == math.inf:
        return 0.0
    if delta > _LN2:
        return math.log1p(-math.exp(-delta))
    return math.log(-math.expm1(-delta))


def raw_score(x: np.ndarray, train: TrainingSet, beta: float) -> ScoreResult:
    """Evaluate the signed kernel accumulation at x in the log domain.

    Returns the exact-hit branch when x equals a training point bitwise;
    otherwise accumulates the positive and negative classes separately via
    log-sum-exp and compares them.
    """
    if not (math.isfinite(beta) and beta > 0):
        raise ValueError(f"beta must be a positive finite real, got {beta}")
    if train.m == 0:
        raise ValueError("training set is empty")
    x = _validate_query(x, train.dim)

    equal = np.all(train.X == x, axis=1)
    if equal.any():
        hit = int(np.flatnonzero(equal)[0])
        return ScoreResult(int(train.y[hit]), math.inf, hit)

    logd = _log_norms_to_point(train.X, x)
    logw = -beta * logd
    pos = _logsumexp(logw[train.y == 1])
    neg = _logsumexp(logw[train.y == -1])
    if pos == neg:
        return ScoreResult(0, -math.inf, None)
    hi, lo = (pos, neg) if pos > neg else (neg, pos)
    return ScoreResult(1 if pos > neg else -1, hi + _log1mexp(hi - lo), None)


def predict(x: np.ndarray, train: TrainingSet, cfg: PredictorConfig) -> int:
    """Classify one query; exact zero scores resolve to cfg.tie_break."""
    score = raw_score(x, train, cfg.beta)
    return score.sign if score.sign != 0 else cfg.tie_break


def _squared_distance_chunk(Q: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Squared distances Q x X; precision-refined where cancellation bites."""
    if Q.shape[1] <= _DIRECT_DIFF_MAX_DIM:
        diffs = Q[:, None, :] - X[None, :, :]
        return np.einsum("nmd,nmd->nm", diffs, diffs)

    qq = np.einsum("ij,ij->i", Q, Q)
    tt = np.einsum("ij,ij->i", X, X)
    with _BLAS_LOCK:
        cross = Q @ X.T
    sumsq = qq[:, None] + tt[None, :] - 2.0 * cross
    np.maximum(sumsq, 0.0, out=sumsq)
    scale = qq[:, None] + tt[None, :]
    for i, j in zip(*np.nonzero(sumsq <= _REFINE_REL * scale)):
        diff = Q[i] - X[j]
        sumsq[i, j] = float(diff @ diff)
    return sumsq


def log_distance_matrix(Q: np.ndarray, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-pair log distances plus exact-hit bookkeeping.

    Returns (logd, hit) where logd[i, j] = log||Q[i]-X[j]|| (-inf at bitwise
    coincidences) and hit[i] is the lowest j with Q[i] == X[j] bitwise, or -1.
    """
    n, m = Q.shape[0], X.shape[0]
    logd = np.empty((n, m))
    hit = np.full(n, -1, dtype=np.int64)
    # chunk rows to bound the (chunk, m, d) or (chunk, m) temporaries
    chunk = max(1, int(4e6 // max(m, 1)))
    for lo in range(0, n, chunk):
        hi = lo + chunk
        q = Q[lo:hi]
        sumsq = _squared_distance_chunk(q, X)
        with np.errstate(divide="ignore"):
            block = 0.5 * np.log(sumsq)
        # zero entries: either a true coincidence or squared-diff underflow
        for i, j in zip(*np.nonzero(sumsq == 0.0)):
            if np.array_equal(q[i], X[j]):
                if hit[lo + i] < 0:
                    hit[lo + i] = j
                block[i, j] = -np.inf
            else:
                block[i, j] = _scaled_log_distance(q[i], X[j])
        for i, j in zip(*np.nonzero(~np.isfinite(sumsq))):
            block[i, j] = _scaled_log_distance(q[i], X[j])
        logd[lo:hi] = block
    return logd, hit


def _masked_logsumexp(logw: np.ndarray, mask: np.ndarray) -> np.ndarray:
    if not mask.any():
        return np.full(logw.shape[0], -np.inf)
    a = logw[:, mask]
    amax = a.max(axis=1)
    return amax + np.log(np.exp(a - amax[:, None]).sum(axis=1))


def signs_from_log_distances(
    logd: np.ndarray,
    hit: np.ndarray,
    y: np.ndarray,
    beta: float,
) -> np.ndarray:
    """Score signs in {-1, 0, +1} for precomputed log distances.

    Rows with an exact hit short-circuit to that training label; the rest
    compare per-class log-sum-exp accumulations of -beta * logd.
    """
    signs = np.empty(logd.shape[0], dtype=np.int64)
    hits = hit >= 0
    if hits.any():
        signs[hits] = y[hit[hits]]
    rest = ~hits
    if rest.any():
        logw = -beta * logd[rest]
        pos = _masked_logsumexp(logw, y == 1)
        neg = _masked_logsumexp(logw, y == -1)
        signs[rest] = np.sign(pos - neg).astype(np.int64)
    return signs


def predict_batch(Q: np.ndarray, train: TrainingSet, cfg: PredictorConfig) -> np.ndarray:
    """Classify every row of Q; order preserved, equivalent to mapping predict.

    A single invalid query fails the whole batch with its index named.
    """
    if train.m == 0:
        raise ValueError("training set is empty")
    Q = np.asarray(Q, dtype=np.float64)
    if Q.size == 0:
        return np.empty(0, dtype=np.int64)
    if Q.ndim != 2 or Q.shape[1] != train.dim:
        raise ValueError(f"queries must have shape (n, {train.dim}), got {Q.shape}")
    finite = np.isfinite(Q).all(axis=1)
    if not finite.all():
        raise ValueError(f"query {int(np.flatnonzero(~finite)[0])} has non-finite coordinates")
    Q = np.ascontiguousarray(Q)
    logd, hit = log_distance_matrix(Q, train.X)
    signs = signs_from_log_distances(logd, hit, train.y, cfg.beta)
    signs[signs == 0] = cfg.tie_break
    return signs


def knn_predict(x: np.ndarray, train: TrainingSet, k: int) -> int:
    """Majority vote of the k nearest training labels under Euclidean distance.

    Distance ties break toward the lower training index; vote ties return +1.
    """
    if train.m == 0:
        raise ValueError("training set is empty")
    if not (1 <= k <= train.m):
        raise ValueError(f"k must be in [1, {train.m}], got {k}")
    x = _validate_query(x, train.dim)
    diffs = train.X - x
    sumsq = np.einsum("ij,ij->i", diffs, diffs)
    order = np.argsort(sumsq, kind="stable")
    vote = int(train.y[order[:k]].sum())
    return 1 if vote >= 0 else -1
