"""Monte Carlo estimation of the clean classification error over (beta, p) grids.

Every repetition owns four RNG streams derived from (base_seed, purpose, rep):
training points, input noise, label flips, and test points. Streams never
depend on beta or p, so all grid cells of a repetition share the same draws
and the whole sweep is bit-reproducible regardless of the number of worker
threads (capped by the NW_THREADS environment variable).

The expensive part of a repetition, the test-by-train log-distance matrix, is
computed once and reused across the whole (beta, p) grid. Each repetition also
runs a built-in self check: predictions on a subsample of the (noisy) training
inputs must reproduce the noisy labels exactly, so the error against clean
labels equals the realized flip rate on that subsample.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .predictor import TrainingSet, log_distance_matrix, signs_from_log_distances
from .rng import SeededRng
from .synth import add_gaussian_input_noise

__all__ = [
    "ExperimentConfig",
    "CurveRow",
    "ErrorCurve",
    "SigmaBest",
    "EmpiricalPool",
    "clean_error_estimate",
    "beta_sweep",
    "noisy_input_sweep",
    "profile_classification",
    "worker_count",
]

STREAM_TRAIN = "train-points"
STREAM_INPUT_NOISE = "input-noise"
STREAM_FLIPS = "label-flips"
STREAM_TEST = "test-points"
STREAM_SELF_CHECK = "self-check"

_SELF_CHECK_POINTS = 32


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep request: a distribution plus the (beta, p) grid and sizes."""

    distribution: object
    m: int
    p_values: tuple[float, ...]
    betas: tuple[float, ...]
    reps: int = 50
    n_test: int = 1000
    base_seed: int = 0
    input_noise_sigma: float = 0.0
    ground_truth: object | None = None
    tie_break: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "p_values", tuple(float(p) for p in self.p_values))
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if not self.p_values:
            raise ValueError("p_values must be nonempty")
        if not self.betas:
            raise ValueError("betas must be nonempty")
        for p in self.p_values:
            if not (0.0 < p < 0.49):
                raise ValueError(f"noise levels must lie in (0, 0.49), got {p}")
        for b in self.betas:
            if b <= 0.0:
                raise ValueError(f"betas must be positive, got {b}")
        if self.reps < 1:
            raise ValueError(f"reps must be >= 1, got {self.reps}")
        if self.n_test < 1:
            raise ValueError(f"n_test must be >= 1, got {self.n_test}")
        if self.input_noise_sigma < 0.0:
            raise ValueError(f"input_noise_sigma must be >= 0, got {self.input_noise_sigma}")
        if self.tie_break not in (-1, 1):
            raise ValueError(f"tie_break must be -1 or +1, got {self.tie_break}")

    @property
    def rng(self) -> SeededRng:
        return SeededRng(self.base_seed)


@dataclass(frozen=True)
class CurveRow:
    beta: float
    p: float
    m: int
    reps: int
    mean_error: float
    ci_low: float
    ci_high: float
    tie_count: int


@dataclass(frozen=True)
class ErrorCurve:
    """Per-(beta, p) mean clean error with a 95% CI, sorted by (p, beta)."""

    rows: tuple[CurveRow, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "rows", tuple(self.rows))
        for row in self.rows:
            if not (0.0 <= row.ci_low <= row.mean_error <= row.ci_high <= 1.0):
                raise ValueError(f"malformed confidence interval in row {row}")

    def row(self, beta: float, p: float) -> CurveRow:
        for r in self.rows:
            if r.beta == beta and r.p == p:
                return r
        raise KeyError(f"no row for beta={beta}, p={p}")

    def p_levels(self) -> "list[float]":
        return sorted({r.p for r in self.rows})

    def beta_levels(self) -> "list[float]":
        return sorted({r.beta for r in self.rows})

    def best_beta(self, p: float) -> float:
        """Beta with the smallest mean error at noise level p (lowest wins ties)."""
        rows = sorted((r for r in self.rows if r.p == p), key=lambda r: r.beta)
        if not rows:
            raise KeyError(f"no rows at p={p}")
        return min(rows, key=lambda r: r.mean_error).beta


@dataclass(frozen=True)
class EmpiricalPool:
    """Fixed labeled pools standing in for a distribution (e.g. image data).

    Training sets subsample the train pool without replacement; test queries
    subsample the disjoint test pool, whose stored labels act as ground truth.
    """

    train_pool: TrainingSet
    test_pool: TrainingSet

    def __post_init__(self) -> None:
        if self.train_pool.dim != self.test_pool.dim:
            raise ValueError("train and test pools must share a dimension")

    @property
    def dim(self) -> int:
        return self.train_pool.dim

    def sample_train(self, m: int, rng: np.random.Generator) -> TrainingSet:
        if m > self.train_pool.m:
            raise ValueError(f"m={m} exceeds the train pool size {self.train_pool.m}")
        idx = rng.choice(self.train_pool.m, size=m, replace=False)
        return TrainingSet(self.train_pool.X[idx], self.train_pool.y[idx])

    def sample_test(self, n: int, rng: np.random.Generator) -> TrainingSet:
        if n > self.test_pool.m:
            raise ValueError(f"n_test={n} exceeds the test pool size {self.test_pool.m}")
        idx = rng.choice(self.test_pool.m, size=n, replace=False)
        return TrainingSet(self.test_pool.X[idx], self.test_pool.y[idx])


def worker_count() -> int:
    """Worker cap from NW_THREADS; defaults to 1 when unset."""
    raw = os.environ.get("NW_THREADS")
    if raw is None:
        return 1
    try:
        value = int(raw)
    except ValueError:
        value = 0
    if value < 1:
        raise ValueError(f"NW_THREADS must be a positive integer, got {raw!r}")
    return value


def _self_check(logd_chk, hit_chk, check_idx, y_noisy, y_clean, beta):
    """Predictions on training inputs must reproduce the noisy labels, making
    the error against clean labels exactly the subsample's flip rate."""
    signs = signs_from_log_distances(logd_chk, hit_chk, y_noisy, beta)
    expected = y_noisy[hit_chk]
    if not np.array_equal(signs, expected):
        raise RuntimeError("interpolation self-check failed: training input mispredicted")
    own = hit_chk == check_idx  # rows whose first exact match is themselves
    mispredicted = signs[own] != y_clean[check_idx[own]]
    flipped = y_noisy[check_idx[own]] != y_clean[check_idx[own]]
    if not np.array_equal(mispredicted, flipped):
        raise RuntimeError("interpolation self-check failed: flip-rate identity broken")


def _rep_errors(cfg: ExperimentConfig, rep: int, predict_override=None):
    """All (p, beta) cell results for one repetition.

    Returns {(p, beta): (error, tie_count)}. Cell values do not depend on
    which other cells are evaluated, so singleton and full-grid calls agree
    bit-for-bit.
    """
    root = cfg.rng
    train = cfg.distribution.sample_train(cfg.m, root.stream(STREAM_TRAIN, rep))
    y_clean = train.y
    if cfg.input_noise_sigma > 0.0:
        train = add_gaussian_input_noise(
            train, cfg.input_noise_sigma, root.stream(STREAM_INPUT_NOISE, rep)
        )
    test = cfg.distribution.sample_test(cfg.n_test, root.stream(STREAM_TEST, rep))
    truth = cfg.ground_truth
    y_truth = truth.labels(test.X) if truth is not None else test.y
    flip_u = root.stream(STREAM_FLIPS, rep).random(cfg.m)

    logd = hit = logd_chk = hit_chk = check_idx = None
    if predict_override is None:
        logd, hit = log_distance_matrix(test.X, train.X)
        n_chk = min(_SELF_CHECK_POINTS, cfg.m)
        check_idx = np.sort(
            root.stream(STREAM_SELF_CHECK, rep).choice(cfg.m, size=n_chk, replace=False)
        )
        logd_chk, hit_chk = log_distance_matrix(train.X[check_idx], train.X)

    results = {}
    for p in cfg.p_values:
        y_noisy = np.where(flip_u < p, -y_clean, y_clean)
        if predict_override is not None:
            preds = np.asarray(predict_override(test.X, train.with_labels(y_noisy)))
            results.update({(p, b): (float(np.mean(preds != y_truth)), 0) for b in cfg.betas})
            continue
        _self_check(logd_chk, hit_chk, check_idx, y_noisy, y_clean, cfg.betas[0])
        for beta in cfg.betas:
            signs = signs_from_log_distances(logd, hit, y_noisy, beta)
            ties = int(np.count_nonzero(signs == 0))
            preds = np.where(signs == 0, cfg.tie_break, signs)
            results[(p, beta)] = (float(np.mean(preds != y_truth)), ties)
    return results


def clean_error_estimate(
    cfg: ExperimentConfig,
    beta: float,
    p: float,
    rep_index: int,
    predict_override=None,
) -> float:
    """Clean test error of one repetition at a single (beta, p) cell.

    ``predict_override(X_test, noisy_train) -> labels`` substitutes a
    different predictor (diagnostics only).
    """
    cell = replace(cfg, betas=(beta,), p_values=(p,))
    return _rep_errors(cell, rep_index, predict_override)[(p, beta)][0]


def beta_sweep(cfg: ExperimentConfig) -> ErrorCurve:
    """Mean clean error with 95% CI over the full (beta, p) grid.

    Repetitions are independent tasks on their own streams; results are
    aggregated by repetition index, so the curve is identical for any degree
    of parallelism.
    """
    workers = worker_count()
    if workers == 1 or cfg.reps == 1:
        per_rep = [_rep_errors(cfg, rep) for rep in range(cfg.reps)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_rep = list(pool.map(lambda rep: _rep_errors(cfg, rep), range(cfg.reps)))

    rows = []
    for p in sorted(cfg.p_values):
        for beta in sorted(cfg.betas):
            errs = np.array([per_rep[rep][(p, beta)][0] for rep in range(cfg.reps)])
            ties = sum(per_rep[rep][(p, beta)][1] for rep in range(cfg.reps))
            mean = float(errs.mean())
            half = 0.0 if cfg.reps < 2 else 1.96 * float(errs.std(ddof=1)) / np.sqrt(cfg.reps)
            rows.append(
                CurveRow(
                    beta=beta,
                    p=p,
                    m=cfg.m,
                    reps=cfg.reps,
                    mean_error=mean,
                    ci_low=max(mean - half, 0.0),
                    ci_high=min(mean + half, 1.0),
                    tie_count=ties,
                )
            )
    return ErrorCurve(tuple(rows))


@dataclass(frozen=True)
class SigmaBest:
    sigma: float
    best_beta: float
    curve: ErrorCurve


def noisy_input_sweep(cfg: ExperimentConfig, sigmas: "list[float]") -> "list[SigmaBest]":
    """Run a beta sweep per input-noise level and report each argmin beta.

    Requires a single noise level p in the config; output is ordered by sigma.
    """
    if not sigmas:
        raise ValueError("sigma grid must be nonempty")
    if any(s < 0.0 for s in sigmas):
        raise ValueError("sigmas must be nonnegative")
    if len(cfg.p_values) != 1:
        raise ValueError("input-noise sweeps require exactly one p value")
    p = cfg.p_values[0]
    out = []
    for sigma in sorted(float(s) for s in sigmas):
        curve = beta_sweep(replace(cfg, input_noise_sigma=sigma))
        out.append(SigmaBest(sigma=sigma, best_beta=curve.best_beta(p), curve=curve))
    return out


def profile_classification(curve: ErrorCurve, inner_mass: float) -> "dict[float, str]":
    """Tag each beta as catastrophic-like, benign-like, or tempered-like.

    Catastrophic-like: at the smallest p the error already covers >= 80% of
    the inner mass and moves by < 25% (relative) between the smallest and
    largest p. Benign-like: the error at the largest p stays below a quarter
    of that p. Everything else is tempered-like.
    """
    ps = curve.p_levels()
    if len(ps) < 2:
        raise ValueError("profile classification needs at least two distinct p values")
    p_lo, p_hi = ps[0], ps[-1]
    tags = {}
    for beta in curve.beta_levels():
        e_lo = curve.row(beta, p_lo).mean_error
        e_hi = curve.row(beta, p_hi).mean_error
        if e_lo >= 0.8 * inner_mass and abs(e_hi - e_lo) < 0.25 * e_lo:
            tags[beta] = "catastrophic-like"
        elif e_hi < 0.25 * p_hi:
            tags[beta] = "benign-like"
        else:
            tags[beta] = "tempered-like"
    return tags
