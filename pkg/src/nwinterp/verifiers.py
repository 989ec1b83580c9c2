"""Numerical verification of the distributional machinery behind the predictor.

Four families of checks:

* order statistics of uniforms match their representation as normalized
  partial sums of standard exponentials (two-sample KS test);
* partial sums of exponentials leave [n/2, 3n/2] with exactly the probability
  given by the Gamma(n, 1) law (Monte Carlo against the regularized
  incomplete-gamma oracle);
* near a point of a uniform ball, the quantile function of the transformed
  distance W = V_d^alpha * ||x - z||^beta sits inside the predicted bracket
  (2/(3 mu)) u^alpha .. (2/mu) u^alpha and matches the closed form (u/mu)^alpha;
* for beta well above the data dimension the kernel classifier agrees with
  1-nearest-neighbor almost everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc, gammaincc

from .predictor import (
    PredictorConfig,
    TrainingSet,
    knn_predict,
    log_distance_matrix,
    predict_batch,
    signs_from_log_distances,
)
from .synth import BallAnnulus, sample_ball_annulus, unit_ball_volume

__all__ = [
    "KsReport",
    "TailReport",
    "LocalCdfReport",
    "LocalCdfRow",
    "AgreementReport",
    "InterpolationReport",
    "ks_two_sample_statistic",
    "order_stat_representation_check",
    "exp_partial_sum_tail",
    "local_cdf_check",
    "knn_agreement",
    "interpolation_check",
]

# asymptotic two-sample KS critical coefficient at the 1% level
KS_COEFF_1PCT = 1.63


def ks_two_sample_statistic(a: np.ndarray, b: np.ndarray) -> float:
    """Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be nonempty")
    grid = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, grid, side="right") / a.size
    cdf_b = np.searchsorted(b, grid, side="right") / b.size
    return float(np.abs(cdf_a - cdf_b).max())


@dataclass(frozen=True)
class KsReport:
    statistic: float
    n_trials: int
    threshold: float
    passed: bool


@dataclass(frozen=True)
class TailReport:
    n: int
    n_trials: int
    empirical_prob: float
    exact_prob: float
    exact_prob_2n: float
    band: float
    passed: bool


def _order_stat_via_sorting(m: int, i: int, n_trials: int, rng: np.random.Generator) -> np.ndarray:
    u = rng.random((n_trials, m))
    u.sort(axis=1)
    return u[:, i - 1]


def _order_stat_via_exponentials(
    m: int,
    i: int,
    n_trials: int,
    rng: np.random.Generator,
    denominator_terms: int | None = None,
) -> np.ndarray:
    # denominator_terms defaults to m + 1 (the correct representation); tests
    # pass m to confirm the check detects the off-by-one law.
    terms = m + 1 if denominator_terms is None else denominator_terms
    e = rng.standard_exponential((n_trials, terms))
    return e[:, :i].sum(axis=1) / e.sum(axis=1)


def order_stat_representation_check(
    m: int,
    i: int,
    n_trials: int,
    rng: np.random.Generator,
    threshold: float | None = None,
) -> KsReport:
    """KS-compare the i-th uniform order statistic of m against its
    exponential partial-sum representation.

    The default threshold is the asymptotic 1% two-sample critical value
    1.63 * sqrt(2 / n_trials), so a correct implementation fails about 1% of
    runs by construction.
    """
    if not (1 <= i <= m):
        raise ValueError(f"order index must satisfy 1 <= i <= m, got i={i}, m={m}")
    if n_trials < 1000:
        raise ValueError(f"n_trials must be >= 1000, got {n_trials}")
    if threshold is None:
        threshold = KS_COEFF_1PCT * math.sqrt(2.0 / n_trials)
    a = _order_stat_via_sorting(m, i, n_trials, rng)
    b = _order_stat_via_exponentials(m, i, n_trials, rng)
    stat = ks_two_sample_statistic(a, b)
    return KsReport(stat, n_trials, threshold, stat < threshold)


def exp_partial_sum_tail(n: int, n_trials: int, rng: np.random.Generator) -> TailReport:
    """Estimate Pr(sum of n standard exponentials leaves [n/2, 3n/2]) and
    compare with the exact Gamma(n, 1) tail.

    Passes when the Monte Carlo estimate sits within four binomial standard
    errors (plus 1e-4 slack) of the exact value and the exact tail decays
    from n to 2n.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if n_trials < 1:
        raise ValueError(f"n_trials must be >= 1, got {n_trials}")
    sums = rng.standard_exponential((n_trials, n)).sum(axis=1)
    empirical = float(np.mean((sums < n / 2.0) | (sums > 1.5 * n)))
    exact = float(gammainc(n, n / 2.0) + gammaincc(n, 1.5 * n))
    exact_2n = float(gammainc(2 * n, n) + gammaincc(2 * n, 3.0 * n))
    band = 4.0 * math.sqrt(exact * (1.0 - exact) / n_trials) + 1e-4
    passed = abs(empirical - exact) < band and exact_2n < exact
    return TailReport(n, n_trials, empirical, exact, exact_2n, band, passed)


@dataclass(frozen=True)
class LocalCdfRow:
    u: float
    empirical: float
    exact: float
    lemma_lo: float
    lemma_hi: float
    bracket_ok: bool
    exact_ok: bool
    contains_exact: bool

    @property
    def passed(self) -> bool:
        return self.bracket_ok and self.exact_ok and self.contains_exact


@dataclass(frozen=True)
class LocalCdfReport:
    d: int
    beta: float
    r: float
    mu: float
    alpha: float
    n_samples: int
    rows: tuple[LocalCdfRow, ...]

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)

    @property
    def max_rel_error(self) -> float:
        errs = [abs(row.empirical / row.exact - 1.0) for row in self.rows if row.exact > 0.0]
        return max(errs, default=0.0)


def local_cdf_check(
    spec: BallAnnulus,
    beta: float,
    u_grid: "list[float]",
    n_samples: int,
    rng: np.random.Generator,
    eps: float = 0.05,
) -> LocalCdfReport:
    """Check the local quantile bracket of W = V_d^alpha ||x - z||^beta at the
    center of a uniform ball.

    For the uniform ball of radius r the CDF is exactly F(w) = mu * w^(1/alpha)
    on the valid range, so F^{-1}(u) = (u / mu)^alpha; the empirical quantile
    must match that closed form and sit inside the bracket
    [(2 / (3 mu)) u^alpha, (2 / mu) u^alpha] up to relative slack eps.
    """
    if spec.c != 1.0:
        raise ValueError("local CDF check requires the pure-ball spec (c = 1)")
    if beta <= 0.0:
        raise ValueError(f"beta must be positive, got {beta}")
    if n_samples < 1000:
        raise ValueError(f"n_samples must be >= 1000, got {n_samples}")
    d, r = spec.d, spec.r
    vd = unit_ball_volume(d)
    alpha = beta / d
    mu = 1.0 / (vd * r**d)
    valid_max = vd**alpha * r**beta
    for u in u_grid:
        if not (0.0 <= u <= valid_max * (1.0 + 1e-12)):
            raise ValueError(f"u={u} outside the validity range [0, {valid_max:.6g}]")

    points = sample_ball_annulus(n_samples, spec, rng).X
    w = vd**alpha * np.einsum("ij,ij->i", points, points) ** (beta / 2.0)

    rows = []
    for u in u_grid:
        exact = (u / mu) ** alpha
        lo, hi = (2.0 / (3.0 * mu)) * u**alpha, (2.0 / mu) * u**alpha
        if u == 0.0:
            rows.append(LocalCdfRow(0.0, 0.0, 0.0, 0.0, 0.0, True, True, True))
            continue
        emp = float(np.quantile(w, u))
        # empirical-quantile noise: dq/q = alpha * du/u with du ~ 4 binomial SEs
        rel = alpha * 4.0 * math.sqrt(u * (1.0 - u) / n_samples) / u + 1e-9
        rows.append(
            LocalCdfRow(
                u=u,
                empirical=emp,
                exact=exact,
                lemma_lo=lo,
                lemma_hi=hi,
                bracket_ok=lo * (1.0 - eps) <= emp <= hi * (1.0 + eps),
                exact_ok=abs(emp - exact) <= exact * rel,
                contains_exact=lo <= exact * (1.0 + 1e-12) and exact <= hi * (1.0 + 1e-12),
            )
        )
    return LocalCdfReport(d, beta, r, mu, alpha, n_samples, tuple(rows))


@dataclass(frozen=True)
class AgreementReport:
    rate: float
    ci_low: float
    ci_high: float
    n_queries: int


def knn_agreement(
    distribution,
    beta: float,
    d: int,
    m: int,
    n_queries: int,
    k: int,
    rng: np.random.Generator,
    label_noise: float = 0.5,
) -> AgreementReport:
    """Fraction of fresh queries on which the kernel classifier agrees with
    k-nearest-neighbor, with a binomial 95% interval.

    Training labels are scrambled (flipped with probability label_noise) so
    agreement is not forced by a single-class sample. Requires beta > d, the
    regime where the kernel rule is local.
    """
    if beta <= d:
        raise ValueError(f"locality check requires beta > d, got beta={beta}, d={d}")
    if distribution.dim != d:
        raise ValueError(f"distribution dimension {distribution.dim} != d={d}")
    if not (0.0 <= label_noise <= 1.0):
        raise ValueError(f"label_noise must lie in [0, 1], got {label_noise}")
    train = distribution.sample_train(m, rng)
    flip = rng.random(train.m) < label_noise
    train = train.with_labels(np.where(flip, -train.y, train.y))
    queries = distribution.sample_test(n_queries, rng).X

    cfg = PredictorConfig(beta=beta)
    nw = predict_batch(queries, train, cfg)
    nn = np.array([knn_predict(q, train, k) for q in queries])
    rate = float(np.mean(nw == nn))
    half = 1.96 * math.sqrt(max(rate * (1.0 - rate), 0.0) / n_queries)
    return AgreementReport(rate, max(rate - half, 0.0), min(rate + half, 1.0), n_queries)


@dataclass(frozen=True)
class InterpolationReport:
    n_sets: int
    n_failed: int

    @property
    def passed(self) -> bool:
        return self.n_failed == 0


def interpolation_check(
    n_sets: int,
    rng: np.random.Generator,
    dims: tuple[int, ...] = (1, 2, 3),
    m_max: int = 500,
    betas: tuple[float, ...] = (0.5, 1.0, 2.0, 8.0, 200.0),
) -> InterpolationReport:
    """Verify predict(x_i) == y_i on random training sets for every beta.

    Each set draws its dimension from dims, a size in [1, m_max], uniform
    coordinates in [-1, 1], and uniform labels.
    """
    failed = 0
    for _ in range(n_sets):
        d = int(rng.choice(dims))
        m = int(rng.integers(1, m_max + 1))
        train = TrainingSet(rng.uniform(-1.0, 1.0, (m, d)), rng.choice([-1, 1], m))
        logd, hit = log_distance_matrix(train.X, train.X)
        ok = True
        for beta in betas:
            signs = signs_from_log_distances(logd, hit, train.y, beta)
            if not np.array_equal(signs, train.y):
                ok = False
                break
        failed += 0 if ok else 1
    return InterpolationReport(n_sets, failed)
