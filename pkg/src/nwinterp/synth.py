"""Samplers for the benchmark distributions, the label-noise channel, and
reference evaluators of the closed-form constants.

Three families are provided, each pairing a sampleable distribution with its
ground-truth rule (the clean label is -1 on an inner region, +1 outside):

* a one-dimensional two-interval mixture: Unif(0, 1/4) with weight
  ``inner_mass`` against Unif(3/4, 1);
* a spherical-cap mixture on the unit sphere in R^3;
* an inner-ball / outer-annulus mixture in R^d with radii r and R > 3r.

Sampling is exact (no rejection): balls use a Gaussian direction with radius
r * U^(1/d), annuli invert the CDF of ||x||^d, and the sphere uses the
uniformity of the axial coordinate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .predictor import TrainingSet

__all__ = [
    "IntervalTruth",
    "CapTruth",
    "BallTruth",
    "OneDMixture",
    "SphereCap",
    "BallAnnulus",
    "NoiseSpec",
    "sample_1d_mixture",
    "sample_sphere_cap",
    "sample_ball_annulus",
    "add_gaussian_input_noise",
    "flip_labels",
    "tempered_constant",
    "catastrophic_mass_bound",
    "unit_ball_volume",
]

CAP_HEIGHT_DEFAULT = math.sqrt(3.0) / 2.0


def unit_ball_volume(d: int) -> float:
    """Volume of the unit Euclidean ball in d dimensions."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)


# ---------------------------------------------------------------------------
# Ground-truth rules (-1 on the inner region, +1 elsewhere)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IntervalTruth:
    """-1 on the open interval (lo, hi) of the line, +1 elsewhere."""

    lo: float = 0.0
    hi: float = 0.25

    def labels(self, X: np.ndarray) -> np.ndarray:
        x = np.asarray(X)[:, 0]
        return np.where((x > self.lo) & (x < self.hi), -1, 1).astype(np.int64)


@dataclass(frozen=True)
class CapTruth:
    """-1 on the spherical cap {x3 > height}, +1 on the rest of the sphere."""

    height: float = CAP_HEIGHT_DEFAULT

    def labels(self, X: np.ndarray) -> np.ndarray:
        return np.where(np.asarray(X)[:, 2] > self.height, -1, 1).astype(np.int64)


@dataclass(frozen=True)
class BallTruth:
    """-1 inside the centered ball of the given radius, +1 outside."""

    radius: float

    def labels(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X)
        return np.where(np.einsum("ij,ij->i", X, X) <= self.radius**2, -1, 1).astype(np.int64)


# ---------------------------------------------------------------------------
# Distributions
# ---------------------------------------------------------------------------


def _unit_directions(m: int, d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((m, d))
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    # a zero Gaussian vector has probability zero; regenerate defensively
    while (norms == 0.0).any():
        bad = norms[:, 0] == 0.0
        g[bad] = rng.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(g, axis=1, keepdims=True)
    return g / norms


def sample_1d_mixture(m: int, inner_mass: float, rng: np.random.Generator) -> TrainingSet:
    """Draw m points from the two-interval line mixture with clean labels.

    Each point lands in (0, 1/4) with probability inner_mass (label -1,
    uniform there) and otherwise in (3/4, 1) (label +1, uniform there).
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if not (0.0 < inner_mass < 1.0):
        raise ValueError(f"inner_mass must lie in (0, 1), got {inner_mass}")
    inner = rng.random(m) < inner_mass
    u = rng.random(m)
    x = np.where(inner, 0.25 * u, 0.75 + 0.25 * u)
    y = np.where(inner, -1, 1)
    return TrainingSet(x[:, None], y)


def sample_sphere_cap(
    m: int,
    cap_mass: float,
    cap_height: float,
    rng: np.random.Generator,
) -> TrainingSet:
    """Draw m points on the unit sphere in R^3 with clean labels.

    With probability cap_mass the point is uniform on the cap {x3 > cap_height}
    (label -1), otherwise uniform on its complement (label +1). Uses the fact
    that the axial coordinate of a uniform sphere point is itself uniform.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if not (0.0 < cap_mass < 1.0):
        raise ValueError(f"cap_mass must lie in (0, 1), got {cap_mass}")
    if not (0.0 < cap_height < 1.0):
        raise ValueError(f"cap_height must lie in (0, 1), got {cap_height}")
    in_cap = rng.random(m) < cap_mass
    u = rng.random(m)
    z = np.where(in_cap, cap_height + (1.0 - cap_height) * u, -1.0 + (cap_height + 1.0) * u)
    phi = rng.random(m) * (2.0 * math.pi)
    rho = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    X = np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])
    y = np.where(in_cap, -1, 1)
    return TrainingSet(X, y)


@dataclass(frozen=True)
class OneDMixture:
    """Line mixture: inner_mass on Unif(0, 1/4) labeled -1, rest on Unif(3/4, 1)."""

    inner_mass: float = 0.1
    dim: int = field(default=1, init=False)

    def __post_init__(self) -> None:
        if not (0.0 < self.inner_mass < 1.0):
            raise ValueError(f"inner_mass must lie in (0, 1), got {self.inner_mass}")

    def truth(self) -> IntervalTruth:
        return IntervalTruth(0.0, 0.25)

    def sample_train(self, m: int, rng: np.random.Generator) -> TrainingSet:
        return sample_1d_mixture(m, self.inner_mass, rng)

    sample_test = sample_train


@dataclass(frozen=True)
class SphereCap:
    """Unit-sphere mixture: cap_mass on the cap {x3 > cap_height} labeled -1."""

    cap_mass: float = 0.1
    cap_height: float = CAP_HEIGHT_DEFAULT
    dim: int = field(default=3, init=False)

    def __post_init__(self) -> None:
        if not (0.0 < self.cap_mass < 1.0):
            raise ValueError(f"cap_mass must lie in (0, 1), got {self.cap_mass}")
        if not (0.0 < self.cap_height < 1.0):
            raise ValueError(f"cap_height must lie in (0, 1), got {self.cap_height}")

    def truth(self) -> CapTruth:
        return CapTruth(self.cap_height)

    def sample_train(self, m: int, rng: np.random.Generator) -> TrainingSet:
        return sample_sphere_cap(m, self.cap_mass, self.cap_height, rng)

    sample_test = sample_train


@dataclass(frozen=True)
class BallAnnulus:
    """Mixture of a uniform inner ball (mass c, label -1) and a uniform annulus.

    The annulus spans 3r <= ||x|| <= R and carries mass 1 - c with label +1;
    the construction requires R > 3r. c = 1 degenerates to the pure ball,
    which the verification checks rely on.
    """

    r: float
    R: float
    c: float
    d: int

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError(f"dimension must be >= 1, got {self.d}")
        if self.r <= 0.0:
            raise ValueError(f"r must be positive, got {self.r}")
        if self.R <= 3.0 * self.r:
            raise ValueError(f"construction requires R > 3r, got R={self.R}, r={self.r}")
        if not (0.0 < self.c <= 1.0):
            raise ValueError(f"c must lie in (0, 1], got {self.c}")

    @property
    def dim(self) -> int:
        return self.d

    def inner_density(self) -> float:
        """Density value inside the inner ball."""
        return self.c / (unit_ball_volume(self.d) * self.r**self.d)

    def truth(self) -> BallTruth:
        return BallTruth(self.r)

    def sample_train(self, m: int, rng: np.random.Generator) -> TrainingSet:
        return sample_ball_annulus(m, self, rng)

    sample_test = sample_train


def sample_ball_annulus(m: int, spec: BallAnnulus, rng: np.random.Generator) -> TrainingSet:
    """Draw m points from the ball/annulus mixture with clean labels.

    Inner points (probability c) are uniform in B(0, r) via a Gaussian
    direction and radius r * U^(1/d); annulus radii make ||x||^d uniform on
    [(3r)^d, R^d].
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    d = spec.d
    inner = rng.random(m) < spec.c
    u = rng.random(m)
    lo, hi = (3.0 * spec.r) ** d, spec.R**d
    radius = np.where(
        inner,
        spec.r * u ** (1.0 / d),
        (lo + u * (hi - lo)) ** (1.0 / d),
    )
    X = _unit_directions(m, d, rng) * radius[:, None]
    y = np.where(inner, -1, 1)
    return TrainingSet(X, y)


# ---------------------------------------------------------------------------
# Noise channels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NoiseSpec:
    """Independent label-flip probability, restricted to (0, 0.49)."""

    p: float

    def __post_init__(self) -> None:
        if not (0.0 < self.p < 0.49):
            raise ValueError(f"flip probability must lie in (0, 0.49), got {self.p}")


def add_gaussian_input_noise(
    train: TrainingSet,
    sigma: float,
    rng: np.random.Generator,
) -> TrainingSet:
    """Perturb every coordinate by independent N(0, sigma^2); labels unchanged."""
    if sigma < 0.0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    if sigma == 0.0:
        return train
    X = train.X + sigma * rng.standard_normal(train.X.shape)
    return TrainingSet(X, train.y)


def flip_labels(train: TrainingSet, noise: NoiseSpec, rng: np.random.Generator) -> TrainingSet:
    """Independently negate each label with probability noise.p."""
    flip = rng.random(train.m) < noise.p
    return train.with_labels(np.where(flip, -train.y, train.y))


# ---------------------------------------------------------------------------
# Closed-form reference constants
# ---------------------------------------------------------------------------


def tempered_constant(ratio: float) -> float:
    """Exponent constant (8 * 2^ratio / (ratio - 1)) ** (1 / (ratio - 1)).

    Defined for ratio > 1; diverges as ratio -> 1+ (returns inf once the
    value exceeds double range).
    """
    if not ratio > 1.0:
        raise ValueError(f"ratio must exceed 1, got {ratio}")
    base = np.float64(8.0 * 2.0**ratio / (ratio - 1.0))
    with np.errstate(over="ignore"):
        return float(base ** np.float64(1.0 / (ratio - 1.0)))


def catastrophic_mass_bound(beta: float, d: int, r: float, R: float) -> float:
    """Admissible inner mass (1 - beta/d) / (2400 * (1 + R/r)^beta).

    Only defined for 0 < beta < d and R > 3r.
    """
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if not 0.0 < beta:
        raise ValueError(f"beta must be positive, got {beta}")
    if beta >= d:
        raise ValueError(f"bound only defined for beta < d, got beta={beta}, d={d}")
    if r <= 0.0 or R <= 3.0 * r:
        raise ValueError(f"radii must satisfy R > 3r > 0, got r={r}, R={R}")
    return (1.0 - beta / d) / (2400.0 * (1.0 + R / r) ** beta)
