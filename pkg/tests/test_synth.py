"""Tests for the samplers, noise channels, and closed-form constants."""

import math

import numpy as np
import pytest
from mpmath import mp, mpf
from mpmath import gamma as mp_gamma
from scipy.stats import kstest

from nwinterp import (
    BallAnnulus,
    BallTruth,
    CapTruth,
    IntervalTruth,
    NoiseSpec,
    OneDMixture,
    SeededRng,
    SphereCap,
    add_gaussian_input_noise,
    catastrophic_mass_bound,
    flip_labels,
    sample_1d_mixture,
    sample_ball_annulus,
    sample_sphere_cap,
    tempered_constant,
    unit_ball_volume,
)

mp.dps = 50

CAP_HEIGHT = math.sqrt(3.0) / 2.0


def stream(tag, rep=0):
    return SeededRng(8675309).stream(tag, rep)


# ---------------------------------------------------------------------------
# 1D mixture
# ---------------------------------------------------------------------------


def test_1d_mixture_support_and_labels():
    ts = sample_1d_mixture(100_000, 0.1, stream("1d"))
    x = ts.X[:, 0]
    inner = (x > 0.0) & (x < 0.25)
    outer = (x > 0.75) & (x < 1.0)
    assert np.all(inner | outer)
    # clean labels equal the ground truth everywhere
    assert np.array_equal(ts.y, IntervalTruth(0.0, 0.25).labels(ts.X))
    assert np.all(ts.y[inner] == -1) and np.all(ts.y[outer] == 1)


def test_1d_mixture_component_mass():
    ts = sample_1d_mixture(100_000, 0.1, stream("1d-mass"))
    frac = np.mean(ts.X[:, 0] < 0.5)
    assert abs(frac - 0.1) < 4 * math.sqrt(0.1 * 0.9 / 100_000)  # binomial 4 sigma


def test_1d_mixture_vanishing_inner_component():
    ts = sample_1d_mixture(100, 1e-12, stream("1d-tiny"))
    assert np.all(ts.X[:, 0] > 0.75)


def test_1d_mixture_validation():
    with pytest.raises(ValueError, match="inner_mass"):
        sample_1d_mixture(10, 0.0, stream("x"))
    with pytest.raises(ValueError, match="inner_mass"):
        sample_1d_mixture(10, 1.0, stream("x"))
    with pytest.raises(ValueError, match="m must"):
        sample_1d_mixture(0, 0.1, stream("x"))


# ---------------------------------------------------------------------------
# sphere cap
# ---------------------------------------------------------------------------


def test_sphere_points_have_unit_norm():
    ts = sample_sphere_cap(50_000, 0.1, CAP_HEIGHT, stream("sphere"))
    norms = np.linalg.norm(ts.X, axis=1)
    assert np.max(np.abs(norms - 1.0)) < 1e-12


def test_sphere_cap_mass_and_labels():
    ts = sample_sphere_cap(100_000, 0.1, CAP_HEIGHT, stream("sphere-mass"))
    in_cap = ts.X[:, 2] > CAP_HEIGHT
    assert abs(np.mean(in_cap) - 0.1) < 4 * math.sqrt(0.1 * 0.9 / 100_000)
    assert np.array_equal(ts.y, CapTruth(CAP_HEIGHT).labels(ts.X))


def test_sphere_cap_axial_coordinate_is_uniform():
    # enough draws that the cap holds ~1e5 points
    ts = sample_sphere_cap(1_000_000, 0.1, CAP_HEIGHT, stream("sphere-axial"))
    z = ts.X[ts.X[:, 2] > CAP_HEIGHT, 2]
    assert z.size > 90_000
    assert abs(z.mean() - (CAP_HEIGHT + 1.0) / 2.0) < 0.001
    # full distributional check on the cap's axial coordinate
    res = kstest(z, "uniform", args=(CAP_HEIGHT, 1.0 - CAP_HEIGHT))
    assert res.statistic < 0.01


def test_sphere_cap_validation():
    for bad in (0.0, 1.0):
        with pytest.raises(ValueError):
            sample_sphere_cap(10, bad, CAP_HEIGHT, stream("x"))
        with pytest.raises(ValueError):
            sample_sphere_cap(10, 0.1, bad, stream("x"))


# ---------------------------------------------------------------------------
# ball / annulus
# ---------------------------------------------------------------------------


def test_ball_annulus_degenerate_pure_ball():
    spec = BallAnnulus(r=0.5, R=2.0, c=1.0, d=3)
    ts = sample_ball_annulus(5_000, spec, stream("ball"))
    assert np.all(np.linalg.norm(ts.X, axis=1) <= 0.5)
    assert np.all(ts.y == -1)


def test_ball_annulus_component_mass_and_support():
    spec = BallAnnulus(r=0.25, R=1.0, c=0.1, d=2)
    ts = sample_ball_annulus(100_000, spec, stream("ball-mass"))
    radii = np.linalg.norm(ts.X, axis=1)
    inner = radii <= 0.25
    outer = (radii >= 0.75) & (radii <= 1.0)
    assert np.all(inner | outer)
    assert abs(np.mean(inner) - 0.1) < 4 * math.sqrt(0.1 * 0.9 / 100_000)
    assert np.array_equal(ts.y, BallTruth(0.25).labels(ts.X))


@pytest.mark.parametrize("d", [1, 2, 3])
def test_annulus_radial_law(d):
    # ||x||^d restricted to the annulus is uniform on [(3r)^d, R^d]
    spec = BallAnnulus(r=0.25, R=1.0, c=0.1, d=d)
    ts = sample_ball_annulus(100_000, spec, stream(f"annulus-{d}"))
    radii = np.linalg.norm(ts.X, axis=1)
    rd = radii[radii > 0.25] ** d
    lo, hi = 0.75**d, 1.0
    res = kstest(rd, "uniform", args=(lo, hi - lo))
    assert res.statistic < 0.01


def test_ball_uniformity_inside_inner_ball():
    # radius^d of inner points must be uniform on [0, r^d]
    spec = BallAnnulus(r=0.5, R=2.0, c=1.0, d=3)
    ts = sample_ball_annulus(100_000, spec, stream("ball-unif"))
    rd = np.linalg.norm(ts.X, axis=1) ** 3
    assert kstest(rd, "uniform", args=(0.0, 0.125)).statistic < 0.01


def test_ball_annulus_validation():
    with pytest.raises(ValueError, match="R > 3r"):
        BallAnnulus(r=1.0, R=3.0, c=0.1, d=2)
    with pytest.raises(ValueError, match="c must"):
        BallAnnulus(r=0.25, R=1.0, c=0.0, d=2)
    with pytest.raises(ValueError, match="c must"):
        BallAnnulus(r=0.25, R=1.0, c=1.5, d=2)


# ---------------------------------------------------------------------------
# input noise
# ---------------------------------------------------------------------------


def test_zero_input_noise_is_identity():
    ts = sample_1d_mixture(100, 0.1, stream("noise-id"))
    out = add_gaussian_input_noise(ts, 0.0, stream("noise-id", 1))
    assert np.array_equal(out.X, ts.X) and np.array_equal(out.y, ts.y)


def test_input_noise_mean_squared_displacement():
    ts = sample_sphere_cap(100_000, 0.1, CAP_HEIGHT, stream("noise-msd"))
    out = add_gaussian_input_noise(ts, 0.2, stream("noise-msd", 1))
    msd = np.mean(np.sum((out.X - ts.X) ** 2, axis=1))
    assert abs(msd - 0.12) < 0.12 * 0.02
    assert np.array_equal(out.y, ts.y)


def test_input_noise_reproducible():
    ts = sample_1d_mixture(1000, 0.1, stream("noise-rep"))
    a = add_gaussian_input_noise(ts, 0.3, stream("noise-rep", 1))
    b = add_gaussian_input_noise(ts, 0.3, stream("noise-rep", 1))
    assert np.array_equal(a.X, b.X)


def test_input_noise_validation():
    ts = sample_1d_mixture(10, 0.1, stream("x"))
    with pytest.raises(ValueError, match="sigma"):
        add_gaussian_input_noise(ts, -0.1, stream("x"))


# ---------------------------------------------------------------------------
# label flips
# ---------------------------------------------------------------------------


def test_flip_labels_fraction():
    ts = sample_1d_mixture(100_000, 0.1, stream("flip"))
    out = flip_labels(ts, NoiseSpec(0.1), stream("flip", 1))
    assert np.array_equal(out.X, ts.X)
    assert abs(np.mean(out.y != ts.y) - 0.1) < 0.003


def test_flip_labels_vanishing_p():
    ts = sample_1d_mixture(100, 0.1, stream("flip-tiny"))
    out = flip_labels(ts, NoiseSpec(1e-12), stream("flip-tiny", 1))
    assert np.array_equal(out.y, ts.y)


def test_double_flip_composition():
    ts = sample_1d_mixture(100_000, 0.1, stream("flip2"))
    p = 0.1
    once = flip_labels(ts, NoiseSpec(p), stream("flip2", 1))
    twice = flip_labels(once, NoiseSpec(p), stream("flip2", 2))
    expected = 2 * p * (1 - p)
    assert abs(np.mean(twice.y != ts.y) - expected) < 0.004


def test_flip_mask_independent_of_position():
    ts = sample_1d_mixture(100_000, 0.5, stream("flip-indep"))
    out = flip_labels(ts, NoiseSpec(0.2), stream("flip-indep", 1))
    flipped = (out.y != ts.y).astype(float)
    radius = np.abs(ts.X[:, 0])
    rho = np.corrcoef(flipped, radius)[0, 1]
    assert abs(rho) < 0.02


def test_noise_spec_range():
    for bad in (0.0, 0.49, -0.1, 0.7):
        with pytest.raises(ValueError):
            NoiseSpec(bad)


# ---------------------------------------------------------------------------
# closed-form constants vs the 50-digit oracle
# ---------------------------------------------------------------------------


def oracle_tempered(ratio):
    r = mpf(repr(ratio))
    return (8 * 2**r / (r - 1)) ** (1 / (r - 1))


def oracle_bound(beta, d, r, R):
    beta, d, r, R = (mpf(repr(v)) for v in (beta, d, r, R))
    return (1 - beta / d) / (2400 * (1 + R / r) ** beta)


def test_tempered_constant_worked_values():
    assert tempered_constant(2.0) == pytest.approx(32.0, rel=1e-12)
    assert tempered_constant(3.0) == pytest.approx(math.sqrt(32.0), rel=1e-12)
    assert tempered_constant(1.5) == pytest.approx(2048.0, rel=1e-12)


def test_tempered_constant_diverges_near_one():
    assert tempered_constant(1.001) > 1e3


def test_tempered_constant_validation():
    for bad in (1.0, 0.5, -2.0):
        with pytest.raises(ValueError, match="ratio"):
            tempered_constant(bad)


def test_tempered_constant_matches_extended_precision_grid():
    grid = np.linspace(1.25, 6.0, 20)
    for ratio in grid:
        want = float(oracle_tempered(float(ratio)))
        got = tempered_constant(float(ratio))
        assert got == pytest.approx(want, rel=1e-12)


def test_catastrophic_bound_worked_value():
    got = catastrophic_mass_bound(0.5, 1, 1.0, 4.0)
    want = float(oracle_bound(0.5, 1, 1.0, 4.0))  # 9.316949906249e-05
    assert got == pytest.approx(want, rel=1e-12)
    assert got == pytest.approx(9.3167e-5, rel=1e-3)


def test_catastrophic_bound_matches_extended_precision_grid():
    rng = np.random.default_rng(59)
    for _ in range(20):
        d = int(rng.integers(1, 6))
        beta = float(rng.uniform(0.05, 0.95)) * d
        r = float(rng.uniform(0.1, 2.0))
        R = float(rng.uniform(3.1, 10.0)) * r
        got = catastrophic_mass_bound(beta, d, r, R)
        assert got == pytest.approx(float(oracle_bound(beta, d, r, R)), rel=1e-12)


def test_catastrophic_bound_monotone_and_vanishing():
    # decreasing in R/r at fixed beta, d
    bounds = [catastrophic_mass_bound(0.5, 1, 1.0, R) for R in (3.5, 4.0, 6.0, 10.0)]
    assert all(a > b for a, b in zip(bounds, bounds[1:]))
    # vanishes as beta -> d
    assert catastrophic_mass_bound(0.999, 1, 1.0, 4.0) < 1e-5
    near = [catastrophic_mass_bound(b, 1, 1.0, 4.0) for b in (0.9, 0.99, 0.999)]
    assert all(a > b for a, b in zip(near, near[1:]))


def test_catastrophic_bound_validation():
    with pytest.raises(ValueError, match="beta < d"):
        catastrophic_mass_bound(1.0, 1, 1.0, 4.0)
    with pytest.raises(ValueError, match="beta < d"):
        catastrophic_mass_bound(2.5, 2, 1.0, 4.0)
    with pytest.raises(ValueError, match="R > 3r"):
        catastrophic_mass_bound(0.5, 1, 1.0, 2.0)


def test_unit_ball_volume_against_gamma_oracle():
    for d in range(1, 8):
        want = float(mp.pi ** (mpf(d) / 2) / mp_gamma(mpf(d) / 2 + 1))
        assert unit_ball_volume(d) == pytest.approx(want, rel=1e-14)
    assert unit_ball_volume(1) == pytest.approx(2.0)
    assert unit_ball_volume(2) == pytest.approx(math.pi)
    assert unit_ball_volume(3) == pytest.approx(4.0 * math.pi / 3.0)


# ---------------------------------------------------------------------------
# distribution variants
# ---------------------------------------------------------------------------


def test_variant_dims_and_truths():
    assert OneDMixture().dim == 1
    assert SphereCap().dim == 3
    assert BallAnnulus(r=0.25, R=1.0, c=0.1, d=4).dim == 4
    ts = OneDMixture(0.2).sample_train(500, stream("variant"))
    assert ts.dim == 1
    assert np.array_equal(ts.y, OneDMixture(0.2).truth().labels(ts.X))


def test_same_stream_reproduces_samples():
    a = SphereCap().sample_train(100, stream("repro", 5))
    b = SphereCap().sample_train(100, stream("repro", 5))
    assert np.array_equal(a.X, b.X) and np.array_equal(a.y, b.y)
    c = SphereCap().sample_train(100, stream("repro", 6))
    assert not np.array_equal(a.X, c.X)
