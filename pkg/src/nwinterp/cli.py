"""Command-line entry point: run sweeps from a JSON config, run the
verification suite, and ingest MNIST IDX files.

Subcommands:

* ``sweep --config cfg.json --out curve.csv [--plot curve.svg]``
* ``verify --suite {order-stats,tails,local-cdf,knn-agreement,interpolation,all}``
* ``mnist --images f --labels f --test-images f --test-labels f --config cfg.json --out csv``

The config schema is strict: unknown keys abort with the offending key path.
CSV output is locale-independent (decimal points, LF endings) and
byte-reproducible for a fixed config, including across NW_THREADS settings.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .harness import (
    EmpiricalPool,
    ErrorCurve,
    CurveRow,
    ExperimentConfig,
    beta_sweep,
    noisy_input_sweep,
)
from .idx import load_idx, mnist_binary_subset
from .rng import SeededRng
from .synth import BallAnnulus, OneDMixture, SphereCap, unit_ball_volume
from .verifiers import (
    exp_partial_sum_tail,
    interpolation_check,
    knn_agreement,
    local_cdf_check,
    order_stat_representation_check,
)

__all__ = [
    "ConfigError",
    "load_run_config",
    "write_error_curve_csv",
    "write_sigma_sweep_csv",
    "read_error_curve_csv",
    "write_error_curve_svg",
    "write_sigma_sweep_svg",
    "run_verify_suite",
    "main",
]

CSV_HEADER = "beta,p,m,reps,mean_error,ci_low,ci_high,tie_count,seed"

VERIFY_SUITES = ("order-stats", "tails", "local-cdf", "knn-agreement", "interpolation", "all")

ORDER_STAT_PAIRS = ((1, 1), (10, 1), (10, 5), (100, 10), (100, 100))
TAIL_NS = (1, 5, 20, 100)
LOCAL_CDF_DIMS = (1, 2, 3)
LOCAL_CDF_US = (0.01, 0.05, 0.1)


class ConfigError(ValueError):
    """Configuration file violates the schema; message carries the key path."""


# ---------------------------------------------------------------------------
# Config parsing (strict schema)
# ---------------------------------------------------------------------------


def _require_keys(obj: dict, path: str, allowed: "set[str]", required: "set[str]") -> None:
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected an object")
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"unknown key: {path}.{key}" if path else f"unknown key: {key}")
    for key in required:
        if key not in obj:
            raise ConfigError(f"missing key: {path}.{key}" if path else f"missing key: {key}")


def _as_int(value, path: str, minimum: int | None = None) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}, got {value}")
    return value


def _as_number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    return float(value)


def _as_number_list(value, path: str) -> "list[float]":
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{path}: expected a nonempty list of numbers")
    return [_as_number(v, f"{path}[{k}]") for k, v in enumerate(value)]


def _as_str(value, path: str) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"{path}: expected a string, got {value!r}")
    return value


def _parse_distribution(obj: dict):
    _require_keys(
        obj,
        "distribution",
        allowed={"variant", "inner_mass", "cap_mass", "cap_height", "r", "R", "c", "d"},
        required={"variant"},
    )
    variant = _as_str(obj["variant"], "distribution.variant")
    try:
        if variant == "one_d_mixture":
            _require_keys(obj, "distribution", {"variant", "inner_mass"}, {"variant"})
            return OneDMixture(inner_mass=_as_number(obj.get("inner_mass", 0.1), "distribution.inner_mass"))
        if variant == "sphere_cap":
            _require_keys(obj, "distribution", {"variant", "cap_mass", "cap_height"}, {"variant"})
            kwargs = {}
            if "cap_mass" in obj:
                kwargs["cap_mass"] = _as_number(obj["cap_mass"], "distribution.cap_mass")
            if "cap_height" in obj:
                kwargs["cap_height"] = _as_number(obj["cap_height"], "distribution.cap_height")
            return SphereCap(**kwargs)
        if variant == "ball_annulus":
            _require_keys(
                obj, "distribution", {"variant", "r", "R", "c", "d"}, {"variant", "r", "R", "c", "d"}
            )
            return BallAnnulus(
                r=_as_number(obj["r"], "distribution.r"),
                R=_as_number(obj["R"], "distribution.R"),
                c=_as_number(obj["c"], "distribution.c"),
                d=_as_int(obj["d"], "distribution.d", minimum=1),
            )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"distribution: {exc}") from exc
    raise ConfigError(
        f"distribution.variant: unknown variant {variant!r} "
        "(expected one_d_mixture, sphere_cap, or ball_annulus)"
    )


_EXPERIMENT_KEYS = {
    "m",
    "p_values",
    "betas",
    "reps",
    "n_test",
    "base_seed",
    "input_noise_sigma",
    "sigma_grid",
}


def _parse_experiment(obj: dict) -> "tuple[dict, list[float] | None]":
    _require_keys(obj, "experiment", _EXPERIMENT_KEYS, {"m", "p_values", "betas", "base_seed"})
    kwargs = {
        "m": _as_int(obj["m"], "experiment.m", minimum=1),
        "p_values": tuple(_as_number_list(obj["p_values"], "experiment.p_values")),
        "betas": tuple(_as_number_list(obj["betas"], "experiment.betas")),
        "base_seed": _as_int(obj["base_seed"], "experiment.base_seed"),
    }
    if "reps" in obj:
        kwargs["reps"] = _as_int(obj["reps"], "experiment.reps", minimum=1)
    if "n_test" in obj:
        kwargs["n_test"] = _as_int(obj["n_test"], "experiment.n_test", minimum=1)
    if "input_noise_sigma" in obj:
        kwargs["input_noise_sigma"] = _as_number(obj["input_noise_sigma"], "experiment.input_noise_sigma")
    sigma_grid = None
    if "sigma_grid" in obj:
        sigma_grid = _as_number_list(obj["sigma_grid"], "experiment.sigma_grid")
    return kwargs, sigma_grid


def _parse_output(obj: dict) -> "tuple[str | None, str | None]":
    _require_keys(obj, "output", {"csv", "svg"}, set())
    csv = _as_str(obj["csv"], "output.csv") if "csv" in obj else None
    svg = _as_str(obj["svg"], "output.svg") if "svg" in obj else None
    return csv, svg


def load_run_config(path, require_distribution: bool = True):
    """Parse and validate a run config; returns (cfg_kwargs, distribution,
    sigma_grid, csv_path, svg_path)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    if require_distribution:
        allowed, required = {"experiment", "distribution", "output"}, {"experiment", "distribution"}
    else:
        allowed, required = {"experiment", "output"}, {"experiment"}
    _require_keys(doc, "", allowed=allowed, required=required)
    kwargs, sigma_grid = _parse_experiment(doc["experiment"])
    distribution = _parse_distribution(doc["distribution"]) if "distribution" in doc else None
    csv_path = svg_path = None
    if "output" in doc:
        csv_path, svg_path = _parse_output(doc["output"])
    return kwargs, distribution, sigma_grid, csv_path, svg_path


# ---------------------------------------------------------------------------
# CSV and SVG output
# ---------------------------------------------------------------------------


def _fmt(value: float) -> str:
    return repr(float(value))


def _curve_lines(curve: ErrorCurve, seed: int, sigma: float | None = None) -> "list[str]":
    lines = []
    for r in curve.rows:
        cells = [
            _fmt(r.beta),
            _fmt(r.p),
            str(r.m),
            str(r.reps),
            _fmt(r.mean_error),
            _fmt(r.ci_low),
            _fmt(r.ci_high),
            str(r.tie_count),
            str(seed),
        ]
        if sigma is not None:
            cells.insert(0, _fmt(sigma))
        lines.append(",".join(cells))
    return lines


def write_error_curve_csv(curve: ErrorCurve, path, seed: int) -> None:
    """Spec CSV: header beta,p,m,reps,mean_error,ci_low,ci_high,tie_count,seed."""
    body = "\n".join([CSV_HEADER, *_curve_lines(curve, seed)]) + "\n"
    Path(path).write_bytes(body.encode("utf-8"))


def write_sigma_sweep_csv(results, path, seed: int) -> None:
    """Sigma sweeps prepend a sigma column to the standard header."""
    lines = ["sigma," + CSV_HEADER]
    for item in results:
        lines.extend(_curve_lines(item.curve, seed, sigma=item.sigma))
    Path(path).write_bytes(("\n".join(lines) + "\n").encode("utf-8"))


def read_error_curve_csv(path) -> "tuple[ErrorCurve, int]":
    """Read back a sweep CSV written by this tool; returns (curve, seed)."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.split("\n") if ln]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"{path}: unexpected CSV header {lines[0] if lines else '<empty>'!r}")
    rows, seeds = [], set()
    for ln in lines[1:]:
        cells = ln.split(",")
        if len(cells) != 9:
            raise ValueError(f"{path}: expected 9 cells per row, got {len(cells)}")
        rows.append(
            CurveRow(
                beta=float(cells[0]),
                p=float(cells[1]),
                m=int(cells[2]),
                reps=int(cells[3]),
                mean_error=float(cells[4]),
                ci_low=float(cells[5]),
                ci_high=float(cells[6]),
                tie_count=int(cells[7]),
            )
        )
        seeds.add(int(cells[8]))
    if len(seeds) != 1:
        raise ValueError(f"{path}: inconsistent seed column {sorted(seeds)}")
    return ErrorCurve(tuple(rows)), seeds.pop()


def _plot_curves(groups, path) -> None:
    # groups: list of (label, rows sorted by beta)
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for label, rows in groups:
        betas = [r.beta for r in rows]
        ax.fill_between(betas, [r.ci_low for r in rows], [r.ci_high for r in rows], alpha=0.2)
        ax.plot(betas, [r.mean_error for r in rows], marker="o", label=label)
    ax.set_xlabel("beta")
    ax.set_ylabel("mean clean error")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def write_error_curve_svg(curve: ErrorCurve, path) -> None:
    """Static chart: mean error vs beta, one line per p, CI as a shaded band."""
    groups = []
    for p in curve.p_levels():
        rows = sorted((r for r in curve.rows if r.p == p), key=lambda r: r.beta)
        groups.append((f"p = {p:g}", rows))
    _plot_curves(groups, path)


def write_sigma_sweep_svg(results, path) -> None:
    """Chart for input-noise sweeps: one line per sigma at the single p."""
    groups = []
    for item in results:
        rows = sorted(item.curve.rows, key=lambda r: r.beta)
        groups.append((f"sigma = {item.sigma:g}", rows))
    _plot_curves(groups, path)


# ---------------------------------------------------------------------------
# Verification suites
# ---------------------------------------------------------------------------


def _check_lines_order_stats(root: SeededRng):
    lines = []
    for m, i in ORDER_STAT_PAIRS:
        report = order_stat_representation_check(m, i, 10_000, root.stream(f"order-stats-{m}-{i}", 0))
        retried = False
        if not report.passed:  # the test itself has a 1% false-failure rate
            report = order_stat_representation_check(m, i, 10_000, root.stream(f"order-stats-{m}-{i}", 1))
            retried = True
        name = f"order-stats m={m} i={i}" + (" (retried)" if retried else "")
        lines.append((name, report.statistic, report.threshold, report.passed))
    return lines


def _check_lines_tails(root: SeededRng):
    lines = []
    for n in TAIL_NS:
        report = exp_partial_sum_tail(n, 100_000, root.stream(f"tails-{n}", 0))
        lines.append(
            (f"tails n={n}", abs(report.empirical_prob - report.exact_prob), report.band, report.passed)
        )
    return lines


def _check_lines_local_cdf(root: SeededRng):
    # radius chosen per dimension so the ball density is exactly 1, keeping
    # the quantile bracket's constants valid across the whole beta grid
    lines = []
    for d in LOCAL_CDF_DIMS:
        r = unit_ball_volume(d) ** (-1.0 / d)
        spec = BallAnnulus(r=r, R=4.0 * r, c=1.0, d=d)
        for beta in (d / 2.0, float(d), 2.0 * d):
            report = local_cdf_check(spec, beta, list(LOCAL_CDF_US), 1_000_000,
                                     root.stream(f"local-cdf-{d}-{beta}", 0))
            lines.append(
                (f"local-cdf d={d} beta={beta:g}", report.max_rel_error, 0.05, report.passed)
            )
    return lines


def _check_lines_knn(root: SeededRng):
    ball = BallAnnulus(r=1.0, R=4.0, c=1.0, d=2)
    report = knn_agreement(ball, beta=400.0, d=2, m=500, n_queries=1000, k=1,
                           rng=root.stream("knn-agreement", 0))
    return [("knn-agreement beta=400 k=1", report.rate, 0.99, report.rate >= 0.99)]


def _check_lines_interpolation(root: SeededRng):
    report = interpolation_check(100, root.stream("interpolation", 0))
    frac = (report.n_sets - report.n_failed) / report.n_sets
    return [("interpolation 100 sets", frac, 1.0, report.passed)]


def run_verify_suite(suite: str, seed: int = 20_240_417) -> "tuple[list, bool]":
    """Run one named verification suite; returns (lines, all_passed) where each
    line is (name, statistic, threshold, passed)."""
    if suite not in VERIFY_SUITES:
        raise ValueError(f"unknown suite {suite!r}; valid: {', '.join(VERIFY_SUITES)}")
    root = SeededRng(seed)
    runners = {
        "order-stats": _check_lines_order_stats,
        "tails": _check_lines_tails,
        "local-cdf": _check_lines_local_cdf,
        "knn-agreement": _check_lines_knn,
        "interpolation": _check_lines_interpolation,
    }
    names = list(runners) if suite == "all" else [suite]
    lines = []
    for name in names:
        lines.extend(runners[name](root))
    return lines, all(ok for _, _, _, ok in lines)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_sweep(args) -> int:
    kwargs, distribution, sigma_grid, cfg_csv, cfg_svg = load_run_config(args.config)
    out_csv = args.out or cfg_csv
    out_svg = args.plot or cfg_svg
    if out_csv is None:
        raise ConfigError("no CSV output given: pass --out or set output.csv")
    cfg = ExperimentConfig(distribution=distribution, **kwargs)
    if sigma_grid is not None:
        results = noisy_input_sweep(cfg, sigma_grid)
        write_sigma_sweep_csv(results, out_csv, cfg.base_seed)
        for item in results:
            print(f"sigma={item.sigma:g} best_beta={item.best_beta:g}")
        if out_svg:
            write_sigma_sweep_svg(results, out_svg)
        return 0
    curve = beta_sweep(cfg)
    write_error_curve_csv(curve, out_csv, cfg.base_seed)
    if out_svg:
        write_error_curve_svg(curve, out_svg)
    print(f"wrote {len(curve.rows)} rows to {out_csv}")
    return 0


def _cmd_verify(args) -> int:
    lines, ok = run_verify_suite(args.suite, seed=args.seed)
    for name, stat, threshold, passed in lines:
        print(f"{name:34s} statistic={stat:<12.6g} threshold={threshold:<12.6g} "
              f"{'PASS' if passed else 'FAIL'}")
    return 0 if ok else 1


def _cmd_mnist(args) -> int:
    kwargs, _, sigma_grid, cfg_csv, _ = load_run_config(args.config, require_distribution=False)
    if sigma_grid is not None:
        raise ConfigError("experiment.sigma_grid: not supported for MNIST runs")
    out_csv = args.out or cfg_csv
    if out_csv is None:
        raise ConfigError("no CSV output given: pass --out or set output.csv")
    train = mnist_binary_subset(
        load_idx(args.images), load_idx(args.labels), args.digits[0], args.digits[1]
    )
    test = mnist_binary_subset(
        load_idx(args.test_images), load_idx(args.test_labels), args.digits[0], args.digits[1]
    )
    pool = EmpiricalPool(train_pool=train, test_pool=test)
    cfg = ExperimentConfig(distribution=pool, **kwargs)
    curve = beta_sweep(cfg)
    write_error_curve_csv(curve, out_csv, cfg.base_seed)
    print(f"pool sizes: train={train.m} test={test.m}; wrote {len(curve.rows)} rows to {out_csv}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nwinterp",
        description="Interpolating inverse-distance-weighted classifier: sweeps and checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="run a (beta, p) error sweep from a JSON config")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--out", default=None, help="CSV output path (overrides output.csv)")
    p_sweep.add_argument("--plot", default=None, help="SVG chart path (overrides output.svg)")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_verify = sub.add_parser("verify", help="run a verification suite")
    p_verify.add_argument("--suite", required=True, choices=VERIFY_SUITES)
    p_verify.add_argument("--seed", type=int, default=20_240_417)
    p_verify.set_defaults(func=_cmd_verify)

    p_mnist = sub.add_parser("mnist", help="run a sweep on an MNIST digit pair")
    p_mnist.add_argument("--images", required=True, help="training images IDX file")
    p_mnist.add_argument("--labels", required=True, help="training labels IDX file")
    p_mnist.add_argument("--test-images", required=True, help="held-out images IDX file")
    p_mnist.add_argument("--test-labels", required=True, help="held-out labels IDX file")
    p_mnist.add_argument("--config", required=True)
    p_mnist.add_argument("--out", default=None)
    p_mnist.add_argument("--digits", type=int, nargs=2, default=(0, 1),
                         metavar=("NEG", "POS"))
    p_mnist.set_defaults(func=_cmd_mnist)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
