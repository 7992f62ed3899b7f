"""Command-line front end.

Subcommands: ``decompose`` (variance split and sensitivity indices),
``errors`` (truncation-error budgets per order), ``verify`` (property
battery with analytic-vs-sampled gates), ``figure1`` (threshold-rate and
decay-sweep tables) and ``contrived`` (the two-scale stress case).

Runs are configured by a JSON file (see README for the schema) plus a few
command-line overrides; unknown keys are rejected rather than ignored.
All numeric output is printed with 12 significant digits, and every
subcommand is deterministic for a fixed config — seeds live in the config.

Exit codes: 0 success, 1 configuration or validation problem, 2 a
verification check failed.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from dimdecomp import __version__
from dimdecomp.decomp import (
    CheckResult,
    ProblemSpec,
    build_add,
    build_rdd,
    check_add_structure,
    check_form_equivalence,
    check_rdd_structure,
)
from dimdecomp.errors import (
    DecayModel,
    contrived_example,
    decay_curves,
    pmin_for_N,
    rdd_expected_error,
)
from dimdecomp.functions import default_marginal, function_names, make_function
from dimdecomp.mc import mc_add_error, mc_expected_rdd_error
from dimdecomp.measures import (
    MarginalMeasure,
    ProductMeasure,
    gauss_exactness_residual,
)
from dimdecomp.subsets import all_subsets_up_to, count_up_to
from dimdecomp.variance import (
    sobol_D,
    sobol_indices,
    variance_closure_residual,
    variance_components,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CHECKS_FAILED = 2

DEFAULT_SEED = 42
DEFAULT_N_SAMPLES = 100_000


class ConfigError(ValueError):
    """Bad run configuration or command arguments."""


def _fmt(x) -> str:
    return f"{float(x):.12g}"


# -- configuration -----------------------------------------------------------


@dataclass
class Figure1Config:
    n_min: int = 3
    n_max: int = 100
    right_dim: int = 20
    rates: tuple[float, ...] = (5.0, 50.0)
    scale: float = 1.0


@dataclass
class RunConfig:
    function_name: str = "product_linear"
    function_params: dict = field(default_factory=dict)
    dim: int = 3
    marginals: tuple[MarginalMeasure, ...] | None = None
    quad_order: int | tuple[int, ...] = 10
    truncation_orders: tuple[int, ...] | None = None
    n_samples: int = DEFAULT_N_SAMPLES
    seed: int = DEFAULT_SEED
    out_dir: Path = Path("out")
    figure1: Figure1Config = field(default_factory=Figure1Config)

    def measure(self) -> ProductMeasure:
        margs = self.marginals
        if margs is None:
            margs = (default_marginal(self.function_name),) * self.dim
        return ProductMeasure(margs)

    def problem(self) -> ProblemSpec:
        try:
            fn = make_function(self.function_name, self.dim, **self.function_params)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad function spec: {exc}") from exc
        return ProblemSpec(fn, self.measure(), self.quad_order)

    def orders_to_run(self) -> tuple[int, ...]:
        if self.truncation_orders is None:
            return tuple(range(self.dim))
        for s in self.truncation_orders:
            if not 0 <= s < self.dim:
                raise ConfigError(
                    f"truncation order {s} must satisfy 0 <= S < dim ({self.dim})"
                )
        return self.truncation_orders


def _reject_unknown(section: dict, allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown {where} key(s): {', '.join(sorted(unknown))}")


def _parse_marginal(data, where: str) -> MarginalMeasure:
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be an object")
    _reject_unknown(data, {"kind", "lo", "hi"}, where)
    try:
        return MarginalMeasure(data["kind"], data.get("lo"), data.get("hi"))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad {where}: {exc}") from exc


def parse_config(data: dict) -> RunConfig:
    """Validate a raw config mapping into a :class:`RunConfig`."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    _reject_unknown(
        data,
        {
            "function",
            "dim",
            "marginals",
            "quad_order",
            "truncation_orders",
            "mc",
            "out",
            "figure1",
        },
        "config",
    )
    cfg = RunConfig()
    if "dim" in data:
        cfg.dim = int(data["dim"])
        if cfg.dim < 1:
            raise ConfigError("dim must be at least 1")
    if "function" in data:
        fn = dict(data["function"])
        if "name" not in fn:
            raise ConfigError("function section needs a name")
        cfg.function_name = str(fn.pop("name"))
        if cfg.function_name not in function_names():
            raise ConfigError(
                f"unknown function {cfg.function_name!r}; choose from {function_names()}"
            )
        cfg.function_params = fn
    if "marginals" in data:
        raw = data["marginals"]
        if isinstance(raw, dict):
            cfg.marginals = (_parse_marginal(raw, "marginal"),) * cfg.dim
        elif isinstance(raw, list):
            if len(raw) not in (1, cfg.dim):
                raise ConfigError(
                    f"marginals list must have 1 or dim={cfg.dim} entries, got {len(raw)}"
                )
            parsed = tuple(_parse_marginal(m, "marginal") for m in raw)
            cfg.marginals = parsed * cfg.dim if len(parsed) == 1 else parsed
        else:
            raise ConfigError("marginals must be an object or a list of objects")
    if "quad_order" in data:
        raw = data["quad_order"]
        cfg.quad_order = (
            tuple(int(n) for n in raw) if isinstance(raw, list) else int(raw)
        )
    if "truncation_orders" in data:
        raw = data["truncation_orders"]
        if not isinstance(raw, list) or not raw:
            raise ConfigError("truncation_orders must be a nonempty list")
        cfg.truncation_orders = tuple(int(s) for s in raw)
    if "mc" in data:
        mc = data["mc"]
        _reject_unknown(mc, {"n_samples", "seed"}, "mc")
        cfg.n_samples = int(mc.get("n_samples", cfg.n_samples))
        cfg.seed = int(mc.get("seed", cfg.seed))
        if cfg.n_samples < 2:
            raise ConfigError("mc.n_samples must be at least 2")
    if "out" in data:
        cfg.out_dir = Path(str(data["out"]))
    if "figure1" in data:
        fig = data["figure1"]
        _reject_unknown(fig, {"n_min", "n_max", "right_dim", "rates", "scale"}, "figure1")
        f1 = Figure1Config(
            n_min=int(fig.get("n_min", 3)),
            n_max=int(fig.get("n_max", 100)),
            right_dim=int(fig.get("right_dim", 20)),
            rates=tuple(float(r) for r in fig.get("rates", (5.0, 50.0))),
            scale=float(fig.get("scale", 1.0)),
        )
        if f1.n_min < 3:
            raise ConfigError("figure1.n_min must be at least 3 (no threshold exists below)")
        if f1.n_max < f1.n_min:
            raise ConfigError("figure1.n_max must be >= n_min")
        if f1.right_dim < 2 or any(r <= 1.0 for r in f1.rates) or f1.scale <= 0.0:
            raise ConfigError("figure1 needs right_dim >= 2, rates > 1 and scale > 0")
        cfg.figure1 = f1
    return cfg


def load_config(path: str | None, args: argparse.Namespace) -> RunConfig:
    if path is None:
        cfg = RunConfig()
    else:
        if not path.strip():
            raise ConfigError("config path is empty")
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        cfg = parse_config(data)
    if getattr(args, "out", None) is not None:
        cfg.out_dir = Path(args.out)
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "n_samples", None) is not None:
        cfg.n_samples = args.n_samples
    if getattr(args, "quad_order", None) is not None:
        cfg.quad_order = args.quad_order
    if getattr(args, "truncation_orders", None) is not None:
        cfg.truncation_orders = tuple(args.truncation_orders)
    return cfg


# -- output helpers ----------------------------------------------------------


def _write_csv(path: Path, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            cells = []
            for cell in row:
                if isinstance(cell, str):
                    cells.append(cell)
                elif isinstance(cell, (int, np.integer)):
                    cells.append(str(int(cell)))
                else:
                    cells.append(_fmt(cell))
            writer.writerow(cells)


def _check_dict(c: CheckResult) -> dict:
    return {
        "name": c.name,
        "residual": c.residual,
        "tolerance": c.tolerance,
        "passed": c.passed,
        "detail": c.detail,
    }


def _print_checks(checks: list[CheckResult]) -> None:
    for c in checks:
        status = "ok " if c.passed else "FAIL"
        detail = f"  ({c.detail})" if c.detail and not c.passed else ""
        print(f"  [{status}] {c.name}: residual {_fmt(c.residual)} vs tol {_fmt(c.tolerance)}{detail}")


# -- subcommands ---------------------------------------------------------------


def cmd_decompose(cfg: RunConfig) -> int:
    problem = cfg.problem()
    table = build_add(problem)
    vmap = variance_components(table)
    constant = vmap.degenerate
    indices = None if constant else sobol_indices(vmap)
    rows = []
    for u in all_subsets_up_to(cfg.dim, cfg.dim):
        if u.is_empty:
            continue
        idx_cell = "" if constant else indices[u.mask]
        rows.append([u.label(), u.cardinality, vmap.sigma2[u.mask], idx_cell])
    out = cfg.out_dir
    _write_csv(out / "components.csv", ["subset", "cardinality", "sigma2", "sobol_index"], rows)
    checks = check_add_structure(table)
    report = {
        "command": "decompose",
        "version": __version__,
        "function": cfg.function_name,
        "dim": cfg.dim,
        "quad_order": cfg.quad_order if isinstance(cfg.quad_order, int) else list(cfg.quad_order),
        "mean": table.y_empty,
        "total_variance": vmap.total,
        "closure_residual": variance_closure_residual(table, vmap),
        "constant_function": constant,
        "checks": [_check_dict(c) for c in checks],
        "passed": all(c.passed for c in checks),
    }
    out.mkdir(parents=True, exist_ok=True)
    (out / "properties.json").write_text(json.dumps(report, indent=2) + "\n")
    print(f"decompose: {cfg.function_name}, dim {cfg.dim}")
    print(f"  mean {_fmt(table.y_empty)}, total variance {_fmt(vmap.total)}")
    if constant:
        print("  constant function: sensitivity indices are undefined, left blank")
    else:
        first = {u.label(): indices[u.mask] for u in all_subsets_up_to(cfg.dim, 1) if not u.is_empty}
        pretty = ", ".join(f"{k}={_fmt(v)}" for k, v in first.items())
        print(f"  first-order indices: {pretty}")
    _print_checks(checks)
    print(f"  wrote {out / 'components.csv'} and {out / 'properties.json'}")
    return EXIT_OK if report["passed"] else EXIT_CHECKS_FAILED


def cmd_errors(cfg: RunConfig) -> int:
    orders = cfg.orders_to_run()
    problem = cfg.problem()
    table = build_add(problem)
    vmap = variance_components(table)
    rows = []
    print(f"errors: {cfg.function_name}, dim {cfg.dim}, total variance {_fmt(vmap.total)}")
    print(f"  {'S':>3} {'e_add':>16} {'e_rdd_expected':>16} {'lower':>16} {'upper':>16} {'ratio':>12}")
    for s in orders:
        budget = rdd_expected_error(s, vmap)
        ratio = budget.e_rdd_expected / budget.e_add if budget.e_add > 0.0 else float("nan")
        ratio_cell = "" if budget.e_add <= 0.0 else ratio
        rows.append(
            [s, budget.e_add, budget.e_rdd_expected, budget.lower, budget.upper, ratio_cell]
        )
        print(
            f"  {s:>3} {_fmt(budget.e_add):>16} {_fmt(budget.e_rdd_expected):>16}"
            f" {_fmt(budget.lower):>16} {_fmt(budget.upper):>16}"
            f" {(_fmt(ratio) if budget.e_add > 0 else 'n/a'):>12}"
        )
    _write_csv(
        cfg.out_dir / "errors.csv",
        ["order", "e_add", "e_rdd_expected", "lower_bound", "upper_bound", "ratio"],
        rows,
    )
    print(f"  wrote {cfg.out_dir / 'errors.csv'}")
    return EXIT_OK


def cmd_verify(cfg: RunConfig, *, corrupt_table: bool = False) -> int:
    problem = cfg.problem()
    orders = cfg.orders_to_run()
    checks: list[CheckResult] = []

    rules = problem.rules
    norm_resid = max(abs(float(np.sum(r.weights)) - 1.0) for r in rules)
    checks.append(
        CheckResult("quadrature_normalization", norm_resid, 1e-14, norm_resid <= 1e-14)
    )
    exact_resid = max(
        gauss_exactness_residual(m, r)
        for m, r in zip(problem.measure.marginals, rules)
    )
    checks.append(
        CheckResult("quadrature_exactness", exact_resid, 1e-12, exact_resid <= 1e-12)
    )

    n_enum = sum(1 for _ in all_subsets_up_to(cfg.dim, cfg.dim))
    count_gap = abs(n_enum - count_up_to(cfg.dim, cfg.dim))
    checks.append(
        CheckResult("subset_enumeration_count", float(count_gap), 0.0, count_gap == 0)
    )

    table = build_add(problem, interpolation=True)
    if corrupt_table:
        # test hook: break the first univariate component's zero mean
        table._components[1] = table._components[1] + 1e-3 * table.scale
    checks.extend(check_add_structure(table))

    vmap = variance_components(table, check_closure=False)
    closure = variance_closure_residual(table, vmap)
    checks.append(CheckResult("variance_closure", closure, 1e-9, closure <= 1e-9))

    if cfg.dim <= 5:
        worst = 0.0
        worst_label = ""
        denom = max(vmap.total, 1e-300)
        for u in all_subsets_up_to(cfg.dim, cfg.dim):
            if u.is_empty:
                continue
            direct = sobol_D(problem, u)
            subset_sum = sum(
                vmap.sigma2[m] for m in vmap.sigma2 if m & ~u.mask == 0
            )
            r = abs(direct - subset_sum) / denom
            if r > worst:
                worst, worst_label = r, f"subset {u.label()}"
        checks.append(
            CheckResult("subset_sum_variance_identity", worst, 1e-8, worst <= 1e-8, worst_label)
        )

    rng = np.random.default_rng(cfg.seed)
    anchor = problem.measure.sample(rng)
    rdd_table = build_rdd(problem, anchor)
    checks.extend(check_rdd_structure(rdd_table, seed=cfg.seed))

    for s in range(min(3, cfg.dim - 1) + 1):
        checks.append(check_form_equivalence(problem, s, seed=cfg.seed + s))

    slack = 1e-12
    for s in orders:
        budget = rdd_expected_error(s, vmap)
        if budget.e_add <= 0.0:
            continue
        lo_ok = budget.e_rdd_expected >= budget.lower * (1.0 - slack)
        hi_ok = budget.e_rdd_expected <= budget.upper * (1.0 + slack)
        gap = 0.0 if (lo_ok and hi_ok) else min(
            abs(budget.e_rdd_expected - budget.lower), abs(budget.e_rdd_expected - budget.upper)
        )
        checks.append(
            CheckResult(
                f"error_bounds_S{s}",
                gap,
                slack * budget.upper,
                lo_ok and hi_ok,
                f"budget {_fmt(budget.e_rdd_expected)} in [{_fmt(budget.lower)}, {_fmt(budget.upper)}]",
            )
        )

    for s in orders:
        est = mc_add_error(problem, table, s, cfg.n_samples, cfg.seed)
        target = sum(v for m, v in vmap.sigma2.items() if m.bit_count() > s)
        gate = 3.0 * est.std_error
        resid = abs(est.mean - target)
        checks.append(
            CheckResult(
                f"mc_gate_add_S{s}",
                resid,
                gate,
                resid <= gate,
                f"sampled {_fmt(est.mean)} vs analytic {_fmt(target)} at n={est.n}",
            )
        )
        if s < cfg.dim:
            budget = rdd_expected_error(s, vmap)
            pairs = max(cfg.n_samples, 10_000)
            est = mc_expected_rdd_error(problem, s, pairs, cfg.seed + 1)
            gate = 3.0 * est.std_error
            resid = abs(est.mean - budget.e_rdd_expected)
            checks.append(
                CheckResult(
                    f"mc_gate_rdd_S{s}",
                    resid,
                    gate,
                    resid <= gate,
                    f"sampled {_fmt(est.mean)} vs analytic {_fmt(budget.e_rdd_expected)} at n={est.n}",
                )
            )

    passed = all(c.passed for c in checks)
    report = {
        "command": "verify",
        "version": __version__,
        "function": cfg.function_name,
        "dim": cfg.dim,
        "seed": cfg.seed,
        "n_samples": cfg.n_samples,
        "corrupt_table": corrupt_table,
        "checks": [_check_dict(c) for c in checks],
        "passed": passed,
    }
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    (cfg.out_dir / "verify_report.json").write_text(json.dumps(report, indent=2) + "\n")
    print(f"verify: {cfg.function_name}, dim {cfg.dim}, seed {cfg.seed}")
    _print_checks(checks)
    print(f"  report: {cfg.out_dir / 'verify_report.json'}")
    print(f"  {'all checks passed' if passed else 'CHECKS FAILED'}")
    return EXIT_OK if passed else EXIT_CHECKS_FAILED


def cmd_figure1(cfg: RunConfig) -> int:
    f1 = cfg.figure1
    left_rows = []
    for dim in range(f1.n_min, f1.n_max + 1):
        left_rows.append([dim, pmin_for_N(dim)])
    _write_csv(cfg.out_dir / "figure1_left.csv", ["dim", "p_min"], left_rows)
    right_rows = []
    for rate in f1.rates:
        model = DecayModel(f1.right_dim, rate, f1.scale)
        for point in decay_curves(model):
            right_rows.append(
                [rate, point.order, point.e_add_normalized, point.e_rdd_normalized]
            )
    _write_csv(
        cfg.out_dir / "figure1_right.csv",
        ["rate", "order", "e_add_normalized", "e_rdd_normalized"],
        right_rows,
    )
    print(
        f"figure1: threshold rates for dim {f1.n_min}..{f1.n_max}; "
        f"decay sweeps at dim {f1.right_dim}, rates {', '.join(_fmt(r) for r in f1.rates)}"
    )
    print(f"  p_min({f1.n_max}) = {_fmt(left_rows[-1][1])}")
    print(f"  wrote {cfg.out_dir / 'figure1_left.csv'} and {cfg.out_dir / 'figure1_right.csv'}")
    return EXIT_OK


def cmd_contrived(cfg: RunConfig) -> int:
    rep = contrived_example()
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    (out / "contrived.json").write_text(
        json.dumps(dataclasses.asdict(rep), indent=2) + "\n"
    )
    print(f"two-scale stress case: {rep.dim} variables,")
    print(
        f"  {_fmt(100 * rep.univariate_share)}% of the variance univariate, "
        f"{_fmt(100 * rep.top_share)}% in the full {rep.dim}-way interaction."
    )
    print("  (all error values in units of the total variance)")
    print(f"  integration-based error, order 1: {_fmt(rep.e_add_order1)}")
    print(f"  integration-based error, order 2: {_fmt(rep.e_add_order2)}")
    print(f"  expected anchored error,  order 1: {_fmt(rep.e_rdd_order1)}")
    print(f"  expected anchored error,  order 2: {_fmt(rep.e_rdd_order2)}")
    print(
        "  raising the order makes the anchored budget WORSE: "
        f"{'yes' if rep.inversion else 'no'}"
    )
    print(f"  wrote {out / 'contrived.json'}")
    return EXIT_OK


# -- argument parsing ----------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as ConfigError (exit 1)."""

    def error(self, message):  # noqa: A003 - argparse API
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="dimdecomp",
        description="Dimensional decompositions and truncation-error budgets.",
    )
    parser.add_argument("--version", action="version", version=f"dimdecomp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON run config (see README)")
        p.add_argument("--out", help="output directory (default: out)")
        p.add_argument("--seed", type=int, help="base RNG seed")
        p.add_argument("--n-samples", type=int, dest="n_samples", help="Monte Carlo sample count")
        p.add_argument("--quad-order", type=int, dest="quad_order", help="Gauss nodes per coordinate")
        p.add_argument(
            "--truncation-orders",
            type=int,
            nargs="+",
            dest="truncation_orders",
            metavar="S",
            help="truncation orders to process (default: all 0..dim-1)",
        )

    p = sub.add_parser("decompose", help="variance split and sensitivity indices")
    common(p)
    p = sub.add_parser("errors", help="truncation-error budgets per order")
    common(p)
    p = sub.add_parser("verify", help="property battery with analytic-vs-sampled gates")
    common(p)
    p.add_argument(
        "--corrupt-table",
        action="store_true",
        help="fault-injection hook: break one component before checking",
    )
    p = sub.add_parser("figure1", help="threshold-rate table and decay sweeps")
    common(p)
    p = sub.add_parser("contrived", help="two-scale stress case for the error budgets")
    common(p)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = load_config(args.config, args)
        if args.command == "decompose":
            return cmd_decompose(cfg)
        if args.command == "errors":
            return cmd_errors(cfg)
        if args.command == "verify":
            return cmd_verify(cfg, corrupt_table=args.corrupt_table)
        if args.command == "figure1":
            return cmd_figure1(cfg)
        if args.command == "contrived":
            return cmd_contrived(cfg)
        raise ConfigError(f"unknown command {args.command!r}")  # pragma: no cover
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
