"""Command-line front end.

Subcommands::

    smmport solve-discrete --market M.json --objective sharpe [--risk-budget R]
                           [--risk-free r] [--risk-param L] [--constraints C.json]
    smmport simulate-lcem  --model M.json --n N [--seed S] [--risk-budget R]
                           [--n-streams K] [--format json|text]
    smmport merge-states   --market M.json --subset 0,1
    smmport leverage-audit --csv DATA.csv [--bandwidth H] [--grid-size N]
                           [--floor F]
    smmport flatten        --returns R.csv --features F.csv --out OUT.csv

Results go to standard output as JSON (CSV for leverage-audit). Exit
status: 0 success, 1 numerical failure (e.g. a non-positive-definite
state), 2 invalid input. Identical invocations produce byte-identical
output; numbers are serialized with 17 significant digits so values
round-trip losslessly.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from .errors import (
    DegenerateMarket,
    DimensionMismatch,
    DomainError,
    InvalidSubset,
    NotPositiveDefinite,
    ShapeMismatch,
    SingularBasis,
    SingularConstraintSystem,
    SmmError,
)
from .hedging import constraints_from_dict, flatten_pseudo_assets, solve_hedge
from .lcem import LcemComparison, LcemModel, McConfig, compare_policies
from .leverage import LeverageSample, leverage_curve
from .market import DiscreteMarket, evaluate, merge_states, q_of, smm_policy
from .moments import Kelly, MeanVariance, SharpeBudget, optimal_objective_value

_NUMERICAL_ERRORS = (
    NotPositiveDefinite,
    SingularConstraintSystem,
    SingularBasis,
    DegenerateMarket,
)
_VALIDATION_ERRORS = (
    DomainError,
    DimensionMismatch,
    ShapeMismatch,
    InvalidSubset,
    ValueError,
    OSError,
)


def _fmt(x: float) -> str:
    if x != x:
        return "NaN"
    if x in (float("inf"), float("-inf")):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def render_json(obj) -> str:
    """Deterministic JSON with floats at 17 significant digits."""

    def emit(o) -> str:
        if isinstance(o, dict):
            items = ", ".join(f"{json.dumps(str(k))}: {emit(v)}" for k, v in o.items())
            return "{" + items + "}"
        if isinstance(o, (list, tuple)):
            return "[" + ", ".join(emit(v) for v in o) + "]"
        if isinstance(o, bool):
            return "true" if o else "false"
        if isinstance(o, (int, np.integer)):
            return str(int(o))
        if isinstance(o, (float, np.floating)):
            return _fmt(float(o))
        if o is None:
            return "null"
        return json.dumps(str(o))

    return emit(obj) + "\n"


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise DomainError(f"{path}: invalid JSON ({exc})") from None


def _objective_from_args(args) -> SharpeBudget | MeanVariance | Kelly:
    if args.objective == "sharpe":
        return SharpeBudget(risk_budget=args.risk_budget, risk_free=args.risk_free)
    if args.objective == "mean-variance":
        return MeanVariance(risk_param=args.risk_param)
    return Kelly()


def _objective_dict(obj) -> dict:
    if isinstance(obj, SharpeBudget):
        return {"kind": "sharpe", "risk_budget": obj.risk_budget,
                "risk_free": obj.risk_free}
    if isinstance(obj, MeanVariance):
        return {"kind": "mean-variance", "risk_param": obj.risk_param}
    return {"kind": "kelly"}


def _cmd_solve_discrete(args) -> str:
    market = DiscreteMarket.from_dict(_load_json(args.market))
    objective = _objective_from_args(args)
    rfr = args.risk_free if args.objective == "sharpe" else 0.0
    out = {
        "command": "solve-discrete",
        "objective": _objective_dict(objective),
        "q": q_of(market),
    }
    if args.constraints:
        constraints = constraints_from_dict(_load_json(args.constraints), market)
        policy, sol = solve_hedge(market, constraints, objective)
        out["q_g"] = sol.q_g
        out["spanned_q"] = sol.spanned_q
        out["multipliers"] = sol.multipliers.tolist()
        out["optimal_objective"] = optimal_objective_value(sol.q_g, objective)
    else:
        policy = smm_policy(market, objective)
        out["optimal_objective"] = optimal_objective_value(out["q"], objective)
    out["policy"] = [w.tolist() for w in policy.weights]
    out["summary"] = evaluate(market, policy, rfr=rfr).to_dict()
    return render_json(out)


def _cmd_merge_states(args) -> str:
    market = DiscreteMarket.from_dict(_load_json(args.market))
    try:
        subset = [int(tok) for tok in args.subset.split(",") if tok.strip() != ""]
    except ValueError:
        raise DomainError(f"--subset must be comma-separated integers, got {args.subset!r}")
    merged, delta_q = merge_states(market, subset)
    out = {
        "command": "merge-states",
        "subset": sorted(set(subset)),
        "q_before": q_of(market),
        "q_after": q_of(merged),
        "delta_q": delta_q,
        "merged_market": merged.to_dict(),
    }
    return render_json(out)


def _format_report_text(report: LcemComparison, cfg: McConfig) -> str:
    rows = [
        ("q", report.q),
        ("sr_smm", report.sr_smm),
        ("sr_mp", report.sr_mp),
        ("delta_sr", report.delta_sr),
        ("rescale_std", report.rescale_std),
    ]
    lines = [f"{'metric':<12} {'value':>24} {'std_error':>24} {'n':>9}"]
    for name, est in rows:
        lines.append(
            f"{name:<12} {_fmt(est.value):>24} {_fmt(est.std_error):>24} {est.n:>9d}"
        )
    lines.append(f"{'smm_scale':<12} {_fmt(report.smm_scale):>24}")
    lines.append(f"{'mp_scale':<12} {_fmt(report.mp_scale):>24}")
    lines.append(f"{'seed':<12} {cfg.seed:>24d}")
    return "\n".join(lines) + "\n"


def _cmd_simulate_lcem(args) -> str:
    model = LcemModel.from_dict(_load_json(args.model))
    cfg = McConfig(n_samples=args.n, seed=args.seed, n_streams=args.n_streams)
    report = compare_policies(model, cfg, risk_budget=args.risk_budget)
    if args.format == "text":
        return _format_report_text(report, cfg)
    out = {
        "command": "simulate-lcem",
        "n_samples": cfg.n_samples,
        "seed": cfg.seed,
        "n_streams": cfg.n_streams,
        "risk_budget": args.risk_budget,
    }
    out.update(report.to_dict())
    return render_json(out)


def _read_leverage_csv(path: str) -> LeverageSample:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["leverage", "return"]:
            raise DomainError(f'{path}: expected header "leverage,return"')
        lev, ret = [], []
        for row_num, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                lev.append(float(row[0]))
                ret.append(float(row[1]))
            except (ValueError, IndexError):
                raise DomainError(f"{path}:{row_num}: malformed row {row!r}") from None
    return LeverageSample.from_observations(lev, ret)


def _cmd_leverage_audit(args) -> str:
    sample = _read_leverage_csv(args.csv)
    grid = None
    if args.grid_size is not None:
        if args.grid_size < 1:
            raise DomainError("--grid-size must be at least 1")
        grid = np.linspace(float(sample.x.min()), float(sample.x.max()),
                           args.grid_size)
    curve = leverage_curve(
        sample, grid=grid, bandwidth=args.bandwidth, floor=args.floor
    )
    lines = ["x,m_hat,s_hat,lever_hat"]
    for i in range(curve.n_points):
        lines.append(
            f"{_fmt(curve.grid[i])},{_fmt(curve.m_hat[i])},"
            f"{_fmt(curve.s_hat[i])},{_fmt(curve.lever_hat[i])}"
        )
    return "\n".join(lines) + "\n"


def _read_matrix_csv(path: str) -> tuple[list[str], np.ndarray]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DomainError(f"{path}: empty file")
        rows = []
        for row_num, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise DomainError(f"{path}:{row_num}: malformed row {row!r}") from None
    if not rows:
        raise DomainError(f"{path}: no data rows")
    mat = np.array(rows)
    if mat.shape[1] != len(header):
        raise DomainError(f"{path}: rows do not match header width")
    return [h.strip() for h in header], mat


def _cmd_flatten(args) -> str:
    r_names, returns = _read_matrix_csv(args.returns)
    f_names, features = _read_matrix_csv(args.features)
    flat = flatten_pseudo_assets(returns, features)
    names = [f"{rn}*{fn}" for rn in r_names for fn in f_names]
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(names) + "\n")
        for row in flat:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    out = {
        "command": "flatten",
        "rows": int(flat.shape[0]),
        "columns": int(flat.shape[1]),
        "out": args.out,
    }
    return render_json(out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smmport",
        description="Conditional portfolio policies from moment functions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve-discrete", help="optimal policy on a discrete market")
    p.add_argument("--market", required=True, help="market JSON path")
    p.add_argument("--objective", choices=["sharpe", "mean-variance", "kelly"],
                   default="sharpe")
    p.add_argument("--risk-budget", type=float, default=1.0)
    p.add_argument("--risk-free", type=float, default=0.0)
    p.add_argument("--risk-param", type=float, default=1.0,
                   help="risk parameter for --objective mean-variance")
    p.add_argument("--constraints", help="hedge constraint JSON path")
    p.set_defaults(func=_cmd_solve_discrete)

    p = sub.add_parser("simulate-lcem", help="Monte Carlo policy comparison")
    p.add_argument("--model", required=True, help="model JSON path")
    p.add_argument("--n", type=int, required=True, help="number of samples")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--risk-budget", type=float, default=1.0)
    p.add_argument("--n-streams", type=int, default=1)
    p.add_argument("--format", choices=["json", "text"], default="json")
    p.set_defaults(func=_cmd_simulate_lcem)

    p = sub.add_parser("merge-states", help="coarsen a market and report delta q")
    p.add_argument("--market", required=True)
    p.add_argument("--subset", required=True, help="comma-separated state indices")
    p.set_defaults(func=_cmd_merge_states)

    p = sub.add_parser("leverage-audit", help="implied optimal-leverage curve")
    p.add_argument("--csv", required=True, help='CSV with header "leverage,return"')
    p.add_argument("--bandwidth", type=float, default=None)
    p.add_argument("--grid-size", type=int, default=None)
    p.add_argument("--floor", type=float, default=None)
    p.set_defaults(func=_cmd_leverage_audit)

    p = sub.add_parser("flatten", help="pseudo-asset expansion of returns x features")
    p.add_argument("--returns", required=True, help="returns sample CSV")
    p.add_argument("--features", required=True, help="features sample CSV")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=_cmd_flatten)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        payload = args.func(args)
    except _NUMERICAL_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SmmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(payload)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
