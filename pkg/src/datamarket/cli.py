"""Command-line frontend: fit, optimize, surface, equilibrium.

Exit codes: 0 success, 1 input error, 2 fit non-convergence, 3 closed form
requested but unavailable (numeric result still written), 4 no-trade bracket.
All floating-point output is printed with 9 significant digits and every
command is deterministic, so repeated runs produce byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import calibration, provider, stackelberg
from .calibration import CsvFormatError, FitOptions
from .provider import ClosedFormUnavailable, MarketParams
from .search import BracketError
from .utility import DomainError, Family, ParameterError, UtilityParams, evaluate, feasible_domain

_FMT = "%.9g"

# Bundled demo calibration used by the figure presets (users=500 market).
_PRESET_PARAMS = UtilityParams.fraction(kappa=1.109, g=0.271)
_PRESET_USERS = 500
_PRESET_DATA_PRICE = 0.5
_PRESET_SWEEP_G = (0.1, 0.2, 0.3, 0.4)


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; this CLI reserves 2 for non-convergence."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _fmt(x: float) -> str:
    return _FMT % x


def _round9(obj):
    """Round every float in a JSON tree to 9 significant digits."""
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, float):
        return float(_FMT % obj)
    if isinstance(obj, dict):
        return {k: _round9(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round9(v) for v in obj]
    return obj


def _write_json(path: str, obj) -> None:
    Path(path).write_text(json.dumps(_round9(obj), indent=2) + "\n", encoding="utf-8")


def _pair(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected LO,HI, got {text!r}")
    return float(parts[0]), float(parts[1])


def _grid3(text: str) -> tuple[float, float, int]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected LO,HI,COUNT, got {text!r}")
    return float(parts[0]), float(parts[1]), int(parts[2])


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(","))


def build_parser() -> _Parser:
    parser = _Parser(prog="datamarket", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", parents=[], help="calibrate utility parameters from a measurement CSV")
    p_fit.add_argument("--input", help="measurement CSV (header exactly 'n,error')")
    p_fit.add_argument("--family", choices=["fraction", "exponential", "both"], default=None)
    p_fit.add_argument("--out", help="output JSON path")
    p_fit.add_argument("--max-iterations", type=int, default=None)
    p_fit.add_argument("--seed", type=int, default=None, help="reserved; fitting is deterministic")
    p_fit.add_argument("--config", help="JSON file supplying any of the above")

    p_opt = sub.add_parser("optimize", help="maximize provider profit")
    p_opt.add_argument("--params", help="utility params JSON (or fit output)")
    p_opt.add_argument("--family", choices=["fraction", "exponential"], default=None,
                       help="pick a family from a two-family fit file")
    p_opt.add_argument("--users", type=int, default=None)
    p_opt.add_argument("--data-price", type=float, default=None)
    p_opt.add_argument("--max-wtp", type=float, default=None)
    p_opt.add_argument("--out", help="output JSON path")
    p_opt.add_argument("--bracket", type=_pair, default=None, help="n search bracket LO,HI")
    p_opt.add_argument("--grid", type=int, default=None, help="coarse-scan resolution")
    p_opt.add_argument("--method", choices=["auto", "numeric", "closed"], default=None)
    group = p_opt.add_mutually_exclusive_group()
    group.add_argument("--fix-n", type=float, default=None, help="optimize the fee at this data size")
    group.add_argument("--fix-ps", type=float, default=None, help="optimize the data size at this fee")
    p_opt.add_argument("--config", help="JSON file supplying any of the above")

    p_sur = sub.add_parser("surface", help="emit the profit surface over an (n, p_s) grid")
    p_sur.add_argument("--params", default=None)
    p_sur.add_argument("--family", choices=["fraction", "exponential"], default=None)
    p_sur.add_argument("--preset", choices=["fig4"], default=None)
    p_sur.add_argument("--users", type=int, default=None)
    p_sur.add_argument("--data-price", type=float, default=None)
    p_sur.add_argument("--max-wtp", type=float, default=None)
    p_sur.add_argument("--n-grid", type=_grid3, default=None, help="LO,HI,COUNT")
    p_sur.add_argument("--ps-grid", type=_grid3, default=None, help="LO,HI,COUNT")
    p_sur.add_argument("--out", help="output CSV path")
    p_sur.add_argument("--config", help="JSON file supplying any of the above")

    p_eq = sub.add_parser("equilibrium", help="solve the data-source pricing game")
    p_eq.add_argument("--params", default=None)
    p_eq.add_argument("--family", choices=["fraction", "exponential"], default=None)
    p_eq.add_argument("--preset", choices=["fig5", "fig6"], default=None)
    p_eq.add_argument("--users", type=int, default=None)
    p_eq.add_argument("--max-wtp", type=float, default=None)
    p_eq.add_argument("--bracket", type=_pair, default=None, help="price bracket LO,HI")
    p_eq.add_argument("--resolution", type=int, default=None, help="price-grid points (>= 100)")
    p_eq.add_argument("--data-price", type=float, default=None, help="fixed price for --sweep-g")
    p_eq.add_argument("--sweep-g", type=_floats, default=None,
                      help="comma-separated g values; emits best responses at the fixed price")
    p_eq.add_argument("--out", help="output JSON path (CSV for --sweep-g)")
    p_eq.add_argument("--curve-out", default=None, help="demand-curve CSV path")
    p_eq.add_argument("--config", help="JSON file supplying any of the above")
    return parser


def _apply_config(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset options from --config; explicit flags win."""
    if not getattr(args, "config", None):
        return args
    with open(args.config, encoding="utf-8") as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ValueError(f"{args.config}: config must be a JSON object")
    for key, value in cfg.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise ValueError(f"{args.config}: unknown config key {key!r}")
        if getattr(args, attr) is None:
            if attr in ("bracket",):
                value = tuple(float(v) for v in value)
            elif attr in ("n_grid", "ps_grid"):
                value = (float(value[0]), float(value[1]), int(value[2]))
            elif attr == "sweep_g":
                value = tuple(float(v) for v in value)
            setattr(args, attr, value)
    return args


def _need(args: argparse.Namespace, name: str):
    value = getattr(args, name.replace("-", "_"))
    if value is None:
        raise ValueError(f"missing required option --{name}")
    return value


def _load_params(path: str, family: str | None) -> UtilityParams:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if isinstance(obj, dict) and "family" in obj:
        return UtilityParams.from_json(obj)
    if isinstance(obj, dict) and "params" in obj:
        return UtilityParams.from_json(obj["params"])
    if isinstance(obj, dict) and ("fraction" in obj or "exponential" in obj):
        if family is None:
            raise ValueError(f"{path} holds fits for both families; pick one with --family")
        entry = obj.get(family)
        if entry is None:
            raise ValueError(f"{path} has no {family!r} fit")
        return UtilityParams.from_json(entry.get("params", entry))
    raise ValueError(f"{path}: unrecognized params JSON shape")


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_fit(args: argparse.Namespace) -> int:
    points = calibration.load_points(_need(args, "input"))
    family = args.family or "both"
    options = FitOptions(max_iterations=args.max_iterations) if args.max_iterations else FitOptions()
    if family == "both":
        results = {
            name: calibration.fit(points, Family(name), options)
            for name in ("fraction", "exponential")
        }
        payload = {name: res.to_json() for name, res in results.items()}
        all_converged = all(res.converged for res in results.values())
    else:
        res = calibration.fit(points, Family(family), options)
        payload = res.to_json()
        all_converged = res.converged
    _write_json(_need(args, "out"), payload)
    print(f"wrote {args.out}")
    return 0 if all_converged else 2


def _market(args: argparse.Namespace, users: int | None = None, data_price: float | None = None) -> MarketParams:
    return MarketParams(
        users=users if users is not None else _need(args, "users"),
        data_price=data_price if data_price is not None else _need(args, "data-price"),
        max_nominal_wtp=args.max_wtp if args.max_wtp is not None else 1.0,
    )


def cmd_optimize(args: argparse.Namespace) -> int:
    params = _load_params(_need(args, "params"), args.family)
    market = _market(args)
    out_path = _need(args, "out")

    if args.fix_n is not None:
        sol = provider.optimize_fixed_n(market, params, args.fix_n)
        _write_json(out_path, sol.to_json())
        print(f"p_s* = {_fmt(sol.decision.p_s)}  profit = {_fmt(sol.profit)}")
        return 0
    if args.fix_ps is not None:
        sol = provider.optimize_fixed_ps(market, params, args.fix_ps)
        _write_json(out_path, sol.to_json())
        print(f"n* = {_fmt(sol.decision.n)}  profit = {_fmt(sol.profit)}")
        return 0

    method = args.method or "auto"
    grid = args.grid or 2001
    numeric = provider.optimize_numeric(market, params, args.bracket, grid)

    closed = None
    closed_error = None
    if method in ("auto", "closed"):
        try:
            if params.family is Family.FRACTION:
                closed = provider.closed_form_fraction(market, params, args.bracket, grid)
            else:
                closed = provider.closed_form_exponential(market, params)
        except (ClosedFormUnavailable, ValueError) as exc:
            closed_error = exc

    if method == "closed" and closed is not None:
        payload = closed.to_json()
        sol = closed
    else:
        payload = numeric.to_json()
        sol = numeric
        if closed is not None:
            payload["closed_form_roots"] = [c.to_json() for c in closed.closed_form_roots]
            if closed.closed_form_agrees is not None:
                payload["closed_form_agrees"] = closed.closed_form_agrees
            if closed.imag_residual:
                payload["imag_residual"] = True
    _write_json(out_path, payload)
    print(f"n* = {_fmt(sol.decision.n)}  p_s* = {_fmt(sol.decision.p_s)}  profit = {_fmt(sol.profit)}")
    if method == "closed" and closed is None:
        print(f"closed form unavailable: {closed_error}", file=sys.stderr)
        return 3
    return 0


def cmd_surface(args: argparse.Namespace) -> int:
    if args.preset == "fig4":
        params = _PRESET_PARAMS
        users = args.users if args.users is not None else _PRESET_USERS
        data_price = args.data_price if args.data_price is not None else _PRESET_DATA_PRICE
        n_min = feasible_domain(params)[0]
        n_grid = args.n_grid or (n_min, 100.0, 201)
        ps_grid = args.ps_grid or (0.0, 1.0, 101)
    else:
        params = _load_params(_need(args, "params"), args.family)
        users, data_price = None, None
        n_grid, ps_grid = _need(args, "n-grid"), _need(args, "ps-grid")
    market = _market(args, users, data_price)

    n_lo, n_hi, n_count = n_grid
    ps_lo, ps_hi, ps_count = ps_grid
    if n_count < 1 or ps_count < 1 or n_hi < n_lo or ps_hi < ps_lo:
        raise ValueError(f"invalid grids n={n_grid} p_s={ps_grid}")
    ns = np.linspace(n_lo, n_hi, n_count)
    pss = np.linspace(ps_lo, ps_hi, ps_count)
    ceilings = evaluate(params, ns) * market.max_nominal_wtp   # raises on infeasible n

    lines = ["n,p_s,profit,feasible"]
    for n, ceiling in zip(ns, np.atleast_1d(ceilings)):
        row_profit = provider.raw_profit(market, params, float(n), pss)
        for p_s, value in zip(pss, np.atleast_1d(row_profit)):
            ok = 0.0 <= p_s <= ceiling
            lines.append(f"{_fmt(n)},{_fmt(p_s)},{_fmt(value)},{'true' if ok else 'false'}")
    Path(_need(args, "out")).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {args.out} ({(len(lines) - 1)} rows)")
    return 0


def cmd_equilibrium(args: argparse.Namespace) -> int:
    preset = args.preset
    if preset in ("fig5", "fig6"):
        params = _PRESET_PARAMS
        users = args.users if args.users is not None else _PRESET_USERS
    else:
        params = _load_params(_need(args, "params"), args.family)
        users = _need(args, "users")
    sweep = args.sweep_g if args.sweep_g is not None else (_PRESET_SWEEP_G if preset == "fig6" else None)
    out_path = _need(args, "out")

    if sweep is not None:
        if params.family is not Family.FRACTION:
            raise ValueError("--sweep-g applies to the fraction family")
        data_price = args.data_price if args.data_price is not None else (
            _PRESET_DATA_PRICE if preset == "fig6" else None)
        if data_price is None:
            raise ValueError("--sweep-g needs --data-price")
        market = MarketParams(users=users, data_price=data_price,
                              max_nominal_wtp=args.max_wtp if args.max_wtp is not None else 1.0)
        lines = ["g,n,p_s,leader_profit,follower_profit"]
        for g in sweep:
            swept = UtilityParams.fraction(params.scale, g)
            sol = provider.optimize_numeric(market, swept)
            lines.append(",".join(_fmt(v) for v in (
                g, sol.decision.n, sol.decision.p_s, data_price * sol.decision.n, sol.profit)))
        Path(out_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"wrote {out_path} ({len(sweep)} rows)")
        return 0

    market = MarketParams(users=users, data_price=0.0,
                          max_nominal_wtp=args.max_wtp if args.max_wtp is not None else 1.0)
    bracket = args.bracket
    if bracket is None and preset == "fig5":
        bracket = (0.01, provider.shutoff_price(market, params))
    resolution = args.resolution if args.resolution is not None else 200
    eq = stackelberg.solve_equilibrium(market, params, bracket, resolution)
    _write_json(out_path, eq.to_json())

    lo, hi = bracket if bracket is not None else (0.0, provider.shutoff_price(market, params))
    grid = np.linspace(lo, hi, resolution)
    curve = stackelberg.demand_curve(market, params, grid)
    curve_path = args.curve_out or str(Path(out_path).with_suffix(".csv"))
    Path(curve_path).write_text(stackelberg.demand_curve_to_csv(curve, _FMT), encoding="utf-8")
    print(f"p_b* = {_fmt(eq.p_b_star)}  n* = {_fmt(eq.n_star)}  "
          f"leader profit = {_fmt(eq.leader_profit)}")
    print(f"wrote {out_path} and {curve_path}")
    return 0


_COMMANDS = {
    "fit": cmd_fit,
    "optimize": cmd_optimize,
    "surface": cmd_surface,
    "equilibrium": cmd_equilibrium,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _apply_config(args)
        return _COMMANDS[args.command](args)
    except stackelberg.NoTradeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (CsvFormatError, ParameterError, DomainError, BracketError,
            calibration.DegenerateDataError, provider.UnboundedDemandError,
            ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
