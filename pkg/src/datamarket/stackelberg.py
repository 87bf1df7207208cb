"""Data-source price optimization against the provider's best response.

The data source leads by naming a unit price p_b; the provider follows with
its jointly optimal purchase n(p_b), making the leader's payoff
P(p_b) = p_b * n(p_b).  P is cheap but not provably unimodal, so the search
is a coarse grid scan with golden-section refinement around the best cell.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .provider import MarketParams, ProviderSolution, optimize_numeric, shutoff_price
from .search import BracketError, golden_section_max
from .utility import UtilityParams

__all__ = [
    "DemandPoint",
    "StackelbergEquilibrium",
    "NoTradeError",
    "demand",
    "demand_curve",
    "leader_profit",
    "solve_equilibrium",
    "demand_curve_to_csv",
]

_MONOTONE_SLACK = 1e-6


class NoTradeError(Exception):
    """Every price in the bracket yields zero leader revenue."""


@dataclass(frozen=True)
class DemandPoint:
    """Provider best response at one data price: demand n and the profit achieved."""

    p_b: float
    n: float
    follower_profit: float


@dataclass(frozen=True)
class StackelbergEquilibrium:
    p_b_star: float
    n_star: float
    p_s_star: float
    leader_profit: float
    follower_profit: float

    def to_json(self) -> dict:
        return {
            "p_b_star": self.p_b_star,
            "n_star": self.n_star,
            "p_s_star": self.p_s_star,
            "leader_profit": self.leader_profit,
            "follower_profit": self.follower_profit,
        }


def _best_response(
    market: MarketParams,
    params: UtilityParams,
    p_b: float,
    n_bracket: tuple[float, float] | None,
    grid_points: int,
) -> ProviderSolution:
    if p_b < 0:
        raise ValueError(f"data price must be >= 0, got {p_b}")
    priced = dataclasses.replace(market, data_price=p_b)
    if n_bracket is None:
        return optimize_numeric(priced, params, grid_points=grid_points)
    return optimize_numeric(priced, params, n_bracket, grid_points)


def demand(
    market: MarketParams,
    params: UtilityParams,
    p_b: float,
    n_bracket: tuple[float, float] | None = None,
    grid_points: int | None = None,
) -> DemandPoint:
    """Provider's profit-maximizing purchase at price p_b (market's own price ignored)."""
    sol = _best_response(market, params, p_b, n_bracket, grid_points or 2001)
    return DemandPoint(p_b, sol.decision.n, sol.profit)


def demand_curve(
    market: MarketParams,
    params: UtilityParams,
    p_b_grid,
    n_bracket: tuple[float, float] | None = None,
) -> list[DemandPoint]:
    """Demand at each grid price; verifies the curve is nonincreasing."""
    grid = [float(p) for p in p_b_grid]
    if not grid:
        raise ValueError("empty price grid")
    if any(p < 0 for p in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("price grid must be strictly increasing and nonnegative")
    points = [demand(market, params, p, n_bracket) for p in grid]
    for a, b in zip(points, points[1:]):
        if b.n > a.n + _MONOTONE_SLACK:
            raise RuntimeError(
                f"demand increased with price: n({b.p_b})={b.n} > n({a.p_b})={a.n}"
            )
    return points


def leader_profit(p_b: float, point: DemandPoint) -> float:
    """Data-source revenue p_b * n at a demand point computed for that same price."""
    if point.p_b != p_b:
        raise ValueError(f"demand point was computed at p_b={point.p_b}, not {p_b}")
    return p_b * point.n


def solve_equilibrium(
    market: MarketParams,
    params: UtilityParams,
    p_b_bracket: tuple[float, float] | None = None,
    resolution: int = 200,
    n_bracket: tuple[float, float] | None = None,
) -> StackelbergEquilibrium:
    """Leader price maximizing p_b * n(p_b) over the bracket.

    Grid scan (>= 100 points) then golden-section refinement around the best
    cell; equal-profit ties resolve to the smallest price.  Defaults to
    [0, shutoff price].
    """
    if resolution < 100:
        raise ValueError(f"resolution must be >= 100 grid points, got {resolution}")
    if p_b_bracket is None:
        hi = shutoff_price(market, params)
        if hi <= 0:
            raise NoTradeError("shutoff price is 0: no price induces positive demand")
        p_b_bracket = (0.0, hi)
    lo, hi = p_b_bracket
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo or lo < 0:
        raise BracketError(f"invalid price bracket [{lo}, {hi}]")

    def payoff(p_b: float) -> float:
        return p_b * demand(market, params, p_b, n_bracket).n

    grid = np.linspace(lo, hi, resolution)
    profits = np.array([payoff(p) for p in grid])
    if float(np.max(profits)) <= 0.0:
        raise NoTradeError("zero leader profit over the whole bracket: no trade")
    i = int(np.argmax(profits))
    a = float(grid[max(i - 1, 0)])
    b = float(grid[min(i + 1, resolution - 1)])
    x_ref, p_ref = golden_section_max(payoff, a, b, x_tol=1e-8 * max(1.0, hi - lo))

    p_b_star, best = float(grid[i]), float(profits[i])
    if p_ref > best + 1e-12:
        p_b_star, best = x_ref, p_ref
    follower = _best_response(market, params, p_b_star, n_bracket, 2001)
    return StackelbergEquilibrium(
        p_b_star=p_b_star,
        n_star=follower.decision.n,
        p_s_star=follower.decision.p_s,
        leader_profit=p_b_star * follower.decision.n,
        follower_profit=follower.profit,
    )


def demand_curve_to_csv(points: list[DemandPoint], fmt: str = "%.9g") -> str:
    """Render a demand curve as `p_b,n,leader_profit,follower_profit` CSV text."""
    lines = ["p_b,n,leader_profit,follower_profit"]
    for p in points:
        lines.append(",".join(fmt % v for v in (p.p_b, p.n, p.p_b * p.n, p.follower_profit)))
    return "\n".join(lines) + "\n"
