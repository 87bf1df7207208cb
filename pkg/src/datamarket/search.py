"""Scalar maximization: coarse grid scan plus golden-section refinement.

The grid scan guards against multimodality; golden-section only has to be
trustworthy inside the best grid cell's neighborhood.  Ties resolve to the
smallest abscissa so repeated runs are byte-identical.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class BracketError(ValueError):
    """Search bracket is empty or inverted."""


def golden_section_max(f: Callable[[float], float], lo: float, hi: float, x_tol: float) -> tuple[float, float]:
    """Maximize f on [lo, hi]; returns (x, f(x)) once the interval is < x_tol."""
    if hi < lo:
        raise BracketError(f"inverted bracket [{lo}, {hi}]")
    a, b = lo, hi
    if b - a <= x_tol:
        x = 0.5 * (a + b)
        return x, f(x)
    x1 = b - _INV_PHI * (b - a)
    x2 = a + _INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > x_tol:
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INV_PHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INV_PHI * (b - a)
            f2 = f(x2)
    x = x1 if f1 >= f2 else x2
    return x, f(x1 if f1 >= f2 else x2)


def maximize_scalar(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    grid_points: int,
    x_tol: float,
    f_grid: Callable[[np.ndarray], np.ndarray] | None = None,
) -> tuple[float, float]:
    """Grid scan then golden-section refinement around the best grid cell.

    ``f_grid``, when given, evaluates f on a whole ndarray at once and must
    agree with ``f`` pointwise.  Returns (x*, f(x*)); the result never loses
    to any grid point, and ties prefer the smaller x.
    """
    if hi < lo:
        raise BracketError(f"inverted bracket [{lo}, {hi}]")
    if grid_points < 2 or hi == lo:
        return lo, f(lo)
    xs = np.linspace(lo, hi, grid_points)
    vals = f_grid(xs) if f_grid is not None else np.array([f(x) for x in xs])
    i = int(np.argmax(vals))
    a = xs[max(i - 1, 0)]
    b = xs[min(i + 1, grid_points - 1)]
    xr, fr = golden_section_max(f, float(a), float(b), x_tol)
    xg, fg = float(xs[i]), float(vals[i])
    if fr > fg or (fr == fg and xr < xg):
        return xr, fr
    return xg, fg
