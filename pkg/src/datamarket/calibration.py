"""Estimating utility-curve parameters from (size, error) measurements.

A measurement is a pair (n_j, eps_j): the classification error observed when a
model was trained on n_j items.  The curve parameters are chosen to minimize

    sum_j ( eps_j - (1 - u(n_j)) )^2

by damped Gauss-Newton steps (Levenberg-Marquardt style) with analytic
Jacobians, restarted from four jittered initial guesses because sparse point
sets can have shallow local minima.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .utility import DomainError, Family, UtilityParams, check_feasible, evaluate, feasible_domain

__all__ = [
    "ExperimentPoint",
    "FitOptions",
    "FitResult",
    "CsvFormatError",
    "DegenerateDataError",
    "fit",
    "residual_sse",
    "generate_synthetic",
    "initial_guess",
    "load_points",
    "save_points",
]


class CsvFormatError(ValueError):
    """A measurement CSV violates the `n,error` contract; carries the line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class DegenerateDataError(ValueError):
    """Fewer than two distinct data sizes: the two-parameter fit is underdetermined."""


@dataclass(frozen=True)
class ExperimentPoint:
    """One accuracy measurement: error fraction ``epsilon`` at data size ``n``."""

    n: float
    epsilon: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.n) and self.n >= 0):
            raise ValueError(f"data size must be a finite nonnegative number, got {self.n!r}")
        if not (math.isfinite(self.epsilon) and 0.0 <= self.epsilon <= 1.0):
            raise ValueError(f"error must lie in [0, 1], got {self.epsilon!r}")


@dataclass(frozen=True)
class FitOptions:
    max_iterations: int = 500
    gradient_tol: float = 1e-10      # stop when the sse gradient inf-norm falls below this
    sse_rel_tol: float = 1e-12       # or when an accepted step improves sse by less than this
    starts: int = 4
    init_damping: float = 1e-3


@dataclass(frozen=True)
class FitResult:
    params: UtilityParams
    sse: float
    iterations: int
    converged: bool

    def to_json(self) -> dict:
        return {
            "params": self.params.to_json(),
            "sse": self.sse,
            "iterations": self.iterations,
            "converged": self.converged,
        }


# --------------------------------------------------------------------------
# error model: predicted error 1 - u(n) and its Jacobian in (scale, rate)
# --------------------------------------------------------------------------

def _predicted_error(family: Family, scale: float, rate: float, n: np.ndarray) -> np.ndarray:
    if family is Family.FRACTION:
        return scale / (1.0 + rate * n)
    return scale * np.exp(-rate * n)


def _error_jacobian(family: Family, scale: float, rate: float, n: np.ndarray) -> np.ndarray:
    """d(predicted error)/d(scale, rate), shape (len(n), 2)."""
    if family is Family.FRACTION:
        denom = 1.0 + rate * n
        return np.column_stack([1.0 / denom, -scale * n / denom**2])
    e = np.exp(-rate * n)
    return np.column_stack([e, -scale * n * e])


def _theta_valid(family: Family, scale: float, rate: float, n_smallest: float) -> bool:
    if not (math.isfinite(scale) and math.isfinite(rate)):
        return False
    if scale < 0 or rate <= 0:
        return False
    if family is Family.EXPONENTIAL:
        return scale <= 1.0
    # fraction: every observed size must stay feasible, i.e. kappa <= 1 + g*n_1
    return scale <= 1.0 + rate * n_smallest


def residual_sse(points: list[ExperimentPoint], params: UtilityParams) -> float:
    """Sum of squared residuals eps_j - (1 - u(n_j)); 0 for an empty list."""
    if not points:
        return 0.0
    n = np.array([p.n for p in points])
    eps = np.array([p.epsilon for p in points])
    check_feasible(params, n)
    r = eps - _predicted_error(params.family, params.scale, params.rate, n)
    return float(r @ r)


def initial_guess(points: list[ExperimentPoint], family: Family) -> tuple[float, float]:
    """Scale-aware starting point: rate ~ 1/median(n), scale from the largest error."""
    n = np.array([p.n for p in points])
    eps_max = max(p.epsilon for p in points)
    med = float(np.median(n))
    rate0 = 1.0 / med if med > 0 else 1.0
    if family is Family.EXPONENTIAL:
        return min(eps_max, 1.0), rate0
    return eps_max * (1.0 + rate0 * float(np.min(n))), rate0


# Fixed multiplicative jitters applied to (scale, rate); start 0 is the base guess.
_JITTER = ((1.0, 1.0), (0.5, 1.0), (1.5, 0.5), (0.75, 2.0))


def _levenberg_marquardt(
    family: Family,
    n: np.ndarray,
    eps: np.ndarray,
    theta0: tuple[float, float],
    opts: FitOptions,
) -> tuple[tuple[float, float], float, int, bool]:
    n_smallest = float(np.min(n))
    scale, rate = theta0
    r = eps - _predicted_error(family, scale, rate, n)
    sse = float(r @ r)
    lam = opts.init_damping
    converged = False
    it = 0
    while it < opts.max_iterations:
        it += 1
        jac = -_error_jacobian(family, scale, rate, n)   # d residual / d theta
        grad = 2.0 * jac.T @ r
        if float(np.max(np.abs(grad))) <= opts.gradient_tol:
            converged = True
            break
        a = jac.T @ jac
        diag = np.maximum(np.diag(a), 1e-14)
        accepted = False
        for _ in range(60):
            try:
                step = np.linalg.solve(a + lam * np.diag(diag), -0.5 * grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            cand = (scale + step[0], rate + step[1])
            if not _theta_valid(family, *cand, n_smallest):
                lam *= 10.0
                continue
            r_new = eps - _predicted_error(family, *cand, n)
            sse_new = float(r_new @ r_new)
            if sse_new <= sse:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            break
        improvement = (sse - sse_new) / max(sse, 1e-300)
        (scale, rate), r, sse = cand, r_new, sse_new
        lam = max(lam * 0.3, 1e-14)
        if improvement <= opts.sse_rel_tol:
            break
    # converged keeps its contract: final gradient inf-norm within tolerance
    if not converged:
        jac = -_error_jacobian(family, scale, rate, n)
        converged = float(np.max(np.abs(2.0 * jac.T @ r))) <= opts.gradient_tol
    return (scale, rate), sse, it, converged


def fit(points: list[ExperimentPoint], family: Family, options: FitOptions | None = None) -> FitResult:
    """Least-squares estimate of the utility parameters for one family.

    Returns the best of the multistart runs by sse (ties keep the earliest
    start, so the result is deterministic).  Non-convergence is reported via
    ``converged=False`` with the best parameters found, not an exception.
    """
    opts = options or FitOptions()
    if len({p.n for p in points}) < 2:
        raise DegenerateDataError("need at least 2 points with distinct data sizes")
    pts = sorted(points, key=lambda p: p.n)
    n = np.array([p.n for p in pts])
    eps = np.array([p.epsilon for p in pts])
    n_smallest = float(n[0])

    base_scale, base_rate = initial_guess(pts, family)
    best = None
    for js, jr in _JITTER[: opts.starts]:
        scale0, rate0 = base_scale * js, base_rate * jr
        # pull a jittered start back inside the invariant region
        if family is Family.EXPONENTIAL:
            scale0 = min(max(scale0, 0.0), 1.0)
        else:
            scale0 = min(max(scale0, 0.0), 1.0 + rate0 * n_smallest)
        theta, sse, iters, converged = _levenberg_marquardt(family, n, eps, (scale0, rate0), opts)
        if best is None or sse < best[1]:
            best = (theta, sse, iters, converged)
    (scale, rate), sse, iters, converged = best
    return FitResult(UtilityParams(family, scale, rate), sse, iters, converged)


# --------------------------------------------------------------------------
# synthetic measurements and CSV I/O
# --------------------------------------------------------------------------

def generate_synthetic(
    params: UtilityParams,
    n_values: list[float],
    noise_sigma: float = 0.0,
    seed: int = 0,
) -> list[ExperimentPoint]:
    """Deterministic synthetic measurements: eps = clamp(1 - u(n) + N(0, sigma^2), 0, 1)."""
    if noise_sigma < 0:
        raise ValueError(f"noise_sigma must be >= 0, got {noise_sigma}")
    n = np.sort(np.asarray(n_values, dtype=float))
    if n.size and np.any(np.diff(n) <= 0):
        raise ValueError("n_values must be distinct")
    check_feasible(params, n)
    eps = 1.0 - evaluate(params, n) if n.size else np.array([])
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        eps = eps + rng.normal(0.0, noise_sigma, n.size)
    eps = np.clip(eps, 0.0, 1.0)
    return [ExperimentPoint(float(ni), float(ei)) for ni, ei in zip(n, eps)]


def load_points(path) -> list[ExperimentPoint]:
    """Read measurements from a `n,error` CSV; sorts out-of-order rows with a warning."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != "n,error":
        raise CsvFormatError(1, "expected header exactly 'n,error'")
    points: list[tuple[float, float, int]] = []
    for idx, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != 2:
            raise CsvFormatError(idx, f"expected 2 comma-separated fields, got {len(fields)}")
        try:
            n, eps = float(fields[0]), float(fields[1])
        except ValueError:
            raise CsvFormatError(idx, f"could not parse numbers from {line!r}") from None
        if not math.isfinite(n) or n < 0:
            raise CsvFormatError(idx, f"data size must be finite and >= 0, got {fields[0]}")
        if not math.isfinite(eps) or not 0.0 <= eps <= 1.0:
            raise CsvFormatError(idx, f"error must lie in [0, 1], got {fields[1]}")
        points.append((n, eps, idx))
    seen: dict[float, int] = {}
    for n, _, idx in points:
        if n in seen:
            raise CsvFormatError(idx, f"duplicate data size {n} (first seen on line {seen[n]})")
        seen[n] = idx
    ns = [n for n, _, _ in points]
    if ns != sorted(ns):
        warnings.warn(f"{path}: rows out of order by data size; sorted ascending", stacklevel=2)
        points.sort(key=lambda t: t[0])
    return [ExperimentPoint(n, eps) for n, eps, _ in points]


def save_points(points: list[ExperimentPoint], path) -> None:
    """Write measurements in the `n,error` CSV contract (lossless float repr)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("n,error\n")
        for p in points:
            fh.write(f"{p.n!r},{p.epsilon!r}\n")
