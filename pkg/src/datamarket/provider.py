"""Service-provider profit model and its maximization.

With M potential subscribers whose willingness-to-pay is spread uniformly up
to the ceiling u(n)*W', the provider's profit from charging p_s after buying
n data items at unit price p_b is taken literally as

    F(n, p_s) = p_s * M * (u(n)*W' - p_s) - p_b * n.

For fixed n the inner optimum is p_s = u(n)*W'/2, reducing the joint problem
to the one-dimensional  Fr(n) = M*(u(n)*W')^2/4 - p_b*n,  which the numeric
optimizer solves by grid scan plus golden-section refinement.  The numeric
optimizer is authoritative; the closed-form evaluators exist to be audited
against it (`closed_form_agrees`) because the fraction-family cube-root
candidate set is known to miss the optimum in the three-real-root regime.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np

from .search import BracketError, golden_section_max, maximize_scalar
from .utility import Family, UtilityParams, evaluate, feasible_domain

__all__ = [
    "MarketParams",
    "ProviderDecision",
    "ProviderSolution",
    "CandidateRoot",
    "SolveMethod",
    "WtpDistribution",
    "BracketError",
    "ClosedFormUnavailable",
    "UnboundedDemandError",
    "profit",
    "raw_profit",
    "reduced_profit",
    "default_n_bracket",
    "optimize_numeric",
    "closed_form_exponential",
    "closed_form_fraction",
    "optimize_fixed_n",
    "optimize_fixed_ps",
    "shutoff_price",
]

# saturation threshold used for the default search bracket: u within 1e-6 of 1
_SATURATION_GAP = 1e-6
_BRACKET_CAP = 1e7
_N_TOL = 1e-8            # golden-section tolerance in n
_DEFAULT_GRID = 2001     # coarse-scan resolution (spec floor: 1000)


class ClosedFormUnavailable(Exception):
    """The closed-form root expressions produce no feasible interior candidate."""


class UnboundedDemandError(ValueError):
    """Free data (p_b = 0) makes the fixed-fee demand problem unbounded."""


class WtpDistribution(str, enum.Enum):
    UNIFORM = "uniform"


class SolveMethod(str, enum.Enum):
    CLOSED_FORM = "closed_form"
    NUMERIC = "numeric"
    FIXED_N = "fixed_n"
    FIXED_PS = "fixed_ps"


@dataclass(frozen=True)
class MarketParams:
    """Market constants: user count, WTP ceiling scale, and the data price."""

    users: int
    data_price: float
    max_nominal_wtp: float = 1.0
    wtp_distribution: WtpDistribution = WtpDistribution.UNIFORM

    def __post_init__(self) -> None:
        if not isinstance(self.wtp_distribution, WtpDistribution):
            object.__setattr__(self, "wtp_distribution", WtpDistribution(self.wtp_distribution))
        if int(self.users) != self.users or self.users < 1:
            raise ValueError(f"users must be an integer >= 1, got {self.users!r}")
        if not (math.isfinite(self.max_nominal_wtp) and self.max_nominal_wtp > 0):
            raise ValueError(f"max nominal WTP must be > 0, got {self.max_nominal_wtp!r}")
        if not (math.isfinite(self.data_price) and self.data_price >= 0):
            raise ValueError(f"data price must be >= 0, got {self.data_price!r}")


@dataclass(frozen=True)
class ProviderDecision:
    """A provider strategy: data size n and subscription fee p_s.

    Callers keep p_s within [0, u(n)*W']; the profit formula itself is defined
    (and evaluated literally) outside that band, e.g. for surface sweeps.
    """

    n: float
    p_s: float

    def to_json(self) -> dict:
        return {"n": self.n, "p_s": self.p_s}


@dataclass(frozen=True)
class CandidateRoot:
    n: float
    p_s: float
    profit: float | None     # literal profit; None when n is infeasible
    feasible: bool

    def to_json(self) -> dict:
        return {"n": self.n, "p_s": self.p_s, "profit": self.profit, "feasible": self.feasible}


@dataclass(frozen=True)
class ProviderSolution:
    decision: ProviderDecision
    profit: float
    method: SolveMethod
    closed_form_roots: tuple[CandidateRoot, ...] | None = None
    closed_form_agrees: bool | None = None
    imag_residual: bool = False

    def to_json(self) -> dict:
        out = {
            "decision": self.decision.to_json(),
            "profit": self.profit,
            "method": self.method.value,
        }
        if self.closed_form_roots is not None:
            out["closed_form_roots"] = [c.to_json() for c in self.closed_form_roots]
        if self.closed_form_agrees is not None:
            out["closed_form_agrees"] = self.closed_form_agrees
        if self.imag_residual:
            out["imag_residual"] = True
        return out


# --------------------------------------------------------------------------
# profit
# --------------------------------------------------------------------------

def raw_profit(market: MarketParams, params: UtilityParams, n, p_s):
    """F(n, p_s) evaluated literally; accepts scalars or ndarrays."""
    u = evaluate(params, n)
    return p_s * market.users * (u * market.max_nominal_wtp - p_s) - market.data_price * np.asarray(n, dtype=float) * 1.0


def profit(market: MarketParams, params: UtilityParams, decision: ProviderDecision) -> float:
    """Profit at a decision.  Infeasible n raises DomainError via the utility curve."""
    return float(raw_profit(market, params, decision.n, decision.p_s))


def reduced_profit(market: MarketParams, params: UtilityParams, n):
    """Profit with the fee already at its inner optimum u(n)*W'/2."""
    u = evaluate(params, n)
    w = market.max_nominal_wtp
    return market.users * (u * w) ** 2 / 4.0 - market.data_price * np.asarray(n, dtype=float) * 1.0


def _solution(market, params, n: float, p_s: float, method: SolveMethod, **extra) -> ProviderSolution:
    decision = ProviderDecision(n, p_s)
    return ProviderSolution(decision, profit(market, params, decision), method, **extra)


# --------------------------------------------------------------------------
# numeric optimizer (authoritative)
# --------------------------------------------------------------------------

def default_n_bracket(market: MarketParams, params: UtilityParams) -> tuple[float, float]:
    """[n_min, n at which u reaches 1 - 1e-6], capped at 1e7.

    Beyond saturation the reduced profit strictly decreases whenever p_b > 0,
    so nothing is lost by stopping there.
    """
    n_min = feasible_domain(params)[0]
    if params.scale <= _SATURATION_GAP:
        return (n_min, n_min)
    if params.family is Family.EXPONENTIAL:
        hi = math.log(params.scale / _SATURATION_GAP) / params.rate
    else:
        hi = (params.scale / _SATURATION_GAP - 1.0) / params.rate
    return (n_min, min(max(hi, n_min), _BRACKET_CAP))


def optimize_numeric(
    market: MarketParams,
    params: UtilityParams,
    n_bracket: tuple[float, float] | None = None,
    grid_points: int = _DEFAULT_GRID,
) -> ProviderSolution:
    """Joint maximization of F via the 1-D reduction; grid scan + golden section."""
    lo, hi = n_bracket if n_bracket is not None else default_n_bracket(market, params)
    n_min = feasible_domain(params)[0]
    if hi < lo:
        raise BracketError(f"inverted n bracket [{lo}, {hi}]")
    if lo < n_min - 1e-9 * (1.0 + n_min):
        raise BracketError(f"bracket start {lo} below feasible minimum {n_min}")
    if grid_points < 2:
        raise BracketError(f"grid_points must be >= 2, got {grid_points}")

    n_star, _ = maximize_scalar(
        lambda n: float(reduced_profit(market, params, n)),
        lo,
        hi,
        grid_points,
        _N_TOL,
        f_grid=lambda xs: reduced_profit(market, params, xs),
    )
    p_s = evaluate(params, n_star) * market.max_nominal_wtp / 2.0
    return _solution(market, params, n_star, p_s, SolveMethod.NUMERIC)


# --------------------------------------------------------------------------
# closed forms (validators; unit nominal WTP only)
# --------------------------------------------------------------------------

def _require_unit_wtp(market: MarketParams) -> None:
    if market.max_nominal_wtp != 1.0:
        raise ValueError("closed-form routines are derived for max nominal WTP = 1")


def _candidate(market, params, n: float, p_s: float) -> CandidateRoot:
    n_min = feasible_domain(params)[0]
    slack = 1e-9 * (1.0 + abs(n_min))
    if not math.isfinite(n) or n < n_min - slack:
        return CandidateRoot(n, p_s, None, False)
    n_eff = max(n, n_min)
    value = float(raw_profit(market, params, n_eff, p_s))
    ceiling = evaluate(params, n_eff) * market.max_nominal_wtp
    feasible = -1e-12 <= p_s <= ceiling + 1e-12
    return CandidateRoot(n_eff, p_s, value, feasible)


def _select(candidates: list[CandidateRoot]) -> CandidateRoot:
    feasible = [c for c in candidates if c.feasible]
    if not feasible:
        raise ClosedFormUnavailable("no feasible closed-form candidate; use the numeric optimizer")
    best = feasible[0]
    for c in feasible[1:]:
        if c.profit > best.profit + 1e-12 or (abs(c.profit - best.profit) <= 1e-12 and c.n < best.n):
            best = c
    return best


def closed_form_exponential(market: MarketParams, params: UtilityParams) -> ProviderSolution:
    """Two-root closed form for the exponential family.

    Requires a nonnegative discriminant 1 - 8*p_b/(h*M); both sign choices are
    evaluated and the feasible one with the higher profit wins.
    """
    if params.family is not Family.EXPONENTIAL:
        raise ValueError("closed_form_exponential needs exponential-family params")
    _require_unit_wtp(market)
    m_users, p_b = market.users, market.data_price
    mu, h = params.scale, params.rate
    if p_b <= 0:
        raise ClosedFormUnavailable("closed form needs p_b > 0 (free data has no interior optimum)")
    disc = 1.0 - 8.0 * p_b / (h * m_users)
    if disc < 0:
        raise ClosedFormUnavailable(f"negative discriminant {disc}: no interior optimum")

    inner = h * mu * m_users / (4.0 * p_b)
    spread = h * mu * m_users * math.sqrt(max(0.25 - 2.0 * p_b / (h * m_users), 0.0)) / (2.0 * p_b)
    candidates = []
    for sign in (1.0, -1.0):
        p_s = 0.25 + sign * math.sqrt(disc) / 4.0
        arg = inner + sign * spread
        n = math.log(arg) / h if arg > 0 else -math.inf
        candidates.append(_candidate(market, params, n, p_s))
    best = _select(candidates)
    return _solution(
        market, params, best.n, best.p_s, SolveMethod.CLOSED_FORM,
        closed_form_roots=tuple(candidates),
    )


def _fraction_root_expressions(kappa: float, g: float, m_users: float, p_b: float):
    """Cube-root closed-form candidates for the fraction family, evaluated as-is.

    Returns (n roots, p_s roots, imag_flag).  The intermediates are complex;
    the two non-principal fee roots are collapsed to the real midpoint form
    1/3 - b/2 - 1/(72 b), which loses the +/- component exactly when the
    resolvent turns complex (three real roots).  Imaginary residue beyond
    1e-6 relative on quantities that should come out real sets the flag.
    """
    a12 = p_b * kappa / (8.0 * g * m_users)
    a11 = cmath.sqrt((a12 - 1.0 / 216.0) ** 2 - 1.0 / 46656.0)
    a10 = a11 + a12 - 1.0 / 216.0
    t13 = a10 ** (1.0 / 3.0)
    t23 = a10 ** (2.0 / 3.0)
    t43 = a10 ** (4.0 / 3.0)
    rt3 = math.sqrt(3.0)
    a1 = rt3 * kappa * 1j / 48.0
    a2 = 1.0 / (36.0 * t13) + t13 + 1.0 / 3.0
    a3 = rt3 * g * m_users * t13 * 1j / 216.0
    a4 = rt3 * g * m_users * t43 * 1j
    a5 = g * m_users * t13 / 216.0
    a6 = rt3 * g * m_users * a11 * 1j / 6.0
    a7 = p_b * g * t23
    a8 = g * m_users * t43
    a9 = g * t23
    b1 = (cmath.sqrt((p_b * kappa / (8.0 * g * m_users) - 1.0 / 216.0) ** 2 - 1.0 / 46656.0)
          + p_b * kappa / (8.0 * g * m_users) - 1.0 / 216.0) ** (1.0 / 3.0)

    n1 = m_users * a2 / p_b - 2.0 * m_users * a2**2 / p_b - 1.0 / g
    n2 = ((kappa / 48.0 - t23 + a1) / a9
          + (g * m_users * a11 / 6.0 + a5 + a8 - a3 - a4 + a6) / a7).real
    n3 = (-(t23 - kappa / 48.0 + a1) / a9
          + (g * m_users * a11 / 6.0 + a5 + a8 + a3 + a4 - a6) / a7).real
    ps1 = (6.0 * b1 + 1.0) ** 2 / (36.0 * b1)
    ps23 = 1.0 / 3.0 - b1 / 2.0 - 1.0 / (72.0 * b1)

    def real_of(z: complex, flagged: list[bool]) -> float:
        if abs(z.imag) > 1e-6 * max(1.0, abs(z)):
            flagged[0] = True
        return z.real

    flagged = [False]
    n_roots = (real_of(n1, flagged), n2, n3)           # n2, n3 carry their own real-part extraction
    ps_roots = (real_of(ps1, flagged), real_of(ps23, flagged), real_of(ps23, flagged))
    return n_roots, ps_roots, flagged[0], b1


def closed_form_fraction(
    market: MarketParams,
    params: UtilityParams,
    n_bracket: tuple[float, float] | None = None,
    grid_points: int = _DEFAULT_GRID,
) -> ProviderSolution:
    """Cube-root closed-form candidates for the fraction family, audited numerically.

    All nine (n, p_s) pairs from the three-root sets are evaluated, infeasible
    ones filtered, and the profit argmax returned.  The result is always
    cross-checked against optimize_numeric: `closed_form_agrees` is True only
    when both the profit (1e-4 relative) and the decision (1e-3 relative)
    match.  Disagreement is an expected outcome, not an error.
    """
    if params.family is not Family.FRACTION:
        raise ValueError("closed_form_fraction needs fraction-family params")
    _require_unit_wtp(market)
    if market.data_price <= 0:
        raise ClosedFormUnavailable("closed form needs p_b > 0 (free data has no interior optimum)")
    n_roots, ps_roots, imag_flag, _ = _fraction_root_expressions(
        params.scale, params.rate, market.users, market.data_price
    )
    candidates = [_candidate(market, params, n, ps) for n in n_roots for ps in ps_roots]
    best = _select(candidates)

    numeric = optimize_numeric(market, params, n_bracket, grid_points)
    best_profit = float(raw_profit(market, params, best.n, best.p_s))
    agrees = (
        abs(best_profit - numeric.profit) <= 1e-4 * (1.0 + abs(numeric.profit))
        and abs(best.n - numeric.decision.n) <= 1e-3 * (1.0 + abs(numeric.decision.n))
        and abs(best.p_s - numeric.decision.p_s) <= 1e-3 * (1.0 + abs(numeric.decision.p_s))
    )
    return _solution(
        market, params, best.n, best.p_s, SolveMethod.CLOSED_FORM,
        closed_form_roots=tuple(candidates),
        closed_form_agrees=agrees,
        imag_residual=imag_flag,
    )


# --------------------------------------------------------------------------
# fixed-variable special cases (globally optimal by concavity)
# --------------------------------------------------------------------------

def optimize_fixed_n(market: MarketParams, params: UtilityParams, n: float) -> ProviderSolution:
    """Best fee at a fixed data size: p_s = u(n)*W'/2 (the parabola vertex)."""
    p_s = evaluate(params, n) * market.max_nominal_wtp / 2.0
    return _solution(market, params, n, p_s, SolveMethod.FIXED_N)


def optimize_fixed_ps(market: MarketParams, params: UtilityParams, p_s: float) -> ProviderSolution:
    """Best data size at a fixed fee, from the first-order condition in n.

    fraction:     g*kappa*M*p_s*W' / (g*n+1)^2 = p_b
    exponential:  h*mu*M*p_s*W' * exp(-h*n)    = p_b

    The root is clamped to the domain minimum when it falls below (profit is
    concave in n at fixed p_s, so the corner is then optimal).
    """
    if not 0.0 <= p_s <= market.max_nominal_wtp:
        raise ValueError(f"p_s must lie in [0, {market.max_nominal_wtp}], got {p_s}")
    p_b = market.data_price
    if p_b == 0:
        raise UnboundedDemandError("p_b = 0: profit is nondecreasing in n, no finite optimum")
    n_min = feasible_domain(params)[0]
    gain = params.rate * params.scale * market.users * p_s * market.max_nominal_wtp
    if params.family is Family.EXPONENTIAL:
        n = math.log(gain / p_b) / params.rate if gain > p_b else 0.0
    else:
        ratio = gain / p_b
        n = (math.sqrt(ratio) - 1.0) / params.rate if ratio > 0 else -math.inf
    return _solution(market, params, max(n, n_min), p_s, SolveMethod.FIXED_PS)


# --------------------------------------------------------------------------
# demand shutoff
# --------------------------------------------------------------------------

def shutoff_price(market: MarketParams, params: UtilityParams) -> float:
    """Smallest data price at which the reduced profit is nonincreasing everywhere.

    Equals (M*W'^2/2) * max_n u(n)*u'(n); above it, optimal demand collapses
    to the domain minimum.
    """
    scale, rate = params.scale, params.rate
    if scale == 0:
        return 0.0
    if params.family is Family.EXPONENTIAL:
        v = min(scale, 0.5)               # v = mu*exp(-h*n) decreases from mu
        peak = rate * v * (1.0 - v)
    else:
        x_max = min(1.0, 1.0 / scale)     # x = 1/(1+g*n) decreases from its feasible max
        x = min(x_max, 2.0 / (3.0 * scale))
        peak = scale * rate * x * x * (1.0 - scale * x)
    return market.users * market.max_nominal_wtp**2 * peak / 2.0
