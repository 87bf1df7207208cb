"""Data-utility curves: concave increasing maps from dataset size to model quality.

Two parametric families are supported, both saturating at 1:

    fraction:     u(n) = 1 - kappa / (1 + g*n)
    exponential:  u(n) = 1 - mu * exp(-h*n)

The fraction family is only meaningful where kappa/(1+g*n) <= 1, so for
kappa > 1 the domain starts at n_min = (kappa-1)/g.  Requests below n_min
are a hard error rather than a clamp: a silently clamped utility would
corrupt optimizer gradients downstream.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Family",
    "UtilityParams",
    "ParameterError",
    "DomainError",
    "evaluate",
    "deriv1",
    "deriv2",
    "feasible_domain",
    "check_feasible",
]

# Relative slack absorbing float dust at the domain boundary.
_FEAS_SLACK = 1e-9


class ParameterError(ValueError):
    """Utility-curve parameters violate their invariants."""


class DomainError(ValueError):
    """Requested data size lies outside the curve's feasible domain."""


class Family(str, enum.Enum):
    FRACTION = "fraction"
    EXPONENTIAL = "exponential"


@dataclass(frozen=True)
class UtilityParams:
    """Parameters of one utility family.

    ``scale`` is kappa (fraction) or mu (exponential); ``rate`` is g or h.
    Invariants: scale >= 0, rate > 0, and mu <= 1 for the exponential family.
    """

    family: Family
    scale: float
    rate: float

    def __post_init__(self) -> None:
        if not isinstance(self.family, Family):
            object.__setattr__(self, "family", Family(self.family))
        for name in ("scale", "rate"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ParameterError(f"{name} must be finite, got {v!r}")
        if self.scale < 0:
            raise ParameterError(f"scale must be >= 0, got {self.scale}")
        if self.rate <= 0:
            raise ParameterError(f"rate must be > 0, got {self.rate}")
        if self.family is Family.EXPONENTIAL and self.scale > 1:
            raise ParameterError(f"mu must lie in [0, 1], got {self.scale}")

    @classmethod
    def fraction(cls, kappa: float, g: float) -> "UtilityParams":
        return cls(Family.FRACTION, kappa, g)

    @classmethod
    def exponential(cls, mu: float, h: float) -> "UtilityParams":
        return cls(Family.EXPONENTIAL, mu, h)

    # Named aliases so formulas read like the math they implement.
    @property
    def kappa(self) -> float:
        self._require(Family.FRACTION, "kappa")
        return self.scale

    @property
    def g(self) -> float:
        self._require(Family.FRACTION, "g")
        return self.rate

    @property
    def mu(self) -> float:
        self._require(Family.EXPONENTIAL, "mu")
        return self.scale

    @property
    def h(self) -> float:
        self._require(Family.EXPONENTIAL, "h")
        return self.rate

    def _require(self, family: Family, name: str) -> None:
        if self.family is not family:
            raise AttributeError(f"{name} is not defined for the {self.family.value} family")

    def to_json(self) -> dict:
        if self.family is Family.FRACTION:
            return {"family": "fraction", "kappa": self.scale, "g": self.rate}
        return {"family": "exponential", "mu": self.scale, "h": self.rate}

    @classmethod
    def from_json(cls, obj: dict) -> "UtilityParams":
        try:
            family = Family(obj["family"])
        except (KeyError, ValueError) as exc:
            raise ParameterError(f"bad utility-params object: {exc}") from exc
        keys = ("kappa", "g") if family is Family.FRACTION else ("mu", "h")
        try:
            scale, rate = (float(obj[k]) for k in keys)
        except KeyError as exc:
            raise ParameterError(f"missing field {exc} for family {family.value!r}") from exc
        return cls(family, scale, rate)


def feasible_domain(params: UtilityParams) -> tuple[float, float]:
    """Return [n_min, inf), the data sizes on which the curve is defined."""
    if params.family is Family.FRACTION:
        return (max(0.0, (params.scale - 1.0) / params.rate), math.inf)
    return (0.0, math.inf)


def check_feasible(params: UtilityParams, n) -> None:
    """Raise DomainError unless every entry of n is a feasible data size."""
    arr = np.asarray(n, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("data size must be finite")
    n_min = feasible_domain(params)[0]
    bound = n_min - _FEAS_SLACK * (1.0 + n_min)
    if np.any(arr < bound):
        worst = float(np.min(arr))
        raise DomainError(
            f"data size {worst} below feasible minimum {n_min} "
            f"for {params.family.value} params {params.scale}, {params.rate}"
        )


def _dispatch(params: UtilityParams, n, fraction_fn, exponential_fn):
    arr = np.asarray(n, dtype=float)
    check_feasible(params, arr)
    if params.family is Family.FRACTION:
        out = fraction_fn(params.scale, params.rate, arr)
    else:
        out = exponential_fn(params.scale, params.rate, arr)
    return out if arr.ndim else float(out)


def evaluate(params: UtilityParams, n):
    """Utility u(n) in [0, 1].  Accepts a scalar or an ndarray of sizes."""
    return _dispatch(
        params,
        n,
        lambda k, g, x: 1.0 - k / (1.0 + g * x),
        lambda m, h, x: 1.0 - m * np.exp(-h * x),
    )


def deriv1(params: UtilityParams, n):
    """First derivative u'(n); strictly positive whenever scale > 0."""
    return _dispatch(
        params,
        n,
        lambda k, g, x: k * g / (1.0 + g * x) ** 2,
        lambda m, h, x: m * h * np.exp(-h * x),
    )


def deriv2(params: UtilityParams, n):
    """Second derivative u''(n); nonpositive everywhere (diminishing returns)."""
    return _dispatch(
        params,
        n,
        lambda k, g, x: -2.0 * k * g**2 / (1.0 + g * x) ** 3,
        lambda m, h, x: -m * h**2 * np.exp(-h * x),
    )
