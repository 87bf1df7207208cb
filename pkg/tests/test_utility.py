import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from datamarket.utility import (
    DomainError,
    Family,
    ParameterError,
    UtilityParams,
    deriv1,
    deriv2,
    evaluate,
    feasible_domain,
)

FRACTION = UtilityParams.fraction(kappa=1.109, g=0.271)
EXPONENTIAL = UtilityParams.exponential(mu=0.457, h=0.039)


class TestEvaluate:
    def test_fraction_worked_value(self):
        # 1 - 1.109/(1 + 0.271*10), checked by hand
        assert evaluate(FRACTION, 10.0) == pytest.approx(0.701078167115903, rel=1e-12)

    def test_exponential_worked_value(self):
        assert evaluate(EXPONENTIAL, 50.0) == pytest.approx(0.9349807492849633, rel=1e-12)

    def test_zero_scale_is_constant_one(self):
        p = UtilityParams.exponential(0.0, 0.7)
        for n in (0.0, 3.0, 1e6):
            assert evaluate(p, n) == 1.0

    def test_fraction_boundary_is_zero(self):
        assert evaluate(UtilityParams.fraction(1.0, 0.1), 0.0) == 0.0

    def test_array_matches_scalars(self):
        ns = np.array([1.0, 10.0, 100.0])
        out = evaluate(EXPONENTIAL, ns)
        assert out.shape == (3,)
        for n, u in zip(ns, out):
            assert evaluate(EXPONENTIAL, float(n)) == u

    def test_infeasible_size_is_hard_error(self):
        with pytest.raises(DomainError):
            evaluate(FRACTION, 0.0)          # below (kappa-1)/g = 0.4022
        with pytest.raises(DomainError):
            evaluate(EXPONENTIAL, -1.0)

    def test_boundary_size_is_feasible(self):
        n_min = feasible_domain(FRACTION)[0]
        assert evaluate(FRACTION, n_min) == pytest.approx(0.0, abs=1e-12)


class TestDerivatives:
    def test_exponential_deriv1_at_zero(self):
        assert deriv1(EXPONENTIAL, 0.0) == pytest.approx(0.457 * 0.039, rel=1e-12)

    def test_fraction_deriv1_worked(self):
        assert deriv1(FRACTION, 10.0) == pytest.approx(0.02183499102738283, rel=1e-12)

    def test_zero_scale_derivatives_vanish(self):
        p = UtilityParams.fraction(0.0, 0.3)
        assert deriv1(p, 5.0) == 0.0
        assert deriv2(p, 5.0) == 0.0

    def test_exponential_deriv2_at_zero(self):
        assert deriv2(EXPONENTIAL, 0.0) == pytest.approx(-0.457 * 0.039**2, rel=1e-12)

    def test_fraction_deriv2_worked(self):
        assert deriv2(FRACTION, 10.0) == pytest.approx(-0.0031899097403885433, rel=1e-12)


class TestFeasibleDomain:
    def test_fraction_above_one(self):
        lo, hi = feasible_domain(FRACTION)
        assert lo == pytest.approx(0.109 / 0.271, rel=1e-12)
        assert hi == math.inf

    def test_fraction_below_one(self):
        assert feasible_domain(UtilityParams.fraction(0.5, 0.1))[0] == 0.0

    def test_exponential(self):
        assert feasible_domain(EXPONENTIAL)[0] == 0.0


class TestParamValidation:
    @pytest.mark.parametrize(
        "ctor,args",
        [
            (UtilityParams.fraction, (-0.1, 0.2)),
            (UtilityParams.fraction, (1.0, 0.0)),
            (UtilityParams.fraction, (1.0, -0.5)),
            (UtilityParams.exponential, (1.2, 0.1)),
            (UtilityParams.exponential, (-0.2, 0.1)),
            (UtilityParams.exponential, (0.5, 0.0)),
            (UtilityParams.exponential, (math.nan, 0.1)),
        ],
    )
    def test_invalid_params_rejected(self, ctor, args):
        with pytest.raises(ParameterError):
            ctor(*args)

    def test_alias_properties_guard_family(self):
        assert FRACTION.kappa == 1.109
        assert EXPONENTIAL.h == 0.039
        with pytest.raises(AttributeError):
            FRACTION.mu
        with pytest.raises(AttributeError):
            EXPONENTIAL.g


class TestJson:
    def test_round_trip_both_families(self):
        for p in (FRACTION, EXPONENTIAL):
            assert UtilityParams.from_json(json.loads(json.dumps(p.to_json()))) == p

    def test_expected_keys(self):
        assert FRACTION.to_json() == {"family": "fraction", "kappa": 1.109, "g": 0.271}
        assert EXPONENTIAL.to_json() == {"family": "exponential", "mu": 0.457, "h": 0.039}

    def test_bad_objects_rejected(self):
        with pytest.raises(ParameterError):
            UtilityParams.from_json({"family": "power", "a": 1})
        with pytest.raises(ParameterError):
            UtilityParams.from_json({"family": "fraction", "kappa": 1.0})


def _grid(params, count=1000):
    n_min = feasible_domain(params)[0]
    return np.linspace(n_min, n_min + 500.0, count)


@pytest.mark.parametrize("params", [FRACTION, EXPONENTIAL], ids=["fraction", "exponential"])
class TestCurveShapeInvariants:
    def test_increasing_and_concave(self, params):
        ns = _grid(params)
        assert np.all(deriv1(params, ns) > 0)
        assert np.all(deriv2(params, ns) <= 0)
        u = evaluate(params, ns)
        assert np.all(np.diff(u) > 0)
        assert np.all((u >= 0) & (u <= 1))

    def test_derivatives_match_finite_differences(self, params):
        n_min = feasible_domain(params)[0]
        ns = np.linspace(n_min + 0.5, n_min + 300.0, 120)
        step = 1e-4 * (1.0 + ns)
        fd1 = (evaluate(params, ns + step) - evaluate(params, ns - step)) / (2 * step)
        fd2 = (evaluate(params, ns + step) - 2 * evaluate(params, ns) + evaluate(params, ns - step)) / step**2
        assert np.max(np.abs(fd1 / deriv1(params, ns) - 1.0)) <= 1e-6
        assert np.max(np.abs(fd2 / deriv2(params, ns) - 1.0)) <= 1e-4

    def test_saturates_at_one(self, params):
        assert evaluate(params, 1e9) > 1.0 - 1e-3


@settings(max_examples=60, deadline=None)
@given(
    family=st.sampled_from([Family.FRACTION, Family.EXPONENTIAL]),
    scale=st.floats(0.01, 1.0),
    rate=st.floats(1e-3, 2.0),
    base=st.floats(0.0, 100.0),
    gap=st.floats(0.01, 100.0),
)
def test_monotone_property(family, scale, rate, base, gap):
    params = UtilityParams(family, scale, rate)
    n0 = feasible_domain(params)[0] + base
    u0, u1 = evaluate(params, n0), evaluate(params, n0 + gap)
    assert u1 > u0
    assert 0.0 <= u0 <= 1.0 and u1 <= 1.0
