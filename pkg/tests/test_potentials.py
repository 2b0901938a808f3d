import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from fracgrow.errors import ConfigError
from fracgrow.potentials import (
    LOG_EDGE,
    Potential,
    Proliferation,
    YosidaLevel,
    cubic_growth_constant,
    evaluate,
    fit_growth_bound,
    fit_quadratic_lower_bound,
    fit_yosida_lower_bound,
    proliferation_eval,
    resolvent_J,
    yosida_f1,
    yosida_F1,
    yosida_F1_quadrature,
)
from fracgrow.verification import prox_oracle

KINDS = ["regular", "logarithmic", "double_obstacle", "quadratic_test"]
MODEL_KINDS = ["regular", "logarithmic", "double_obstacle"]
LAMS = [1e-3, 1e-2, 1e-1]


def domain_samples(pot, n=200):
    lo, hi = pot.domain
    if math.isfinite(lo):
        return np.linspace(lo, hi, n + 2)[1:-1]
    return np.linspace(-3.0, 3.0, n)


def test_regular_values():
    p = Potential("regular")
    assert p.F(1.0) == pytest.approx(0.0, abs=1e-15)
    assert p.F(0.0) == pytest.approx(0.25)


@pytest.mark.parametrize("c1", [1.5, 2.0, 3.0])
def test_logarithmic_value_at_one(c1):
    assert Potential("logarithmic", c1=c1).F(1.0) == pytest.approx(2 * math.log(2) - c1, rel=1e-14)


def test_obstacle_values():
    p = Potential("double_obstacle")
    v = evaluate(p, 0.5)
    assert v.F1 == 0.0 and v.f1_min == 0.0
    assert p.F1(1.5) == math.inf
    assert evaluate(p, 1.5).f1_min is None
    assert evaluate(p, 1.0).f1_min == 0.0


@pytest.mark.parametrize("kind, kwargs", [("logarithmic", {"c1": 1.0}), ("logarithmic", {"c1": 0.5}),
                                          ("double_obstacle", {"c2": 0.0}), ("cubic", {})])
def test_potential_constraints(kind, kwargs):
    with pytest.raises(ConfigError):
        Potential(kind, **kwargs)


@pytest.mark.parametrize("kind, L, gamma", [("regular", 2.0, 1.0), ("logarithmic", 4.0, 2.0),
                                            ("double_obstacle", 2.0, 0.0), ("quadratic_test", 0.0, 1.0)])
def test_metadata(kind, L, gamma):
    p = Potential(kind)
    assert p.lipschitz == L
    assert p.gamma == gamma
    assert p.yosida_cap == (math.inf if L == 0 else 1 / L)


@pytest.mark.parametrize("kind", KINDS)
def test_F1_convex_nonnegative_zero_at_origin(kind):
    p = Potential(kind)
    s = domain_samples(p)
    v = p.F1(s)
    assert p.F1(0.0) == 0.0
    assert np.all(v >= 0)
    assert np.all(v[:-2] + v[2:] - 2 * v[1:-1] >= -1e-12)


@pytest.mark.parametrize("kind", KINDS)
def test_f2_lipschitz(kind):
    p = Potential(kind)
    s = np.linspace(-3, 3, 401)
    slopes = np.abs(np.diff(p.f2(s)) / np.diff(s))
    assert slopes.max() <= p.lipschitz + 1e-12


@pytest.mark.parametrize("kind", KINDS)
def test_quadratic_lower_bound_fit(kind):
    p = Potential(kind)
    s = np.linspace(-10, 10, 2001)
    c1, c2 = fit_quadratic_lower_bound(p.F, s)
    assert c1 > 0
    with np.errstate(invalid="ignore"):
        assert np.all(p.F(s) >= c1 * s**2 - c2)


def test_level_validation():
    p = Potential("regular")
    assert YosidaLevel.for_potential(p, 0.1).cap == 0.5
    for lam in (0.0, -1.0, 0.5, 1.0):
        with pytest.raises(ConfigError):
            YosidaLevel.for_potential(p, lam)


@pytest.mark.parametrize("kind, lam, s, expected", [("double_obstacle", 1.0, 2.0, 1.0),
                                                    ("quadratic_test", 0.5, 3.0, 2.0)])
def test_resolvent_closed_forms(kind, lam, s, expected):
    assert Potential(kind).resolvent(lam, s) == pytest.approx(expected, rel=1e-15)


def test_regular_resolvent_matches_bisection():
    y_ref = brentq(lambda y: y + 0.5 * (y**3 + y) - 1.0, -2, 2, xtol=1e-15)
    assert Potential("regular").resolvent(0.5, 1.0) == pytest.approx(y_ref, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(s=st.floats(-50, 50), lam=st.sampled_from(LAMS), c1=st.floats(1.1, 3.0))
def test_log_resolvent_solves_equation(s, lam, c1):
    p = Potential("logarithmic", c1=c1)
    y = p.resolvent(lam, s)
    assert -1 < y < 1
    g = y + lam * math.log((1 + y) / (1 - y))
    if abs(y) == LOG_EDGE:
        # true root is closer to the boundary than any representable float inside the bracket
        assert abs(g) <= abs(s)
    else:
        slope = 1 + 2 * lam / (1 - y * y)
        assert abs(g - s) <= 1e-10 * max(1.0, abs(s)) + 4 * np.finfo(float).eps * slope


def test_functional_interface():
    p = Potential("double_obstacle")
    lev = YosidaLevel(0.4, p.yosida_cap)
    assert resolvent_J(p, lev, 2.0) == 1.0
    assert yosida_f1(p, lev, 2.0) == pytest.approx(2.5)
    assert yosida_F1(p, lev, 2.0) == pytest.approx(1.25)


def test_obstacle_yosida_example():
    p = Potential("double_obstacle")
    assert p.yosida_f1(0.5, 2.0) == pytest.approx(2.0)
    assert p.yosida_F1(0.5, 2.0) == pytest.approx(1.0)
    y, v = prox_oracle(p, 0.5, np.array([2.0]))
    assert v[0] == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("lam", LAMS)
def test_yosida_at_origin(kind, lam):
    p = Potential(kind)
    assert p.yosida_f1(lam, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert p.yosida_F1(lam, 0.0) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("kind", MODEL_KINDS)
@pytest.mark.parametrize("lam", LAMS)
def test_inequality_chain(kind, lam):
    p = Potential(kind)
    s = domain_samples(p)
    a, b, c = p.F1(p.resolvent(lam, s)), p.yosida_F1(lam, s), p.F1(s)
    assert np.all(a >= -1e-9)
    assert np.all(b - a >= -1e-9)
    assert np.all(c - b >= -1e-9)


@pytest.mark.parametrize("kind", MODEL_KINDS)
@pytest.mark.parametrize("lam", LAMS)
def test_yosida_monotone_and_lipschitz(kind, lam):
    p = Potential(kind)
    s = np.linspace(-3, 3, 200)
    f = p.yosida_f1(lam, s)
    assert np.all(np.diff(f) >= -1e-12)
    assert np.all(np.abs(np.diff(f)) <= np.diff(s) / lam * (1 + 1e-9))


@pytest.mark.parametrize("kind", ["regular", "logarithmic", "quadratic_test"])
@pytest.mark.parametrize("lam", LAMS)
def test_selection_single_valued(kind, lam):
    p = Potential(kind)
    s = np.linspace(-3, 3, 200)
    J = p.resolvent(lam, s)
    keep = np.abs(J) < LOG_EDGE
    s, J = s[keep], J[keep]
    # f1 at a rounded J is ill conditioned near the edge of the log domain
    tol = 1e-9 + 8 * np.finfo(float).eps / (1 - J**2)
    assert np.all(np.abs(p.yosida_f1(lam, s) - p.f1(J)) <= tol)


@pytest.mark.parametrize("lam", LAMS)
def test_selection_obstacle_normal_cone(lam):
    p = Potential("double_obstacle")
    s = np.linspace(-3, 3, 200)
    f, J = p.yosida_f1(lam, s), p.resolvent(lam, s)
    interior = np.abs(J) < 1
    assert np.all(f[interior] == 0)
    assert np.all(f[J == 1] >= 0) and np.all(f[J == -1] <= 0)


@pytest.mark.parametrize("kind", MODEL_KINDS)
@pytest.mark.parametrize("lam", LAMS)
def test_envelope_matches_prox_oracle(kind, lam):
    p = Potential(kind)
    s = np.linspace(-3, 3, 200)
    y_ref, v_ref = prox_oracle(p, lam, s)
    v = p.yosida_F1(lam, s)
    assert np.max(np.abs(v - v_ref) / (1 + np.abs(v_ref))) <= 1e-8
    # the oracle is a minimizer; its argmin is only resolved to sqrt(value) accuracy
    J = p.resolvent(lam, s)
    assert np.max(np.abs(J - y_ref)) <= 1e-4


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("s", [-2.5, -0.7, 0.3, 1.0, 2.0])
def test_envelope_matches_quadrature_of_f1_lam(kind, s):
    p = Potential(kind)
    lev = YosidaLevel.for_potential(p, 1e-2)
    assert p.yosida_F1(lev.lam, s) == pytest.approx(yosida_F1_quadrature(p, lev, s), rel=1e-9, abs=1e-11)


def test_quadratic_test_closed_forms():
    p = Potential("quadratic_test")
    s = np.linspace(-3, 3, 11)
    np.testing.assert_allclose(p.yosida_f1(0.1, s), s / 1.1, rtol=1e-14)
    np.testing.assert_allclose(p.yosida_F1(0.1, s), s**2 / 2.2, rtol=1e-13)


@pytest.mark.parametrize("kind", KINDS)
def test_yosida_lower_bound_fit(kind):
    p = Potential(kind)
    s = np.linspace(-10, 10, 2001)
    lams = [lam for lam in (1e-3, 1e-2, 1e-1, 0.2) if lam < p.yosida_cap]
    c1, c2 = fit_yosida_lower_bound(p, lams, s)
    assert c1 > 0
    for lam in lams:
        assert np.all(p.yosida_F(lam, s) >= c1 * s**2 - c2)


def test_growth_bound():
    p = Potential("regular")
    s = np.linspace(-10, 10, 2001)
    c3, c4 = fit_growth_bound(p, LAMS, s)
    for lam in LAMS:
        assert np.all(np.abs(p.yosida_f1(lam, s)) <= c3 * p.yosida_F1(lam, s) + c4 + 1e-12)
    assert fit_growth_bound(Potential("logarithmic"), LAMS, s) is None
    assert fit_growth_bound(Potential("double_obstacle"), LAMS, s) is None


def test_strong_monotonicity_and_cubic_growth_regular():
    p = Potential("regular")
    s = np.linspace(-5, 5, 301)
    a, b = np.meshgrid(s, s)
    mask = a != b
    q = (p.f1(a) - p.f1(b)) * (a - b)
    assert np.all(q[mask] >= (a - b)[mask] ** 2 * (1 - 1e-12))
    c5 = cubic_growth_constant(p, s)
    assert np.all(np.abs(p.f1(s)) <= c5 * (np.abs(s) ** 3 + 1) * (1 + 1e-12))
    assert cubic_growth_constant(Potential("double_obstacle"), s) is None


@pytest.mark.parametrize(
    "p, s, expected",
    [(Proliferation("constant", 0.5), 3.7, 0.5), (Proliferation("constant", 0.0), -1.0, 0.0),
     (Proliferation("smooth_bump", 1.0, 1.0), 0.0, 1.0)],
)
def test_proliferation_values(p, s, expected):
    assert proliferation_eval(p, s) == expected


def test_proliferation_bounds_and_lipschitz():
    p = Proliferation("smooth_bump", 0.8, 0.5)
    s = np.linspace(-4, 4, 2001)
    v = p(s)
    assert np.all((v >= 0) & (v <= p.bound))
    assert np.max(np.abs(np.diff(v) / np.diff(s))) <= p.lipschitz * (1 + 1e-9)
    assert Proliferation(p0=0.0).is_zero
    with pytest.raises(ConfigError):
        Proliferation(p0=-1.0)
