import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from laplace_gate.core import (
    DomainError,
    TailBound,
    TimeSignal,
    TransformFunction,
    catalog,
    gamma,
    get_pair,
    principal_power,
)
from laplace_gate.forward import forward_transform


def test_principal_power_examples():
    assert principal_power(1, -0.25) == pytest.approx(1.0, abs=1e-15)
    assert principal_power(1j, 0.25) == pytest.approx(cmath.exp(1j * math.pi / 8), abs=1e-15)
    assert principal_power(1j, 0.25) == pytest.approx(0.923880 + 0.382683j, abs=1e-6)
    assert principal_power(4, 0.5) == pytest.approx(2.0, abs=1e-15)


def test_principal_power_branch_cut_uses_plus_pi():
    # -1 with a signed-zero imaginary part still has arg = +pi
    z = complex(-1.0, -0.0)
    assert principal_power(z, 0.5) == pytest.approx(1j, abs=1e-15)


def test_principal_power_zero_is_branch_point():
    with pytest.raises(DomainError, match="branch point"):
        principal_power(0, 0.5)
    with pytest.raises(DomainError):
        principal_power(np.array([1.0, 0.0]), -0.25)


def test_principal_power_argument_bound_on_right_half_plane():
    rng = np.random.default_rng(3)
    p = rng.uniform(0, 10, 500) + 1j * rng.uniform(-1e3, 1e3, 500)
    for alpha in (-1.9, -0.25, 0.5, 1.5):
        arg = np.angle(principal_power(p, alpha))
        assert np.all(np.abs(arg) <= abs(alpha) * math.pi / 2 + 1e-12)


def test_power_law_random_points():
    rng = np.random.default_rng(2024)
    p = rng.uniform(0, 10, 100) + 1j * rng.uniform(-10, 10, 100)
    a = rng.uniform(-1.9, 1.9, 100)
    b = rng.uniform(-1.9, 1.9, 100)
    for pk, ak, bk in zip(p, a, b):
        lhs = principal_power(pk, ak) * principal_power(pk, bk)
        assert abs(lhs - principal_power(pk, ak + bk)) <= 1e-12 * (1 + abs(pk)) ** (abs(ak) + abs(bk))


EPS = np.finfo(float).eps


@settings(max_examples=300, deadline=None)
@given(
    re=st.floats(1e-3, 50),
    im=st.floats(-50, 50),
    a=st.floats(-1.9, 1.9),
    b=st.floats(-1.9, 1.9),
)
def test_power_law(re, im, a, b):
    # near p = 0 the values reach ~1e11, where a few ulps exceed any fixed
    # absolute bound, so a relative rounding floor is added
    p = complex(re, im)
    rhs = principal_power(p, a + b)
    lhs = principal_power(p, a) * principal_power(p, b)
    assert abs(lhs - rhs) <= 1e-12 * (1 + abs(p)) ** (abs(a) + abs(b)) + 16 * EPS * abs(rhs)


def test_gamma_examples():
    assert gamma(1) == 1.0
    assert gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-15)
    # recurrence applied twice to gamma(1/2)
    assert gamma(2.5) == pytest.approx(1.5 * 0.5 * math.sqrt(math.pi), rel=1e-15)
    assert gamma(2.5) == pytest.approx(1.3293403882, rel=1e-10)


@pytest.mark.parametrize("x", [0, -1, -2, -7])
def test_gamma_poles(x):
    with pytest.raises(DomainError):
        gamma(x)


def test_gamma_accuracy_against_mpmath():
    mpmath.mp.dps = 40
    for x in np.linspace(0.05, 30, 301):
        ref = float(mpmath.gamma(mpmath.mpf(float(x))))
        assert abs(gamma(x) - ref) <= 1e-12 * abs(ref)


def test_gamma_recurrence():
    for x in np.linspace(0.1, 10, 100):
        assert abs(gamma(x + 1) - x * gamma(x)) <= 1e-10 * gamma(x + 1)


def test_catalog_contract():
    pairs = catalog()
    names = {p.name for p in pairs}
    assert {"t_exp", "t2_exp", "t_exp_cos", "exp", "pole"} <= names
    assert sum(not p.admissible for p in pairs) >= 2
    for p in pairs:
        if p.admissible:
            assert p.b_true > 1
            assert abs(p.f_closed(0.0)) == 0.0


def test_catalog_lookups():
    assert get_pair("t_exp").F_closed(1.0) == pytest.approx(0.25, abs=1e-15)
    assert get_pair("exp").b_true == 1.0
    with pytest.raises(KeyError):
        get_pair("nope")


def test_catalog_sup_values_by_brute_force():
    t = np.linspace(0, 40, 400001)
    for p in catalog():
        if p.admissible:
            assert np.abs(p.f_closed(t)).max() == pytest.approx(p.sup_true, rel=1e-8)


def test_catalog_tail_bounds_hold():
    t = np.linspace(0, 60, 6001)
    for p in catalog():
        if p.tail_bound is not None:
            assert np.all(np.abs(p.f_closed(t)) <= p.tail_bound.envelope(t) * (1 + 1e-12))


def test_catalog_self_consistency():
    rng = np.random.default_rng(11)
    pts = rng.uniform(0.5, 3, 10) + 1j * rng.uniform(-3, 3, 10)
    for p in catalog():
        if not p.admissible:
            continue
        got = forward_transform(p.f_closed, pts, tol=1e-9, tail_bound=p.tail_bound)
        assert np.max(np.abs(got - p.F_closed(pts))) <= 1e-6


def test_transform_function_vectorizes_constants():
    one = TransformFunction(lambda p: 1)
    assert one(2 + 3j) == 1
    assert one(np.array([1, 2, 3])).shape == (3,)


def test_decay_hint_validation():
    with pytest.raises(ValueError):
        TransformFunction(lambda p: p, decay_hint=(1.0, -1.0))


def test_time_signal_validation():
    with pytest.raises(ValueError):
        TimeSignal([0, 1, 1], [0, 0, 0])
    with pytest.raises(ValueError):
        TimeSignal([0, 1], [0, np.nan])
    s = TimeSignal([0, 1, 2], [0, -3, 1], sup_estimate=1.0)
    assert s.sup_estimate >= 3.0
    assert s(0.5) == pytest.approx(-1.5)


@pytest.mark.parametrize(
    "tail,s",
    [
        (TailBound.exponential(2.0, 0.5), 0.0),
        (TailBound.exponential(1.0, 0.1), 1.0),
        (TailBound.power(1.0, 2.5), 0.0),
        (TailBound.power(1.0, 0.0), 0.5),
        (TailBound.power(3.0, 1.5), 0.2),
    ],
)
def test_tail_integral_bounds_quadrature(tail, s):
    for T in (0.3, 2.0, 10.0):
        exact, _ = integrate.quad(lambda t: float(tail.envelope(t)) * math.exp(-s * t), T, np.inf, limit=400)
        assert tail.tail_integral(T, s) >= exact * (1 - 1e-8)
    budget = 1e-6
    T = tail.horizon(s, budget)
    assert tail.tail_integral(T, s) <= budget


def test_tail_without_decay_is_not_convergent():
    tail = TailBound.power(1.0, 0.5)
    assert not tail.converges_at(0.0)
    with pytest.raises(DomainError):
        tail.horizon(0.0, 1e-3)
