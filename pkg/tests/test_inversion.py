import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from laplace_gate.admissibility import ProbeSettings, assess
from laplace_gate.core import TransformFunction, catalog, get_pair
from laplace_gate.inversion import (
    InversionSettings,
    NotAdmissibleError,
    TruncationError,
    invert,
    loglog_slope,
    partial_sums_IN,
    truncation_bound,
    verify_conclusions,
)

TOL = 1e-4
T_EXP = get_pair("t_exp")
T_EXP_REPORT = assess(T_EXP.F_closed)


def test_truncation_bound_examples():
    H, achieved = truncation_bound(1.0, 2.0, 1e-4)
    assert H == pytest.approx(1 / (math.pi * 1e-4), rel=1e-12)
    assert H == pytest.approx(3183.1, abs=0.05)
    assert achieved == pytest.approx(1e-4, rel=1e-12)
    H2, _ = truncation_bound(1.0, 2.0, 5e-5)
    assert H2 == pytest.approx(2 * H, rel=1e-12)


def test_truncation_bound_cap():
    H, achieved = truncation_bound(1.0, 1.25, 1e-3, H_max=1e6)
    assert H == 1e6
    assert achieved > 1e-3
    assert achieved == pytest.approx(4 / math.pi * 1e6 ** -0.25, rel=1e-12)


def test_truncation_bound_errors():
    with pytest.raises(TruncationError, match="not summable"):
        truncation_bound(1.0, 1.0, 1e-3)
    with pytest.raises(TruncationError):
        truncation_bound(0.0, 2.0, 1e-3)


def test_invert_examples():
    sig = invert(T_EXP.F_closed, [-2.0, 0.0, 1.0], report=T_EXP_REPORT)
    assert sig.values[2] == pytest.approx(math.exp(-1), abs=1e-4)
    assert abs(sig.values[1]) <= TOL
    assert abs(sig.values[0]) <= TOL
    assert not sig.info["low_confidence"]
    assert np.all(sig.err_bound <= TOL * 1.01)


def test_invert_refuses_inadmissible():
    with pytest.raises(NotAdmissibleError) as exc:
        invert(get_pair("exp").F_closed, [0.0, 1.0])
    assert exc.value.report.verdict == "inadmissible"


def test_settings_validation():
    with pytest.raises(ValueError):
        InversionSettings(points_per_period=4)
    with pytest.raises(ValueError):
        InversionSettings(contour_abscissa=0.5)
    with pytest.raises(ValueError):
        InversionSettings(tol=0)


def test_IN_examples():
    table = partial_sums_IN(T_EXP.F_closed, [10.0, 1e2, 1e3, 1e4])
    for N, v in table:
        assert v.real == pytest.approx(N / (math.pi * (1 + N * N)), rel=1e-8)
        assert abs(v.imag) < 1e-12
    assert table[0][1].real == pytest.approx(0.031515, abs=1e-6)
    slope = loglog_slope([n for n, _ in table[1:]], [v for _, v in table[1:]])
    assert slope == pytest.approx(-1.0, abs=0.15)


def test_IN_step_function():
    for N, v in partial_sums_IN(get_pair("exp").F_closed, [1e2, 1e3, 1e4]):
        assert v.real == pytest.approx(math.atan(N) / math.pi, rel=1e-8)


def test_verify_examples():
    sig = invert(T_EXP.F_closed, np.arange(0, 10.0001, 0.05), report=T_EXP_REPORT)
    ver = verify_conclusions(T_EXP.F_closed, sig)
    assert abs(ver.sup_estimate - math.exp(-1)) <= 1e-3
    assert ver.f0_ok and ver.causal_ok and ver.all_ok
    assert ver.I_N_slope == pytest.approx(-1.0, abs=0.15)


def test_verify_zero_function():
    zero = TransformFunction(lambda p: 0 * p)
    small = InversionSettings(H_max=100.0)
    sig = invert(zero, [0.0, 1.0], small, force=True)
    assert np.all(sig.values == 0)
    ver = verify_conclusions(zero, sig, settings=small)
    assert ver.f0 == 0 and ver.negative_max == 0
    assert ver.f0_ok and ver.causal_ok


def test_verify_step_function_fails_at_origin():
    F = get_pair("exp").F_closed
    small = InversionSettings(H_max=1e3)
    sig = invert(F, [0.0, 1.0], small, force=True)
    assert sig.info["forced"] and sig.info["low_confidence"]
    ver = verify_conclusions(F, sig, settings=small, N_list=(10.0, 100.0, 1000.0))
    assert ver.f0 == pytest.approx(0.5, abs=1e-3)
    assert not ver.f0_ok
    assert not ver.all_ok


def test_round_trip_catalog():
    t = np.arange(0, 10.0001, 0.05)
    for pair in catalog():
        if not pair.admissible:
            continue
        sig = invert(pair.F_closed, t)
        assert np.max(np.abs(sig.values - pair.f_closed(t))) <= 1e-4, pair.name


def test_conjugate_symmetry_gives_real_output():
    t = np.linspace(0, 8, 81)
    for pair in catalog():
        if pair.admissible:
            sig = invert(pair.F_closed, t)
            assert np.max(np.abs(sig.values.imag)) <= 2 * TOL


def test_complex_valued_pair():
    # t*exp(-(1 - i) t) <-> 1/(p + 1 - i)^2, not conjugate symmetric
    F = TransformFunction(lambda p: 1 / (p + 1 - 1j) ** 2)
    t = np.linspace(-2, 8, 101)
    # |F(i eta)| is centred on eta = 1, so fit the envelope further out
    rep = assess(F, ProbeSettings(eta_min=100.0, eta_max=1e5))
    sig = invert(F, t, report=rep)
    exact = np.where(t > 0, t * np.exp(-(1 - 1j) * np.maximum(t, 0)), 0)
    assert np.max(np.abs(sig.values - exact)) <= TOL


def test_shift_property():
    base = T_EXP.F_closed
    t = np.linspace(0, 5, 51)
    for t0 in (0.5, 1.0):
        shifted = TransformFunction(lambda p, t0=t0: np.exp(-t0 * p) * base(p))
        # exp(-t0 p) keeps |F| on the axis, so the base envelope applies
        sig = invert(shifted, t, report=T_EXP_REPORT)
        ref = invert(base, t - t0, report=T_EXP_REPORT)
        late = t >= t0
        assert np.max(np.abs(sig.values[late] - ref.values[late])) <= 2 * TOL
        assert np.max(np.abs(sig.values[~late]), initial=0) <= TOL


@settings(max_examples=10, deadline=None)
@given(
    a=st.floats(-2, 2),
    b=st.floats(-2, 2),
    i=st.integers(0, 3),
    j=st.integers(0, 3),
)
def test_linearity(a, b, i, j):
    pairs = [p for p in catalog() if p.admissible]
    F, G = pairs[i].F_closed, pairs[j].F_closed
    t = np.linspace(0, 6, 25)
    combo = TransformFunction(lambda p: a * F(p) + b * G(p))
    # the combination's envelope is bounded by those of the parts
    rep_F, rep_G = assess(F), assess(G)
    worst = rep_F if rep_F.b_hat < rep_G.b_hat else rep_G
    s = InversionSettings()
    lhs = invert(combo, t, s, report=worst)
    rhs = a * invert(F, t, s, rep_F).values + b * invert(G, t, s, rep_G).values
    assert np.max(np.abs(lhs.values - rhs)) <= 2 * TOL * max(1.0, abs(a) + abs(b))
