import math

import numpy as np
import pytest

from laplace_gate.core import DomainError, TimeSignal, TransformFunction, get_pair, principal_power
from laplace_gate.hypersingular import oracle_volterra, product_weights, solve, transform_side
from laplace_gate.inversion import InversionSettings, NotAdmissibleError

T_EXP = get_pair("t_exp")


def q_lambda_one(t):
    t = np.asarray(t, dtype=float)
    return t * np.exp(-t) - t * t * np.exp(-t) / 2


def f_samples(h, T):
    t = np.arange(0, round(T / h) + 1) * h
    return TimeSignal(t, T_EXP.f_closed(t))


def test_transform_side_examples():
    assert transform_side(T_EXP.F_closed, -0.25)(1.0) == pytest.approx(0.125, abs=1e-15)
    assert transform_side(T_EXP.F_closed, 1.0)(1.0) == pytest.approx(0.125, abs=1e-15)
    v = transform_side(T_EXP.F_closed, -0.25)(1j)
    assert abs(v) == pytest.approx(1 / (4 * math.cos(math.pi / 16)), rel=1e-12)
    # the quoted 0.25480 is the same number rounded loosely; the line above is exact
    assert abs(v) == pytest.approx(0.25480, abs=1e-4)


@pytest.mark.parametrize("lam", [0.0, 2.0, -2.0, 3.5])
def test_transform_side_refusals(lam):
    with pytest.raises(DomainError):
        transform_side(T_EXP.F_closed, lam)


def test_denominator_safety():
    rng = np.random.default_rng(5)
    p = rng.uniform(0, 10, 1000) + 1j * rng.uniform(-1e4, 1e4, 1000)
    for lam in (-0.25, -0.5, 0.5, 1.0):
        bound = math.sin((math.pi - abs(lam) * math.pi / 2) / 2)
        d = np.abs(1 + principal_power(p, -lam))
        assert d.min() >= bound * (1 - 1e-12)
        assert d.min() >= 0.05


def test_solve_hypersingular_example():
    res = solve(T_EXP.F_closed, -0.25, np.arange(0, 10.0001, 0.05))
    assert res.verified
    assert res.Q_report.verdict == "admissible"
    assert res.q0_magnitude <= 2e-3
    assert all(m <= 5e-3 for _, m in res.residuals)
    assert [p for p, _ in res.residuals] == [0.5, 1.0, 2.0, 4.0]
    assert math.isfinite(res.q.sup_estimate)
    assert res.Q_report.b_hat == pytest.approx(2.25, abs=0.1)


def test_solve_classical_example():
    t = np.linspace(0, 10, 201)
    res = solve(T_EXP.F_closed, 1.0, t, InversionSettings(tol=1e-5))
    assert res.verified
    assert np.max(np.abs(res.q.values - q_lambda_one(t))) <= 1e-5


def test_solve_zero():
    zero = TransformFunction(lambda p: 0 * p)
    res = solve(zero, -0.25, np.linspace(0, 5, 11))
    assert res.verified
    assert np.all(res.q.values == 0)


def test_solve_refuses_inadmissible_Q():
    with pytest.raises(NotAdmissibleError) as exc:
        solve(get_pair("exp").F_closed, 0.5, [0.0, 1.0])
    assert exc.value.report is not None
    with pytest.raises(DomainError, match="lambda must be nonzero"):
        solve(T_EXP.F_closed, 0.0, [0.0, 1.0])


def test_product_weights_integrate_constants_and_lines():
    # kernel integrals of 1 and tau against (t_n - tau)^(lam-1)/Gamma(lam)
    from laplace_gate.core import gamma

    for lam in (0.25, 0.5, 1.0, 1.5):
        for n in (1, 2, 7, 30):
            w = product_weights(n, lam)
            h = 0.1
            scale = h**lam / gamma(lam + 2)
            t = np.arange(n + 1) * h
            tn = t[-1]
            assert scale * w.sum() == pytest.approx(tn**lam / gamma(lam + 1), rel=1e-12)
            assert scale * np.dot(w, t) == pytest.approx(tn ** (lam + 1) / gamma(lam + 2), rel=1e-12)


def test_oracle_examples():
    sig = oracle_volterra(f_samples(0.01, 5.0), 1.0)
    assert np.max(np.abs(sig.values - q_lambda_one(sig.t_grid))) <= 1e-4
    zero = oracle_volterra(TimeSignal(np.linspace(0, 1, 11), np.zeros(11)), 0.5)
    assert np.all(zero.values == 0)
    with pytest.raises(DomainError):
        oracle_volterra(f_samples(0.1, 1.0), -0.25)
    with pytest.raises(ValueError):
        oracle_volterra(TimeSignal([0.0, 0.1, 0.3], [0.0, 0.0, 0.0]), 0.5)


def test_oracle_order():
    errs = []
    for h in (0.02, 0.01, 0.005):
        sig = oracle_volterra(f_samples(h, 5.0), 1.0)
        errs.append(np.max(np.abs(sig.values - q_lambda_one(sig.t_grid))))
    for a, b in zip(errs, errs[1:]):
        assert 3.5 <= a / b <= 4.5


@pytest.mark.parametrize("lam", [0.25, 0.5, 1.0])
def test_regime_consistency(lam):
    orc = oracle_volterra(f_samples(0.005, 5.0), lam)
    t = orc.t_grid[::20]
    res = solve(T_EXP.F_closed, lam, t)
    assert np.max(np.abs(res.q.values - orc.values[::20])) <= 1e-3
