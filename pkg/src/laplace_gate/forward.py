"""Forward Laplace transform and the transform-domain operator residual."""
from __future__ import annotations

import math
import warnings
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import integrate

from .core import DomainError, TailBound, TimeSignal, TransformFunction, principal_power

TimeFunction = Callable[[np.ndarray], np.ndarray]

_QUAD_LIMIT = 500
_SERIES_CUTOFF = 0.5
_SERIES_TERMS = 24
# below this many points the per-segment sum beats the Horner sweep
_HORNER_MIN = 256


def _resolve_tail(f, tail_bound: Optional[TailBound]) -> TailBound:
    tail = tail_bound if tail_bound is not None else getattr(f, "tail_bound", None)
    if tail is None:
        raise DomainError("forward transform needs a declared tail bound")
    return tail


def _quad(g, T, weight=None, wvar=None, epsabs=1e-10):
    kw = dict(epsabs=epsabs, epsrel=1e-12, limit=_QUAD_LIMIT)
    if weight is not None:
        kw.update(weight=weight, wvar=wvar)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(g, 0.0, T, **kw)
    return val, err


def _transform_point(f: TimeFunction, p: complex, T: float, complex_valued: bool, epsabs: float) -> tuple[complex, float]:
    s, eta = p.real, p.imag

    def gr(t):
        return math.exp(-s * t) * complex(f(t)).real

    def gi(t):
        return math.exp(-s * t) * complex(f(t)).imag

    if T == 0:
        return 0j, 0.0
    if eta == 0:
        re, e1 = _quad(gr, T, epsabs=epsabs)
        im, e2 = _quad(gi, T, epsabs=epsabs) if complex_valued else (0.0, 0.0)
        return complex(re, im), e1 + e2
    # e^{-i eta t} = cos(eta t) - i sin(eta t), integrated with QAWO weights
    a, ea = _quad(gr, T, "cos", eta, epsabs)
    b, eb = _quad(gr, T, "sin", eta, epsabs)
    if complex_valued:
        c, ec = _quad(gi, T, "cos", eta, epsabs)
        d, ed = _quad(gi, T, "sin", eta, epsabs)
    else:
        c = d = ec = ed = 0.0
    return complex(a + d, c - b), ea + eb + ec + ed


def _segment_weights(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Integrals of exp(-u x)*(1 - x) and exp(-u x)*x over x in [0, 1]."""
    u = np.asarray(u, dtype=complex)
    small = np.abs(u) < _SERIES_CUTOFF
    with np.errstate(all="ignore"):
        em = np.exp(-u)
        B = -np.expm1(-u) / u
        A = (1.0 - (1.0 + u) * em) / (u * u)
    if np.any(small):
        us = u[small]
        Bs = np.zeros_like(us)
        As = np.zeros_like(us)
        term = np.ones_like(us)
        for k in range(_SERIES_TERMS):
            # term = (-u)^k / k!
            Bs += term / (k + 1)
            As += term / (k + 2)
            term = term * (-us) / (k + 1)
        B = B.copy()
        A = A.copy()
        B[small] = Bs
        A[small] = As
    return B - A, A


def _nonnegative_part(signal: TimeSignal) -> tuple[np.ndarray, np.ndarray]:
    t, y = signal.t_grid, signal.values
    if t[0] > 0:
        raise ValueError("sampled signal must start at t <= 0")
    if t[0] < 0:
        y0 = complex(signal(0.0))
        keep = t > 0
        t = np.concatenate([[0.0], t[keep]])
        y = np.concatenate([[y0], y[keep]])
    return t, y


def _horner_pair(y: np.ndarray, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """sum_j y[j] z**j and sum_j y[j+1] z**j for j < len(y) - 1."""
    s0 = np.full(z.shape, y[-2], dtype=complex)
    s1 = np.full(z.shape, y[-1], dtype=complex)
    for k in range(y.size - 3, -1, -1):
        s0 *= z
        s0 += y[k]
        s1 *= z
        s1 += y[k + 1]
    return s0, s1


def signal_transform(signal: TimeSignal, p_points) -> np.ndarray:
    """Exact Laplace transform of the linear interpolant of a sampled signal on its grid."""
    t, y = _nonnegative_part(signal)
    p = np.atleast_1d(np.asarray(p_points, dtype=complex))
    out = np.zeros(p.shape, dtype=complex)
    if t.size < 2:
        return out
    h = np.diff(t)
    a = t[:-1]
    h_bar = (t[-1] - t[0]) / h.size
    if p.size >= _HORNER_MIN and np.max(np.abs(h - h_bar)) <= 1e-10 * h_bar:
        # uniform grid: all segments share one pair of weights, and the
        # phase factors are powers of z = exp(-p*h), |z| <= 1
        w0, w1 = _segment_weights(p * h_bar)
        s0, s1 = _horner_pair(y, np.exp(-p * h_bar))
        return h_bar * np.exp(-p * t[0]) * (w0 * s0 + w1 * s1)
    # blocks of p against all segments, about 2**18 entries at a time
    step = max(1, (1 << 18) // h.size)
    for i in range(0, p.size, step):
        pk = p[i : i + step, None]
        w0, w1 = _segment_weights(pk * h)
        out[i : i + step] = np.sum(h * np.exp(-pk * a) * (y[:-1] * w0 + y[1:] * w1), axis=1)
    return out


def interpolation_error(signal: TimeSignal, s: float) -> float:
    """Bound on the interpolation part of the transform error at Re p = s.

    Linear interpolation errs by at most h**2/8 * max|f''|; with f'' taken
    from second differences this is max|second difference|/8 (for the
    local spacing), integrated against exp(-s*t).
    """
    t, y = _nonnegative_part(signal)
    if t.size < 3:
        return 0.0
    h = np.diff(t)
    curv = np.abs(np.diff(np.diff(y) / h)) / (0.5 * (h[:-1] + h[1:]))
    local = curv * np.maximum(h[:-1], h[1:]) ** 2 / 8
    e = float(local.max())
    span = t[-1] - t[0]
    weight = (1 - math.exp(-s * span)) / s if s > 0 else span
    return e * weight


def forward_transform(
    f: Union[TimeFunction, TimeSignal],
    p_points,
    tol: float = 1e-8,
    tail_bound: Optional[TailBound] = None,
    return_error: bool = False,
):
    """Laplace transform of ``f`` at each of ``p_points`` (Re p >= 0).

    The integral is cut at the T where the declared tail envelope carries at
    most tol/2; the remaining [0, T] piece is computed by adaptive quadrature
    (QAWO cosine/sine weights when Im p != 0) to tol/2. A
    :class:`~laplace_gate.core.TimeSignal` is transformed exactly as its
    linear interpolant over the grid, with the tail beyond the grid and the
    interpolation error both added to the error estimate.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    tail = _resolve_tail(f, tail_bound)
    p = np.atleast_1d(np.asarray(p_points, dtype=complex))
    if np.any(p.real < 0):
        raise DomainError("forward transform needs Re p >= 0")
    for pk in p:
        if not tail.converges_at(pk.real):
            raise DomainError(f"not absolutely convergent at p = {pk}: tail does not decay")

    if isinstance(f, TimeSignal):
        vals = signal_transform(f, p)
        t_end = float(f.t_grid[-1])
        errs = np.array([tail.tail_integral(t_end, pk.real) + interpolation_error(f, pk.real) for pk in p])
    else:
        probe = np.asarray(f(np.linspace(0.0, 10.0, 41)), dtype=complex)
        complex_valued = bool(np.any(probe.imag != 0))
        vals = np.empty(p.shape, dtype=complex)
        errs = np.empty(p.shape)
        for i, pk in enumerate(p):
            T = tail.horizon(pk.real, tol / 2)
            vals[i], qerr = _transform_point(f, complex(pk), T, complex_valued, tol / 8)
            errs[i] = qerr + tail.tail_integral(T, pk.real)
    if return_error:
        return vals, errs
    return vals


def _check_lambda(lam: float) -> None:
    if lam == 0 or not abs(lam) < 2:
        raise DomainError("lambda must be nonzero, |lambda|<2")


def operator_residual(
    q: Union[TimeFunction, TimeSignal],
    lam: float,
    F_f: TransformFunction,
    p_samples: Sequence[complex],
    tol: float = 1e-8,
    tail_bound: Optional[TailBound] = None,
) -> list[tuple[complex, complex]]:
    """Residual L(q)(p)*(1 + p**(-lam)) - L(f)(p) at each sample point."""
    _check_lambda(lam)
    p = np.atleast_1d(np.asarray(p_samples, dtype=complex))
    if np.any(p.real <= 0):
        raise DomainError("residual samples need Re p > 0")
    Lq = forward_transform(q, p, tol, tail_bound)
    res = Lq * (1 + principal_power(p, -lam)) - F_f(p)
    return [(complex(pk), complex(r)) for pk, r in zip(p, res)]
