"""Complex-plane primitives and the closed-form reference catalog.

Everything downstream evaluates transforms on numpy arrays, so the
evaluators stored in :class:`TransformFunction` are expected to be
vectorized: they receive a complex ndarray of any shape and return one of
the same shape.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


class DomainError(ValueError):
    """Raised when an operation is asked to evaluate outside its domain."""


def principal_power(p, alpha: float):
    """Return ``p**alpha`` on the principal branch, ``arg p`` in ``(-pi, pi]``.

    Accepts a scalar or an array. A zero anywhere in ``p`` is a branch point
    and raises :class:`DomainError`.
    """
    z = np.asarray(p, dtype=complex)
    if np.any(z == 0):
        raise DomainError("principal_power: p = 0 is a branch point")
    # adding +0.0 turns a signed -0.0 imaginary part into +0.0 so that the
    # negative real axis maps to arg = +pi, not -pi
    theta = alpha * np.arctan2(z.imag + 0.0, z.real)
    # real pow for the modulus avoids the error growth of exp(alpha*log|p|)
    r = np.power(np.abs(z), alpha)
    out = r * np.cos(theta) + 1j * (r * np.sin(theta))
    if out.ndim == 0:
        return complex(out)
    return out


def gamma(x: float) -> float:
    """Gamma function for real ``x``; poles at 0, -1, -2, ... raise."""
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"gamma: non-finite argument {x!r}")
    if x <= 0 and x == math.floor(x):
        raise DomainError(f"gamma: pole at x = {x:g}")
    return math.gamma(x)


@dataclass(frozen=True)
class TailBound:
    """Declared envelope |f(t)| <= M*exp(-rate*t) or M*max(t, 1)**(-rate).

    ``kind`` is ``"exp"`` or ``"power"``. Used only for truncation-error
    accounting of the forward transform.
    """

    kind: str
    M: float
    rate: float

    def __post_init__(self):
        if self.kind not in ("exp", "power"):
            raise ValueError(f"unknown tail kind {self.kind!r}")
        if not (self.M >= 0 and math.isfinite(self.M)):
            raise ValueError("tail bound M must be finite and non-negative")
        if self.kind == "power" and self.rate < 0:
            raise ValueError("power tail needs rate >= 0")

    @classmethod
    def exponential(cls, M: float, gamma_: float) -> "TailBound":
        return cls("exp", float(M), float(gamma_))

    @classmethod
    def power(cls, M: float, rho: float) -> "TailBound":
        return cls("power", float(M), float(rho))

    def envelope(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "exp":
            return self.M * np.exp(-self.rate * t)
        return self.M * np.maximum(t, 1.0) ** (-self.rate)

    def converges_at(self, s: float) -> bool:
        """Whether the envelope times exp(-s*t) is integrable on [0, inf)."""
        if self.M == 0:
            return True
        if self.kind == "exp":
            return self.rate + s > 0
        return s > 0 or self.rate > 1

    def tail_integral(self, T: float, s: float) -> float:
        """Upper bound on the integral of envelope(t)*exp(-s*t) over [T, inf)."""
        if self.M == 0:
            return 0.0
        if not self.converges_at(s):
            return math.inf
        if self.kind == "exp":
            k = self.rate + s
            return self.M * math.exp(-k * T) / k
        Tc = max(T, 1.0)
        if s > 0:
            bound = self.M * Tc ** (-self.rate) * math.exp(-s * Tc) / s
            if T < 1.0:
                bound += self.M * (1.0 - math.exp(-s * (1.0 - T))) * math.exp(-s * T) / s
            if self.rate > 1:
                bound = min(bound, self._power_s0(T))
            return bound
        return self._power_s0(T)

    def _power_s0(self, T: float) -> float:
        Tc = max(T, 1.0)
        return self.M * ((Tc - T) + Tc ** (1.0 - self.rate) / (self.rate - 1.0))

    def horizon(self, s: float, budget: float) -> float:
        """Smallest T (to a relative 1e-6) with tail_integral(T, s) <= budget."""
        if budget <= 0:
            raise ValueError("budget must be positive")
        if not self.converges_at(s):
            raise DomainError("declared tail is not absolutely convergent here")
        if self.tail_integral(0.0, s) <= budget:
            return 0.0
        hi = 1.0
        while self.tail_integral(hi, s) > budget:
            hi *= 2.0
            if hi > 1e15:
                raise DomainError("tail horizon beyond 1e15")
        lo = 0.0
        while hi - lo > 1e-6 * hi:
            mid = 0.5 * (lo + hi)
            if self.tail_integral(mid, s) > budget:
                lo = mid
            else:
                hi = mid
        return hi


@dataclass(frozen=True)
class TransformFunction:
    """An analytic function F(p) on Re p >= 0 plus declared metadata.

    ``decay_hint`` is an optional ``(c, b)`` pair for an envelope
    ``|F(p)| <= c*(1+|p|)**(-b)``; ``growth_C`` the constant in
    ``|F(p)| <= C/(Re p - a)``.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    abscissa_a: float = 0.0
    growth_C: Optional[float] = None
    decay_hint: Optional[tuple[float, float]] = None
    label: str = ""

    def __post_init__(self):
        if self.decay_hint is not None:
            c, b = self.decay_hint
            if not (c > 0 and b > 0):
                raise ValueError("decay_hint needs c > 0 and b > 0")

    def __call__(self, p):
        z = np.asarray(p, dtype=complex)
        with np.errstate(all="ignore"):
            out = np.asarray(self.evaluator(z), dtype=complex)
        if out.shape != z.shape:
            out = np.broadcast_to(out, z.shape).astype(complex)
        if out.ndim == 0:
            return complex(out)
        return out

    def scaled(self, k: complex) -> "TransformFunction":
        ev = self.evaluator
        return TransformFunction(lambda p: k * ev(p), self.abscissa_a, label=f"{k}*({self.label})")


@dataclass
class TimeSignal:
    """Sampled causal signal with a sup-norm estimate.

    ``err_bound`` holds a per-sample error budget when the samples come from
    a numerical inversion; ``info`` carries provenance such as the
    truncation frequency.
    """

    t_grid: np.ndarray
    values: np.ndarray
    sup_estimate: float = math.nan
    tail_bound: Optional[TailBound] = None
    err_bound: Optional[np.ndarray] = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t_grid = np.asarray(self.t_grid, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if self.t_grid.ndim != 1 or self.t_grid.shape != self.values.shape:
            raise ValueError("t_grid and values must be 1-d and of equal length")
        if self.t_grid.size > 1 and np.any(np.diff(self.t_grid) <= 0):
            raise ValueError("t_grid must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("signal values must be finite")
        vmax = float(np.max(np.abs(self.values))) if self.values.size else 0.0
        if math.isnan(self.sup_estimate) or self.sup_estimate < vmax:
            self.sup_estimate = vmax
        if self.err_bound is not None:
            self.err_bound = np.asarray(self.err_bound, dtype=float)

    def __call__(self, t):
        """Linear interpolation; zero before the grid and beyond its end."""
        t = np.asarray(t, dtype=float)
        re = np.interp(t, self.t_grid, self.values.real, left=0.0, right=0.0)
        im = np.interp(t, self.t_grid, self.values.imag, left=0.0, right=0.0)
        return re + 1j * im

    def value_at(self, t: float) -> complex:
        idx = np.flatnonzero(np.isclose(self.t_grid, t, rtol=0, atol=1e-12))
        if idx.size == 0:
            raise KeyError(f"t = {t} is not on the grid")
        return complex(self.values[idx[0]])

    def is_uniform(self, rtol: float = 1e-9) -> bool:
        if self.t_grid.size < 2:
            return False
        d = np.diff(self.t_grid)
        return bool(np.all(np.abs(d - d[0]) <= rtol * abs(d[0])))


@dataclass(frozen=True)
class TransformPair:
    name: str
    f_closed: Callable[[np.ndarray], np.ndarray]
    F_closed: TransformFunction
    b_true: float
    sup_true: float
    admissible: bool
    tail_bound: Optional[TailBound] = None
    f_text: str = ""
    F_text: str = ""
    note: str = ""


def _t_exp(t):
    t = np.asarray(t, dtype=float)
    return t * np.exp(-t) + 0j


def _t2_exp(t):
    t = np.asarray(t, dtype=float)
    return 0.5 * t * t * np.exp(-t) + 0j


def _t_exp_cos(t):
    t = np.asarray(t, dtype=float)
    return t * np.exp(-t) * np.cos(t) + 0j


def _sin_exp(t):
    t = np.asarray(t, dtype=float)
    return np.exp(-t) * np.sin(t) + 0j


def _exp(t):
    t = np.asarray(t, dtype=float)
    return np.exp(-t) + 0j


def _growing_exp(t):
    t = np.asarray(t, dtype=float)
    return np.exp(t) + 0j


def _cos_transform(p):
    q = (p + 1) ** 2
    return (q - 1) / (q + 1) ** 2


_CATALOG = (
    TransformPair(
        "t_exp", _t_exp,
        TransformFunction(lambda p: 1 / (p + 1) ** 2, growth_C=0.25, decay_hint=(1.0, 2.0), label="1/(p+1)^2"),
        b_true=2.0, sup_true=math.exp(-1.0), admissible=True,
        tail_bound=TailBound.exponential(2 / math.e, 0.5),
        f_text="t*exp(-t)", F_text="1/(p+1)^2",
    ),
    TransformPair(
        "t2_exp", _t2_exp,
        TransformFunction(lambda p: 1 / (p + 1) ** 3, decay_hint=(1.0, 3.0), label="1/(p+1)^3"),
        b_true=3.0, sup_true=2 * math.exp(-2.0), admissible=True,
        tail_bound=TailBound.exponential(8 * math.exp(-2.0), 0.5),
        f_text="t^2*exp(-t)/2", F_text="1/(p+1)^3",
    ),
    TransformPair(
        "t_exp_cos", _t_exp_cos,
        TransformFunction(_cos_transform, decay_hint=(1.0, 2.0), label="((p+1)^2-1)/((p+1)^2+1)^2"),
        b_true=2.0, sup_true=0.2717820187467008, admissible=True,
        tail_bound=TailBound.exponential(2 / math.e, 0.5),
        f_text="t*exp(-t)*cos(t)", F_text="((p+1)^2-1)/((p+1)^2+1)^2",
    ),
    TransformPair(
        "sin_exp", _sin_exp,
        TransformFunction(lambda p: 1 / ((p + 1) ** 2 + 1), decay_hint=(1.0, 2.0), label="1/((p+1)^2+1)"),
        b_true=2.0, sup_true=0.3223969419448344, admissible=True,
        tail_bound=TailBound.exponential(1.0, 1.0),
        f_text="exp(-t)*sin(t)", F_text="1/((p+1)^2+1)",
    ),
    TransformPair(
        "exp", _exp,
        TransformFunction(lambda p: 1 / (p + 1), growth_C=1.0, label="1/(p+1)"),
        b_true=1.0, sup_true=1.0, admissible=False,
        tail_bound=TailBound.exponential(1.0, 1.0),
        f_text="exp(-t)", F_text="1/(p+1)",
        note="f(0) = 1; axis decay only b = 1",
    ),
    TransformPair(
        "pole", _growing_exp,
        TransformFunction(lambda p: 1 / (p - 1), abscissa_a=1.0, label="1/(p-1)"),
        b_true=1.0, sup_true=math.inf, admissible=False,
        f_text="exp(t)", F_text="1/(p-1)",
        note="pole at p = 1 inside Re p > 0",
    ),
)


def catalog() -> tuple[TransformPair, ...]:
    return _CATALOG


def get_pair(name: str) -> TransformPair:
    for pair in _CATALOG:
        if pair.name == name:
            return pair
    raise KeyError(f"no catalog pair named {name!r}")
