"""Inversion along the imaginary axis.

    f(t) = 1/(2 pi) * integral_{-H}^{H} exp(i t eta) F(i eta) d eta

The axis integral is computed with composite Gauss-Legendre panels.
Panels grow geometrically away from eta = 0 (so a branch point of F at the
origin is resolved) and are capped at a width set by the oscillation of
exp(i t eta) at the largest |t| requested. The truncation frequency H comes
from the fitted envelope |F(i eta)| <= c |eta|**(-b).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .admissibility import ADMISSIBLE, AdmissibilityReport, assess
from .core import TimeSignal, TransformFunction

log = logging.getLogger(__name__)

GAUSS_ORDER = 16
_GL_X, _GL_W = np.polynomial.legendre.leggauss(GAUSS_ORDER)
_ETA_START = 1e-10
_KAPPA = 0.25
_CHUNK = 1 << 16

DEFAULT_NEGATIVE_T = (-5.0, -2.0, -1.0, -0.5, -0.1)
DEFAULT_IN_LIST = (1e2, 1e3, 1e4)


class NotAdmissibleError(RuntimeError):
    def __init__(self, message: str, report: Optional[AdmissibilityReport] = None):
        super().__init__(message)
        self.report = report


class TruncationError(ValueError):
    pass


@dataclass(frozen=True)
class InversionSettings:
    tol: float = 1e-4
    H_max: float = 1e6
    points_per_period: int = 16
    refine_limit: int = 6
    contour_abscissa: float = 0.0

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not self.H_max > 0:
            raise ValueError("H_max must be positive")
        if self.points_per_period < 8:
            raise ValueError("points_per_period must be >= 8")
        if self.refine_limit < 1:
            raise ValueError("refine_limit must be >= 1")
        if self.contour_abscissa != 0:
            raise ValueError("only the imaginary axis (abscissa 0) is supported")


def tail_bound(c: float, b: float, H: float) -> float:
    """Bound on (1/2 pi) * integral over |eta| > H of c*|eta|**(-b)."""
    return c / math.pi * H ** (1.0 - b) / (b - 1.0)


def truncation_bound(c_hat: float, b_hat: float, tol: float, H_max: float = 1e6) -> tuple[float, float]:
    """Smallest H whose envelope tail is <= tol, capped at ``H_max``.

    Returns ``(H, achieved_tol)``; when the cap applies ``achieved_tol`` is
    the (larger) tail bound at ``H_max``.
    """
    if not b_hat > 1:
        raise TruncationError("tail integral not summable: need b_hat > 1")
    if not c_hat > 0:
        raise TruncationError("need c_hat > 0")
    log_H = (math.log(c_hat) - math.log(math.pi * tol * (b_hat - 1.0))) / (b_hat - 1.0)
    if log_H > math.log(H_max):
        return H_max, tail_bound(c_hat, b_hat, H_max)
    H = math.exp(log_H)
    return H, tail_bound(c_hat, b_hat, H)


def panel_breaks(H: float, max_width: float, kappa: float = _KAPPA) -> np.ndarray:
    """Breakpoints on [0, H]: geometric from ~0, then uniform of ``max_width``."""
    if H <= 0:
        return np.array([0.0])
    if math.isfinite(max_width):
        x_switch = max(max_width / kappa, _ETA_START)
    else:
        x_switch = math.inf
    x_geo_end = min(H, x_switch)
    n_geo = max(1, math.ceil(math.log(x_geo_end / _ETA_START) / math.log1p(kappa)))
    geo = _ETA_START * (1 + kappa) ** np.arange(n_geo)
    geo = geo[geo < x_geo_end]
    parts = [np.array([0.0]), geo, np.array([x_geo_end])]
    if H > x_geo_end:
        n_uni = math.ceil((H - x_geo_end) / max_width)
        parts.append(np.linspace(x_geo_end, H, n_uni + 1)[1:])
    return np.concatenate(parts)


def _nodes(H: float, max_width: float, kappa: float) -> tuple[np.ndarray, np.ndarray]:
    br = panel_breaks(H, max_width, kappa)
    a, b = br[:-1], br[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    x = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    w = (half[:, None] * _GL_W[None, :]).ravel()
    return x, w


def _uniform_step(t: np.ndarray) -> Optional[float]:
    if t.size < 3:
        return None
    d = np.diff(t)
    if np.all(np.abs(d - d[0]) <= 1e-9 * abs(d[0])):
        return float(d[0])
    return None


def _fourier_sums(eta: np.ndarray, g: np.ndarray, t: np.ndarray) -> np.ndarray:
    """sum_j exp(i t_k eta_j) g_j for every t_k, chunked over nodes."""
    out = np.zeros(t.size, dtype=complex)
    if t.size == 0 or eta.size == 0:
        return out
    dt = _uniform_step(t)
    for s in range(0, eta.size, _CHUNK):
        e = eta[s:s + _CHUNK]
        gg = g[s:s + _CHUNK]
        if dt is None:
            for k0 in range(0, t.size, 64):
                tk = t[k0:k0 + 64]
                out[k0:k0 + 64] += np.exp(1j * np.outer(tk, e)) @ gg
        else:
            # exp(i t_k eta) by repeated multiplication; the phase drift is
            # ~k*eps and stays far below the quadrature tolerance
            step = np.exp(1j * dt * e)
            cur = np.exp(1j * t[0] * e) * gg
            for k in range(t.size):
                out[k] += cur.sum()
                cur *= step
    return out


def _is_conjugate_symmetric(F: TransformFunction, eta: np.ndarray) -> bool:
    probe = eta[:: max(1, eta.size // 512)]
    up = F(1j * probe)
    down = F(-1j * probe)
    scale = np.maximum(np.abs(up), 1e-300)
    return bool(np.all(np.abs(down - np.conj(up)) <= 1e-12 * scale))


def axis_integral(F: TransformFunction, t, H: float, max_abs_t: float, points_per_period: int, level: int) -> np.ndarray:
    """(1/2 pi) * integral_{-H}^{H} exp(i t eta) F(i eta) d eta at one refinement level."""
    t = np.asarray(t, dtype=float)
    if max_abs_t > 0:
        width = GAUSS_ORDER * 2 * math.pi / (points_per_period * max_abs_t)
    else:
        width = math.inf
    scale = 0.5 ** level
    eta, w = _nodes(H, width * scale, _KAPPA * scale)
    Fp = F(1j * eta)
    if _is_conjugate_symmetric(F, eta):
        return _fourier_sums(eta, w * Fp, t).real / math.pi
    Fm = F(-1j * eta)
    total = _fourier_sums(eta, w * Fp, t) + _fourier_sums(-eta, w * Fm, t)
    return total / (2 * math.pi)


@dataclass
class _Quadrature:
    values: np.ndarray
    quad_err: np.ndarray
    levels: int
    converged: bool


def _refined_integral(F, t, H, settings: InversionSettings, max_abs_t: Optional[float] = None) -> _Quadrature:
    t = np.asarray(t, dtype=float)
    if max_abs_t is None:
        max_abs_t = float(np.max(np.abs(t))) if t.size else 0.0
    prev = axis_integral(F, t, H, max_abs_t, settings.points_per_period, 0)
    for level in range(1, settings.refine_limit + 1):
        cur = axis_integral(F, t, H, max_abs_t, settings.points_per_period, level)
        diff = np.abs(cur - prev)
        if not np.all(np.isfinite(cur)):
            return _Quadrature(cur, np.full(t.shape, math.inf), level, False)
        if diff.max(initial=0.0) < settings.tol / 2:
            return _Quadrature(cur, diff, level, True)
        prev = cur
    log.warning("axis quadrature hit the refinement limit (%d)", settings.refine_limit)
    return _Quadrature(prev, diff, settings.refine_limit, False)


def choose_truncation(report: AdmissibilityReport, settings: InversionSettings, force: bool = False) -> tuple[float, float]:
    """Truncation frequency from the report's envelope, half the tolerance budget."""
    b = report.b_hat
    c = report.c_envelope if math.isfinite(report.c_envelope) else report.c_hat
    if c == 0:
        lo = report.eta_window[0]
        return (min(lo, settings.H_max) if math.isfinite(lo) else settings.H_max), 0.0
    if math.isfinite(b) and b > 1 and math.isfinite(c) and c > 0:
        H, achieved = truncation_bound(c, b, settings.tol / 2, settings.H_max)
        lo = report.eta_window[0]
        if math.isfinite(lo) and H < lo <= settings.H_max:
            # the envelope is only fitted beyond the window start
            H, achieved = lo, tail_bound(c, b, lo)
        return H, achieved
    if not force:
        raise TruncationError("tail integral not summable: b_hat <= 1")
    return settings.H_max, math.inf


def invert(
    F: TransformFunction,
    t_grid: Sequence[float],
    settings: Optional[InversionSettings] = None,
    report: Optional[AdmissibilityReport] = None,
    force: bool = False,
) -> TimeSignal:
    """Invert F on the imaginary axis at each point of ``t_grid``.

    Refuses unless ``report.verdict`` is admissible, or ``force`` is set.
    The returned signal carries a per-point error budget (quadrature
    difference between the last two refinements plus the truncation tail)
    and ``info`` with ``H``, ``achieved_tol``, ``levels`` and ``low_confidence``.
    """
    settings = settings or InversionSettings()
    if report is None:
        report = assess(F)
    if report.verdict != ADMISSIBLE and not force:
        raise NotAdmissibleError(f"transform judged {report.verdict}; use force to override", report)
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0 or not np.all(np.isfinite(t)):
        raise ValueError("t_grid must be a non-empty finite 1-d sequence")
    H, achieved = choose_truncation(report, settings, force)
    quad = _refined_integral(F, t, H, settings)
    err = quad.quad_err + achieved
    info = {
        "H": H,
        "achieved_tol": achieved,
        "levels": quad.levels,
        "low_confidence": (not quad.converged) or achieved > settings.tol / 2 * (1 + 1e-9),
        "quad_err_max": float(quad.quad_err.max(initial=0.0)),
        "forced": bool(force and report.verdict != ADMISSIBLE),
    }
    return TimeSignal(t, quad.values, err_bound=err, info=info)


def partial_sums_IN(F: TransformFunction, N_list: Sequence[float], settings: Optional[InversionSettings] = None) -> list[tuple[float, complex]]:
    """I_N = (1/2 pi) * integral_{-N}^{N} F(i eta) d eta for each N."""
    settings = settings or InversionSettings()
    N = np.asarray(N_list, dtype=float)
    if np.any(N <= 0) or np.any(np.diff(N) <= 0):
        raise ValueError("N_list must be positive and increasing")
    out = []
    for n in N:
        quad = _refined_integral(F, np.zeros(1), float(n), settings, max_abs_t=0.0)
        out.append((float(n), complex(quad.values[0])))
    return out


def loglog_slope(N_list, values) -> float:
    x = np.log(np.asarray(N_list, dtype=float))
    y = np.log(np.abs(np.asarray(values)))
    return float(np.polyfit(x, y, 1)[0])


@dataclass
class Verification:
    sup_estimate: float
    f0: float
    f0_ok: bool
    negative_t: list[float]
    negative_max: float
    causal_ok: bool
    I_N: list[tuple[float, complex]]
    I_N_slope: float
    tol: float
    all_ok: bool = field(init=False)

    def __post_init__(self):
        self.all_ok = bool(self.f0_ok and self.causal_ok and math.isfinite(self.sup_estimate))

    def to_dict(self) -> dict:
        return {
            "sup_estimate": self.sup_estimate,
            "f0": self.f0,
            "f0_ok": self.f0_ok,
            "negative_t": self.negative_t,
            "negative_max": self.negative_max,
            "causal_ok": self.causal_ok,
            "I_N": [[n, v.real, v.imag] for n, v in self.I_N],
            "I_N_slope": self.I_N_slope,
            "tol": self.tol,
            "all_ok": self.all_ok,
        }


def verify_conclusions(
    F: TransformFunction,
    signal: TimeSignal,
    negative_t_grid: Sequence[float] = DEFAULT_NEGATIVE_T,
    settings: Optional[InversionSettings] = None,
    N_list: Sequence[float] = DEFAULT_IN_LIST,
) -> Verification:
    """Check sup|f| < inf, |f(0)| <= tol and |f(t)| <= tol for t < 0.

    Values off the signal's grid are recomputed with the signal's own
    truncation frequency. The decay of |I_N| is fitted on ``N_list``.
    """
    settings = settings or InversionSettings()
    neg = np.asarray(negative_t_grid, dtype=float)
    if np.any(neg >= 0):
        raise ValueError("negative_t_grid must hold negative times")
    H = float(signal.info.get("H", settings.H_max))
    try:
        f0 = abs(signal.value_at(0.0))
    except KeyError:
        f0 = abs(_refined_integral(F, np.zeros(1), H, settings).values[0])
    neg_vals = np.abs(_refined_integral(F, neg, H, settings).values) if neg.size else np.zeros(0)
    table = partial_sums_IN(F, N_list, settings)
    mags = [abs(v) for _, v in table]
    slope = loglog_slope([n for n, _ in table], mags) if all(m > 0 for m in mags) else -math.inf
    nmax = float(neg_vals.max(initial=0.0))
    return Verification(
        sup_estimate=float(signal.sup_estimate),
        f0=float(f0),
        f0_ok=bool(f0 <= settings.tol),
        negative_t=[float(v) for v in neg_vals],
        negative_max=nmax,
        causal_ok=bool(nmax <= settings.tol),
        I_N=table,
        I_N_slope=slope,
        tol=settings.tol,
    )
