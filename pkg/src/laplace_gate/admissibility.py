"""Numerical probes of the sufficient conditions for a bounded causal inverse.

Four checks feed :func:`assess`:

* ``growth``      sup over Re p > 0 of Re(p)*|F(p)| stays finite
* ``semicircle``  max |F| on right half-circles of growing radius decays
* ``decay``       |F(i*eta)| ~ c*|eta|**(-b) with b > 1 on both half-axes
* ``analyticity`` contour integrals of F over closed rectangles vanish
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import integrate

from .core import TransformFunction

ADMISSIBLE = "admissible"
INADMISSIBLE = "inadmissible"
INCONCLUSIVE = "inconclusive"

# relative growth that counts as "still increasing" when probing an edge or
# zooming on a maximum of Re(p)*|F(p)|
_GROWTH_SLACK = 0.01
_ZOOM_ROUNDS = 6
_ZOOM_BLOWUP = 10.0


@dataclass(frozen=True)
class ProbeSettings:
    eta_min: float = 10.0
    eta_max: float = 1e4
    n_samples: int = 64
    radii: tuple[float, ...] = (10.0, 100.0, 1000.0)
    phi_count: int = 65
    loop_count: int = 8
    loop_region: tuple[float, float, float, float] = (0.1, 5.0, -5.0, 5.0)
    seed: int = 0
    b_margin: float = 0.1
    loop_threshold: float = 1e-6
    decay_fit_max_residual: float = 0.05
    growth_s_grid: tuple[float, ...] = tuple(np.logspace(-3, 3, 61).tolist())
    growth_eta_grid: tuple[float, ...] = tuple(
        np.concatenate([-np.logspace(3, -2, 41), [0.0], np.logspace(-2, 3, 41)]).tolist()
    )

    def __post_init__(self):
        if not (0 < self.eta_min < self.eta_max):
            raise ValueError("need 0 < eta_min < eta_max")
        s1, s2, e1, e2 = self.loop_region
        if not (s1 > 0 and s2 >= s1 and e2 >= e1):
            raise ValueError("loop_region must be [s1, s2] x [eta1, eta2] with s1 > 0")
        if min(self.n_samples, self.phi_count, self.loop_count) < 2:
            raise ValueError("sample counts must be >= 2")
        r = np.asarray(self.radii, dtype=float)
        if r.size < 2 or np.any(r <= 0) or np.any(np.diff(r) <= 0):
            raise ValueError("radii must be positive and increasing")
        if any(s <= 0 for s in self.growth_s_grid):
            raise ValueError("growth_s_grid must be positive")


@dataclass
class DecayFit:
    b_hat: float
    c_hat: float
    fit_residual: float
    c_envelope: float
    n_used: int
    n_dropped: int


@dataclass
class LoopResult:
    rect: tuple[float, float, float, float]
    integral: complex
    residual: float
    reliable: bool


@dataclass
class AdmissibilityReport:
    b_hat: float
    c_hat: float
    fit_residual: float
    semicircle_max: list[tuple[float, float]]
    growth_C_hat: Optional[float]
    loop_residuals: list[float]
    verdict: str
    failed_conditions: list[str]
    # diagnostics beyond the core fields
    c_envelope: float = math.nan
    eta_window: tuple[float, float] = (math.nan, math.nan)
    loop_integrals: list[float] = field(default_factory=list)
    loop_rects: list[tuple[float, float, float, float]] = field(default_factory=list)
    inconclusive_conditions: list[str] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


class DecayFitError(RuntimeError):
    pass


def _axis_samples(settings: ProbeSettings) -> np.ndarray:
    eta = np.geomspace(settings.eta_min, settings.eta_max, settings.n_samples)
    return np.concatenate([eta, -eta])


def fit_decay(F: TransformFunction, settings: ProbeSettings) -> DecayFit:
    eta = _axis_samples(settings)
    mod = np.abs(F(1j * eta))
    if np.all(mod == 0):
        # the zero function sits under every envelope
        return DecayFit(math.inf, 0.0, 0.0, 0.0, int(eta.size), 0)
    ok = np.isfinite(mod) & (mod > 0)
    n_drop = int(np.count_nonzero(~ok))
    if n_drop > 0.5 * eta.size:
        raise DecayFitError(f"{n_drop} of {eta.size} axis samples are zero or non-finite")
    x = np.log(np.abs(eta[ok]))
    y = np.log(mod[ok])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    rms = float(np.sqrt(np.mean(resid**2)))
    b_hat = float(-slope)
    return DecayFit(
        b_hat=b_hat,
        c_hat=float(np.exp(intercept)),
        fit_residual=rms,
        c_envelope=float(np.exp(intercept + resid.max())),
        n_used=int(ok.sum()),
        n_dropped=n_drop,
    )


def estimate_decay(F: TransformFunction, settings: ProbeSettings) -> tuple[float, float, float]:
    """Least-squares fit log|F(i*eta)| = log c - b*log|eta| on both half-axes.

    Returns ``(b_hat, c_hat, fit_residual)`` where the residual is the RMS
    deviation of the log-log fit.
    """
    fit = fit_decay(F, settings)
    return fit.b_hat, fit.c_hat, fit.fit_residual


def semicircle_profile(F: TransformFunction, settings: ProbeSettings) -> list[tuple[float, float]]:
    phi = np.linspace(-math.pi / 2, math.pi / 2, settings.phi_count)
    out = []
    for R in settings.radii:
        vals = np.abs(F(R * np.exp(1j * phi)))
        out.append((float(R), float(vals.max()) if np.all(np.isfinite(vals)) else math.nan))
    return out


def semicircle_passes(profile: Sequence[tuple[float, float]], slack: float = 0.05) -> bool:
    m = [v for _, v in profile]
    if any(not math.isfinite(v) for v in m):
        return False
    monotone = all(b <= a * (1 + slack) for a, b in zip(m, m[1:]))
    return monotone and (m[-1] < m[0] / 10 or m[0] == 0)


def check_semicircle_decay(F: TransformFunction, settings: ProbeSettings) -> list[tuple[float, float]]:
    """Max of |F(R e^{i phi})| over phi in [-pi/2, pi/2] for each probe radius.

    A radius whose probes fail to evaluate is reported as NaN. Use
    :func:`semicircle_passes` for the pass/fail rule.
    """
    return semicircle_profile(F, settings)


def _scaled_max(F, s: np.ndarray, eta: np.ndarray) -> tuple[float, float, float]:
    S, E = np.meshgrid(s, eta, indexing="ij")
    vals = S * np.abs(F(S + 1j * E))
    if not np.all(np.isfinite(vals)):
        return math.inf, math.nan, math.nan
    i, j = np.unravel_index(np.argmax(vals), vals.shape)
    return float(vals[i, j]), float(S[i, j]), float(E[i, j])


def check_growth_bound(F: TransformFunction, s_grid: Sequence[float], eta_grid: Sequence[float]) -> tuple[float, bool]:
    """Estimate C = sup s*|F(s + i*eta)| and decide whether it is finite.

    The grid maximum is followed up three ways: if it sits on the smallest
    or largest s the grid is extended by a decade to see whether it keeps
    growing, and around an interior maximum the grid is repeatedly zoomed
    in. A value that blows up under zooming (a pole in Re p > 0) or keeps
    growing off the grid edge fails.
    """
    s = np.sort(np.asarray(s_grid, dtype=float))
    eta = np.sort(np.asarray(eta_grid, dtype=float))
    if np.any(s <= 0):
        raise ValueError("s_grid must be positive")
    C, s0, e0 = _scaled_max(F, s, eta)
    if not math.isfinite(C):
        return C, False

    # edge extension: s -> 0+ and s -> infinity
    for edge, factor in ((s[0], 0.1), (s[-1], 10.0)):
        if math.isclose(s0, edge):
            C_ext, _, _ = _scaled_max(F, np.array([edge * factor]), eta)
            if not math.isfinite(C_ext) or C_ext > C * (1 + _GROWTH_SLACK):
                return max(C, C_ext), False

    # zoom around the maximum
    ds = s0 * 0.5
    de = max(abs(e0) * 0.5, 1.0)
    C0 = C
    for _ in range(_ZOOM_ROUNDS):
        s_loc = np.linspace(max(s0 - ds, s0 * 1e-3), s0 + ds, 21)
        e_loc = np.linspace(e0 - de, e0 + de, 21)
        Cz, sz, ez = _scaled_max(F, s_loc, e_loc)
        if not math.isfinite(Cz) or Cz > _ZOOM_BLOWUP * C0:
            return Cz, False
        if Cz <= C * (1 + 1e-9):
            break
        C, s0, e0 = Cz, sz, ez
        ds *= 0.1
        de *= 0.1
    return C, True


def _rect_edges(rect):
    s1, s2, e1, e2 = rect
    a, b, c, d = complex(s1, e1), complex(s2, e1), complex(s2, e2), complex(s1, e2)
    return [(a, b), (b, c), (c, d), (d, a)]


def _edge_points(rect, n: int = 64) -> np.ndarray:
    return np.concatenate([z0 + np.linspace(0, 1, n, endpoint=False) * (z1 - z0) for z0, z1 in _rect_edges(rect)])


def loop_integral(F: TransformFunction, rect, rel_tol: float = 1e-13) -> tuple[complex, bool]:
    """Counterclockwise integral of F over the rectangle boundary.

    The absolute quadrature tolerance is ``rel_tol`` times max |F| on the
    loop times the edge length, so the test does not depend on the scale of F.
    """
    total = 0j
    reliable = True
    fmax = float(np.max(np.abs(F(_edge_points(rect)))))
    if not math.isfinite(fmax) or fmax == 0:
        fmax = 1.0
    for z0, z1 in _rect_edges(rect):
        dz = z1 - z0
        if dz == 0:
            continue
        epsabs = rel_tol * fmax * abs(dz)

        def g(u, z0=z0, dz=dz):
            return complex(F(z0 + u * dz)) * dz

        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", integrate.IntegrationWarning)
            try:
                val, _ = integrate.quad(g, 0.0, 1.0, complex_func=True, epsabs=epsabs, epsrel=1e-12, limit=200)
            except (ZeroDivisionError, OverflowError):
                val = complex(math.nan, math.nan)
        if any(issubclass(w.category, integrate.IntegrationWarning) for w in caught):
            reliable = False
        total += val
    if not np.isfinite(total):
        reliable = False
    return total, reliable


def _loop_rects(settings: ProbeSettings) -> list[tuple[float, float, float, float]]:
    # the first loop is the whole region, so any isolated singularity inside
    # the region is enclosed by at least one loop
    s1, s2, e1, e2 = settings.loop_region
    rects = [(s1, s2, e1, e2)]
    rng = np.random.default_rng(settings.seed)
    for _ in range(settings.loop_count - 1):
        ss = np.sort(rng.uniform(s1, s2, 2))
        ee = np.sort(rng.uniform(e1, e2, 2))
        rects.append((float(ss[0]), float(ss[1]), float(ee[0]), float(ee[1])))
    return rects


def _loop_result(F: TransformFunction, rect) -> LoopResult:
    s1, s2, e1, e2 = rect
    perimeter = 2 * ((s2 - s1) + (e2 - e1))
    if (s2 - s1) == 0 or (e2 - e1) == 0:
        return LoopResult(tuple(rect), 0j, 0.0, True)
    val, reliable = loop_integral(F, rect)
    fmax = float(np.max(np.abs(F(_edge_points(rect)))))
    if not (math.isfinite(fmax) and reliable):
        return LoopResult(tuple(rect), val, math.nan, False)
    if fmax == 0:
        return LoopResult(tuple(rect), val, 0.0, True)
    return LoopResult(tuple(rect), val, abs(val) / (perimeter * fmax), True)


def check_analyticity_loops(F: TransformFunction, settings: ProbeSettings) -> list[LoopResult]:
    """Contour integrals over seeded rectangles inside ``settings.loop_region``.

    Each residual is |loop integral| / (perimeter * max |F| on the loop), so it
    lies in [0, 1]; unreliable quadratures carry ``residual = nan``.
    """
    return [_loop_result(F, r) for r in _loop_rects(settings)]


def assess(F: TransformFunction, settings: Optional[ProbeSettings] = None) -> AdmissibilityReport:
    settings = settings or ProbeSettings()
    failed: list[str] = []
    unsure: list[str] = []
    diag: list[str] = []

    try:
        fit = fit_decay(F, settings)
    except DecayFitError as exc:
        fit = None
        unsure.append("decay")
        diag.append(f"decay: {exc}")
    if fit is not None:
        if fit.c_hat == 0:
            pass
        elif not math.isfinite(fit.b_hat):
            unsure.append("decay")
        elif fit.b_hat <= 1.0:
            failed.append("decay")
        elif fit.b_hat < 1.0 + settings.b_margin:
            unsure.append("decay")
            diag.append(f"decay: b_hat={fit.b_hat:.4g} inside the margin above 1")
        if fit.fit_residual > settings.decay_fit_max_residual:
            unsure.append("decay_fit")
            diag.append(f"decay_fit: rms {fit.fit_residual:.3g} exceeds {settings.decay_fit_max_residual:g}")

    profile = check_semicircle_decay(F, settings)
    if any(math.isnan(v) for _, v in profile):
        unsure.append("semicircle")
        diag.append("semicircle: evaluation failed on some radius")
    elif not semicircle_passes(profile):
        failed.append("semicircle")

    C_hat, growth_ok = check_growth_bound(F, settings.growth_s_grid, settings.growth_eta_grid)
    if not growth_ok:
        failed.append("growth")

    loops = check_analyticity_loops(F, settings)
    if any(lr.reliable and lr.residual > settings.loop_threshold for lr in loops):
        failed.append("analyticity")
    elif any(not lr.reliable for lr in loops):
        unsure.append("analyticity")
        diag.append("analyticity: some loop quadratures did not converge")

    if failed:
        verdict = INADMISSIBLE
    elif unsure:
        verdict = INCONCLUSIVE
    else:
        verdict = ADMISSIBLE

    return AdmissibilityReport(
        b_hat=fit.b_hat if fit else math.nan,
        c_hat=fit.c_hat if fit else math.nan,
        fit_residual=fit.fit_residual if fit else math.nan,
        semicircle_max=profile,
        growth_C_hat=C_hat if math.isfinite(C_hat) else None,
        loop_residuals=[lr.residual for lr in loops],
        verdict=verdict,
        failed_conditions=failed,
        c_envelope=fit.c_envelope if fit else math.nan,
        eta_window=(settings.eta_min, settings.eta_max),
        loop_integrals=[abs(lr.integral) for lr in loops],
        loop_rects=[lr.rect for lr in loops],
        inconclusive_conditions=unsure,
        diagnostics=diag,
    )
