"""Marginals, fringe visibility, threshold location and visibility scans."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import PchipInterpolator
from scipy.optimize import minimize

from .constants import FWHM_PER_SIGMA, LC_PER_SIGMA
from .parallel import ordered_map
from .scenario import Body, Scenario, natural_particle, natural_scatterer, validate
from .wavegroups import SQRT2, PdfField, Term, build_terms, eq6_pdf, term_amplitudes

LC_PER_FWHM = LC_PER_SIGMA / FWHM_PER_SIGMA


class WindowError(ValueError):
    pass


# -- grid marginals -----------------------------------------------------------

def marginalize(field: PdfField, traced: Sequence[str],
                window: Mapping[str, tuple[float, float]] | None = None,
                periods: Mapping[str, float] | None = None,
                tail_tol: float | None = 1e-6) -> PdfField:
    """Integrate ``field`` over the ``traced`` axes.

    Envelope axes use Simpson's rule and are checked for probability leaking
    out of the window: the outermost tenth of the window on either side may
    hold at most ``tail_tol`` of the mass. Axes listed in ``periods`` are
    fringe axes of non-normalizable fields; their grid must cover a whole
    number of periods with the right endpoint excluded, and they are
    integrated with the rectangle rule, which is exact for the trigonometric
    integrands found there. ``tail_tol=None`` skips the leak check, for
    integrands that do not depend on the traced axis.
    """
    window = dict(window or {})
    periods = dict(periods or {})
    axes = list(field.axes)
    values = field.values
    for name in traced:
        names = [n for n, _ in axes]
        if name not in names:
            raise KeyError(f"axis {name!r} not in field {names}")
        k = names.index(name)
        a = axes[k][1]
        if name in window:
            lo, hi = window[name]
            keep = (a >= lo) & (a <= hi)
            if keep.sum() < 3:
                raise WindowError(f"window on {name} keeps fewer than 3 samples")
            a = a[keep]
            values = np.compress(keep, values, axis=k)
        if name in periods:
            step = a[1] - a[0]
            span = step * a.size
            n = span / periods[name]
            if abs(n - round(n)) > 1e-9 * max(1.0, n) or round(n) < 1:
                raise WindowError(f"{name} spans {n:g} periods; need a whole number")
            values = values.sum(axis=k) * step
        else:
            total = simpson(values, x=a, axis=k)
            if tail_tol is None:
                values = total
                del axes[k]
                continue
            edge = max(1, a.size // 10)
            tails = (np.abs(simpson(np.take(values, range(edge + 1), axis=k), x=a[:edge + 1], axis=k))
                     + np.abs(simpson(np.take(values, range(a.size - edge - 1, a.size), axis=k),
                                      x=a[-edge - 1:], axis=k)))
            scale = np.max(np.abs(total)) if np.size(total) else 0.0
            if scale > 0 and np.max(tails) > tail_tol * scale:
                raise WindowError(f"window on {name} cuts off envelope mass "
                                  f"({np.max(tails) / scale:.2e} > {tail_tol:g})")
            values = total
        del axes[k]
    values = np.asarray(values, dtype=float)
    if not axes:
        axes = [("_", np.zeros(1))]
        values = values.reshape(1)
    meta = dict(field.metadata, traced=list(field.metadata.get("traced", [])) + list(traced))
    return PdfField(tuple(axes), np.clip(values, 0.0, None), "raw", meta)


def marginal_closed(x0, lc: float, wavelength: float):
    """Particle marginal of the heavy beamsplitter model versus separation,
    exactly as printed: ``1 - exp(-L^2 / 2 lambda^2) cos(4 pi x0 / lambda)``."""
    if lc <= 0 or wavelength <= 0:
        raise ValueError("coherence length and wavelength must be positive")
    x0 = np.asarray(x0, dtype=float)
    return 1.0 - math.exp(-lc**2 / (2.0 * wavelength**2)) * np.cos(4.0 * math.pi * x0 / wavelength)


def eq6_marginal(x0, lc: float, wavelength: float, sigmas: float = 10.0,
                 samples_per_period: int = 64):
    """Heavy beamsplitter PDF integrated numerically over the scatterer coordinate."""
    sigma = lc / LC_PER_SIGMA
    half = sigmas * sigma
    step = min(sigma / 20.0, wavelength / (2.0 * samples_per_period))
    n = 2 * math.ceil(half / step) + 1
    u = np.linspace(-half, half, n)
    out = []
    for c in np.atleast_1d(np.asarray(x0, dtype=float)):
        out.append(simpson(eq6_pdf(c + u, wavelength, lc, c), x=c + u))
    out = np.asarray(out)
    return out if np.ndim(x0) else float(out[0])


# -- visibility ----------------------------------------------------------------

def _refine(y: np.ndarray, i: int, sign: float) -> float:
    """Parabolic peak value through samples ``i-1, i, i+1`` (max if sign > 0)."""
    if i == 0 or i == y.size - 1:
        return float(y[i])
    a, b, c = y[i - 1], y[i], y[i + 1]
    den = a - 2.0 * b + c
    if den == 0.0 or sign * den > 0:
        return float(b)
    return float(b - 0.125 * (a - c) ** 2 / den)


def visibility(values, envelope=None, x=None, period: float | None = None,
               min_periods: float = 2.0, min_samples_per_period: int = 16) -> float:
    """Fringe contrast ``(max - min) / (max + min)``.

    With ``envelope`` the samples are divided by it first, so a slowly
    varying background does not bias the extrema. With ``x`` and ``period``
    the scan is checked to cover at least ``min_periods`` periods at the
    requested sampling density.
    """
    y = np.asarray(values, dtype=float)
    if y.ndim != 1 or y.size < 3:
        raise ValueError("need a 1D scan with at least 3 samples")
    if x is not None and period is not None:
        x = np.asarray(x, dtype=float)
        step = float(np.mean(np.diff(x)))
        span = step * x.size
        if span < min_periods * period * (1 - 1e-9):
            raise ValueError(f"scan spans {span / period:.3g} periods; need {min_periods:g}")
        if period / step < min_samples_per_period * (1 - 1e-9):
            raise ValueError(f"only {period / step:.3g} samples per period; "
                             f"need {min_samples_per_period}")
    if envelope is not None:
        env = np.asarray(envelope, dtype=float)
        if np.any(env <= 0):
            raise ValueError("envelope must be positive")
        y = y / env
    hi = _refine(y, int(np.argmax(y)), 1.0)
    lo = _refine(y, int(np.argmin(y)), -1.0)
    hi, lo = max(hi, float(y.max())), min(lo, float(y.min()))
    lo = max(lo, 0.0)
    if hi + lo <= 0 or hi == lo:
        return 0.0
    return float(min(1.0, (hi - lo) / (hi + lo)))


@dataclass
class VisibilityTrace:
    """Visibility versus a coherence-length abscissa (FWHM/lambda by default)."""

    abscissa: np.ndarray
    visibility: np.ndarray
    model: str
    abscissa_kind: str = "fwhm_over_lambda"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.abscissa = np.asarray(self.abscissa, dtype=float)
        self.visibility = np.asarray(self.visibility, dtype=float)
        if self.abscissa.shape != self.visibility.shape or self.abscissa.ndim != 1:
            raise ValueError("abscissa and visibility must be matching 1D arrays")
        if np.any(np.diff(self.abscissa) <= 0):
            raise ValueError("abscissa must be strictly increasing")
        if np.any((self.visibility < 0) | (self.visibility > 1)):
            raise ValueError("visibility must lie in [0, 1]")

    def lc_over_lambda(self) -> np.ndarray:
        if self.abscissa_kind == "lc_over_lambda":
            return self.abscissa
        return self.abscissa * LC_PER_FWHM

    def is_monotone(self, tol: float = 1e-9) -> bool:
        """Non-increasing up to ``tol`` (traces underflow to ~0 at large widths)."""
        return bool(np.all(np.diff(self.visibility) <= tol))


def closed_form_trace(lc_ratios, wavelength: float = 1.0, samples_per_period: int = 64,
                      periods: int = 2) -> VisibilityTrace:
    """Visibility of :func:`marginal_closed` versus L_c/lambda, extracted by scanning x0."""
    lc_ratios = np.asarray(lc_ratios, dtype=float)
    period = wavelength / 2.0
    x = np.arange(periods * samples_per_period) * (period / samples_per_period)
    vis = [visibility(marginal_closed(x, r * wavelength, wavelength), x=x, period=period)
           for r in lc_ratios]
    return VisibilityTrace(lc_ratios, np.asarray(vis), "closed-form", "lc_over_lambda")


def threshold_find(trace: VisibilityTrace, cut: float = 0.05) -> float:
    """First abscissa where the visibility drops through ``cut``, as L_c/lambda."""
    x = trace.lc_over_lambda()
    v = trace.visibility
    for i in range(v.size - 1):
        if v[i] >= cut > v[i + 1]:
            return float(x[i] + (cut - v[i]) * (x[i + 1] - x[i]) / (v[i + 1] - v[i]))
    raise ValueError(f"no crossing of {cut:g} in the trace")


def sqrt2_mapping_check(upper: VisibilityTrace, lower: VisibilityTrace) -> float:
    """``max_f |upper(f) - lower(f / sqrt2)|`` over the overlapping range."""
    interp = PchipInterpolator(lower.abscissa, lower.visibility, extrapolate=False)
    f = upper.abscissa
    g = f / SQRT2
    ok = (g >= lower.abscissa[0]) & (g <= lower.abscissa[-1])
    if ok.sum() < 2:
        raise ValueError("traces do not overlap after the 1/sqrt(2) transform")
    return float(np.max(np.abs(upper.visibility[ok] - interp(g[ok]))))


# -- exact particle marginals -------------------------------------------------

def _factor_quadratic(f, x1: float, axis: str | None, t: float, hbar: float):
    """``log(factor)`` as ``P x^2 + Q x + R`` in scatterer coordinate ``axis``."""
    a = 0.0
    b = f.const
    for nm, coef in f.coef:
        if nm == "x1":
            b += coef * x1
        elif nm == axis:
            a = coef
        elif coef != 0.0:
            raise ValueError("factor couples two traced coordinates")
    phase0 = -f.mass * f.u0**2 * t / (2.0 * hbar)
    if f.spread == 0:
        return 0.0, 1j * a * f.u0, 1j * (b * f.u0 + phase0)
    s = SQRT2 * f.spread
    alpha = 1.0 / (2.0 * s * s) + 1j * f.mass * t / (2.0 * hbar)
    k0 = b - f.mass * f.u0 * t / hbar
    pref = np.sqrt(math.pi / alpha) / (math.sqrt(2.0 * math.pi) * s)
    P = -a * a / (4.0 * alpha)
    Q = 1j * a * f.u0 - 2.0 * a * k0 / (4.0 * alpha)
    R = np.log(pref) + 1j * (b * f.u0 + phase0) - k0 * k0 / (4.0 * alpha)
    return P, Q, R


def _term_forms(scenario: Scenario, term: Term, x1: float, traced: Sequence[str], t: float):
    forms = {ax: [0j, 0j, 0j] for ax in traced}
    const = complex(math.log(abs(term.sign))) + (1j * math.pi if term.sign < 0 else 0.0)
    for f in term.factors:
        axes = [a for a in f.axes if a != "x1"]
        ax = axes[0] if axes else None
        P, Q, R = _factor_quadratic(f, x1, ax, t, scenario.hbar)
        if ax is None:
            const += R
        else:
            forms[ax][0] += P
            forms[ax][1] += Q
            forms[ax][2] += R
    return forms, const


def particle_marginal(scenario: Scenario, x1: float = 0.0, t: float | None = None,
                      pairs: str = "all") -> float:
    """Joint PDF at particle position ``x1`` integrated over every scatterer coordinate.

    Each term is a product of complex Gaussians, one per scatterer coordinate,
    so every term-pair contributes a product of closed-form 1D integrals.
    ``pairs="diagonal"`` keeps only the per-term densities (the incoherent
    envelope used to detrend visibility scans).
    """
    t = scenario.time if t is None else t
    traced = [c for c in scenario.coordinates if c != "x1"]
    forms = [_term_forms(scenario, term, x1, traced, t) for term in build_terms(scenario)]
    total = 0.0
    for j, (fj, cj) in enumerate(forms):
        for k, (fk, ck) in enumerate(forms):
            if pairs == "diagonal" and j != k:
                continue
            log_val = cj + np.conj(ck)
            for ax in traced:
                P = fj[ax][0] + np.conj(fk[ax][0])
                Q = fj[ax][1] + np.conj(fk[ax][1])
                R = fj[ax][2] + np.conj(fk[ax][2])
                if P.real >= 0:
                    raise ValueError(f"coordinate {ax} is not normalizable (eigenstate scatterer?)")
                log_val += 0.5 * np.log(math.pi / -P) + R - Q * Q / (4.0 * P)
            total += np.exp(log_val).real
    return float(max(total, 0.0))


def particle_marginal_scan(scenario: Scenario, x1_values, t: float | None = None,
                           pairs: str = "all"):
    return np.array([particle_marginal(scenario, float(x), t, pairs) for x in x1_values])


def term_centers(scenario: Scenario, x1: float = 0.0) -> list[dict[str, float]]:
    """Envelope centers of each term in the scatterer coordinates at fixed ``x1`` (t = 0)."""
    traced = [c for c in scenario.coordinates if c != "x1"]
    out = []
    for term in build_terms(scenario):
        forms, _ = _term_forms(scenario, term, x1, traced, 0.0)
        out.append({ax: float((-forms[ax][1] / (2.0 * forms[ax][0])).real) for ax in traced})
    return out


def term_widths(scenario: Scenario, x1: float = 0.0) -> list[dict[str, float]]:
    """Standard deviation of each term's density along each scatterer coordinate (t = 0)."""
    traced = [c for c in scenario.coordinates if c != "x1"]
    out = []
    for term in build_terms(scenario):
        forms, _ = _term_forms(scenario, term, x1, traced, 0.0)
        out.append({ax: float(1.0 / math.sqrt(-4.0 * forms[ax][0].real)) for ax in traced})
    return out


# -- scans ---------------------------------------------------------------------

MODELS = ("one-scatterer", "two-scatterer")


@dataclass(frozen=True)
class Fig3Params:
    """Visibility-scan setup in natural units (lambda0 = 1 by default)."""

    mass_ratio: float = 1.0 / 1200.0
    x0: float = 5.0
    particle_lc_over_x0: float = 30.0
    wavelength: float = 1.0
    periods: int = 2
    samples_per_period: int = 64

    def scenario(self, model: str, fwhm_over_lambda: float) -> Scenario:
        lam = self.wavelength
        particle = natural_particle(lam, lc=self.particle_lc_over_x0 * self.x0)
        M = 1.0 / self.mass_ratio
        lc = fwhm_over_lambda * lam * LC_PER_FWHM
        far = natural_scatterer(M, self.x0, lc)
        if model == "one-scatterer":
            near = Body(mass=M, x0=0.0, label="beamsplitter")
        elif model == "two-scatterer":
            near = natural_scatterer(M, 0.0, lc)
        else:
            raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")
        return validate(Scenario(particle, (near, far)))

    def offsets(self) -> np.ndarray:
        period = self.wavelength / 2.0
        n = self.periods * self.samples_per_period
        return np.arange(n) * (period / self.samples_per_period)


def marginal_visibility(scenario: Scenario, params: Fig3Params, x1: float = 0.0) -> float:
    """Visibility of the particle marginal at ``x1`` as the separation is scanned."""
    base = scenario.separation
    d = params.offsets()
    vals, env = [], []
    for dx in d:
        s = scenario.with_separation(base + dx)
        vals.append(particle_marginal(s, x1))
        env.append(particle_marginal(s, x1, pairs="diagonal"))
    return visibility(vals, env, x=base + d, period=params.wavelength / 2.0)


def visibility_scan(model: str, fwhm_ratios, params: Fig3Params | None = None,
                    threads: int | None = None) -> VisibilityTrace:
    """Particle-marginal visibility versus scatterer FWHM/lambda."""
    params = params or Fig3Params()
    ratios = np.asarray(fwhm_ratios, dtype=float)
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")
    vis = ordered_map(lambda f: marginal_visibility(params.scenario(model, f), params),
                      ratios, threads)
    meta = {"params": dataclasses.asdict(params), "x1": 0.0, "scan": "separation"}
    return VisibilityTrace(ratios, np.asarray(vis), model, metadata=meta)


def _envelope_max(scenario: Scenario, x1: float) -> dict[str, float]:
    traced = [c for c in scenario.coordinates if c != "x1"]
    centers = term_centers(scenario, x1)
    start = np.mean([[c[a] for a in traced] for c in centers], axis=0)
    scale = np.array([min(w[a] for w in term_widths(scenario, x1)) for a in traced])

    def neg(u):
        coords = {"x1": x1, **{a: start[i] + scale[i] * u[i] for i, a in enumerate(traced)}}
        env = sum(np.abs(a) ** 2 for a in term_amplitudes(scenario, coords))
        return -float(np.log(env + 1e-300))

    best = min((minimize(neg, np.zeros(len(traced)) + off, method="Nelder-Mead",
                         options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
                for off in (0.0, -1.0, 1.0)), key=lambda r: r.fun)
    return {a: float(start[i] + scale[i] * best.x[i]) for i, a in enumerate(traced)}


def correlated_visibility(fwhm_over_lambda: float = 0.3, params: Fig3Params | None = None,
                          x1: float = 0.0) -> dict:
    """Joint-PDF visibility of the two-scatterer model with nothing traced out.

    The scatterer coordinates sit at the maximum of the incoherent joint
    envelope, measured from the scatterer peaks, while the separation is
    scanned over whole fringe periods.
    """
    params = params or Fig3Params()
    scen = params.scenario("two-scatterer", fwhm_over_lambda)
    peak = _envelope_max(scen, x1)
    rel = {a: peak[a] - scen.scatterers[i].x0
           for i, a in enumerate(scen.coordinate(i) for i in range(len(scen.scatterers)))}
    base = scen.separation
    vals, env = [], []
    for dx in params.offsets():
        s = scen.with_separation(base + dx)
        coords = {"x1": x1, **{a: s.scatterers[i].x0 + rel[a]
                               for i, a in enumerate(s.coordinate(i) for i in range(len(s.scatterers)))}}
        amps = term_amplitudes(s, coords)
        vals.append(float(np.abs(sum(amps)) ** 2))
        env.append(float(sum(np.abs(a) ** 2 for a in amps)))
    vis = visibility(vals, env, x=base + params.offsets(), period=params.wavelength / 2.0)
    return {"visibility": vis, "point": peak, "fwhm_over_lambda": fwhm_over_lambda}
