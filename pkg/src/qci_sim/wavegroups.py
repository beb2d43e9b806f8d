"""Gaussian wavegroups built from the reflected momentum eigenstates.

Every term of the scattered (or incident + reflected) state is a product of
plane waves whose phase is linear in each body's velocity, with a coefficient
that is itself linear in the coordinates::

    phase = sum_b c_b(x) * u_b - sum_b mass_b * u_b**2 * t / (2 hbar)

The time part is the same for every term because the collisions conserve
energy. The velocity superposition therefore factorizes into one 1D integral
per body, ``I_b(c_b(x))``, weighted by a Gaussian amplitude whose velocity
*probability* has standard deviation ``dv``. Those integrals are done by
Gauss-Hermite quadrature (``method="quadrature"``) or in closed form
(``method="analytic"``, exact complex-Gaussian integral).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Mapping, Sequence

import numpy as np
from scipy.special import roots_hermite

from .kinematics import offsets
from .parallel import chunks, ordered_map
from .scenario import Scenario

SQRT2 = math.sqrt(2.0)
_QUAD_BLOCK = 8192


class QuadratureConvergenceError(RuntimeError):
    def __init__(self, message: str, history: list[tuple[int, float]]):
        super().__init__(message)
        self.history = history


class GridResolutionWarning(UserWarning):
    pass


@dataclass(frozen=True)
class QuadratureSpec:
    """Gauss-Hermite settings. ``nodes`` is doubled until the largest change
    in the (unit-normalized) amplitude drops below ``tol``."""

    nodes: int = 64
    max_nodes: int = 512
    tol: float = 1e-12

    def __post_init__(self):
        if self.nodes < 8:
            raise ValueError("nodes_per_axis must be >= 8")
        if self.max_nodes < self.nodes:
            raise ValueError("max_nodes must be >= nodes")


@lru_cache(maxsize=None)
def hermite_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for ``E[f(Z)]``, ``Z ~ N(0, 1/2)``; read-only."""
    xi, w = roots_hermite(n)
    w = w / math.sqrt(math.pi)
    xi.flags.writeable = False
    w.flags.writeable = False
    return xi, w


def velocity_factor(c, mass: float, u0: float, spread: float, t: float = 0.0,
                    hbar: float = 1.0, method: str = "analytic", nodes: int = 64):
    """Gaussian-weighted velocity integral of ``exp(i c u - i mass u^2 t / 2 hbar)``.

    The weight is normalized, so the result is 1 at ``c = 0, t = 0``.
    """
    c = np.asarray(c, dtype=float)
    carrier = c * u0 - mass * u0**2 * t / (2.0 * hbar)
    if spread == 0:
        return np.exp(1j * carrier)
    s = SQRT2 * spread  # std of the amplitude weight
    q = c - mass * u0 * t / hbar
    chirp = mass * t / (2.0 * hbar)
    if method == "analytic":
        alpha = 1.0 / (2.0 * s * s) + 1j * chirp
        pref = np.sqrt(math.pi / alpha) / (math.sqrt(2.0 * math.pi) * s)
        return pref * np.exp(1j * carrier - q * q / (4.0 * alpha))
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    xi, w = hermite_rule(nodes)
    y = SQRT2 * s * xi
    flat_q = q.reshape(-1)
    out = np.empty(flat_q.shape, dtype=complex)
    for sl in chunks(flat_q.size, _QUAD_BLOCK):
        ph = np.multiply.outer(flat_q[sl], y) - chirp * y * y
        out[sl] = np.exp(1j * ph) @ w
    return np.exp(1j * carrier) * out.reshape(q.shape)


@dataclass(frozen=True)
class Factor:
    """One body's velocity integral inside a term; ``c = coef . x + const``."""

    body: int
    mass: float
    u0: float
    spread: float
    coef: tuple[tuple[str, float], ...]
    const: float

    @property
    def axes(self) -> tuple[str, ...]:
        return tuple(name for name, a in self.coef if a != 0.0)

    def c(self, coords: Mapping[str, Any]):
        out = self.const
        for name, a in self.coef:
            if a != 0.0:
                out = out + a * np.asarray(coords[name], dtype=float)
        return np.asarray(out, dtype=float)

    def value(self, coords, t, hbar, method="analytic", nodes=64):
        return velocity_factor(self.c(coords), self.mass, self.u0, self.spread, t, hbar,
                               method, nodes)


@dataclass(frozen=True)
class Term:
    name: str
    sign: float
    factors: tuple[Factor, ...]

    @property
    def axes(self) -> tuple[str, ...]:
        seen: list[str] = []
        for f in self.factors:
            seen += [a for a in f.axes if a not in seen]
        return tuple(seen)


def _linear(coef: Mapping[str, float], shift: Mapping[str, float]):
    """``sum coef[n] * (x_n - shift[n])`` as (coef tuple, constant)."""
    const = -sum(a * shift.get(n, 0.0) for n, a in coef.items())
    return tuple(coef.items()), const


def _reflection_factors(scenario: Scenario, j: int) -> list[Factor]:
    """Particle and scatterer-j factors after the particle reflects from j."""
    hb = scenario.hbar
    p, s = scenario.particle, scenario.scatterers[j]
    m = p.mass
    xj = scenario.coordinate(j)
    d = s.x0 - p.x0
    if s.rigid:
        x10 = 2.0 * d
        coef, const = _linear({"x1": -m / hb}, {"x1": p.x0 + x10})
        return [Factor(0, m, p.v0, p.dv, coef, const)]
    M = s.mass
    off = offsets(m, M, d)
    shift = {"x1": p.x0 + off.x10, xj: p.x0 + off.x30}
    den = (m + M) * hb
    pc, pk = _linear({"x1": m * (m - M) / den, xj: 2.0 * m * M / den}, shift)
    sc, sk = _linear({"x1": 2.0 * m * M / den, xj: M * (M - m) / den}, shift)
    return [Factor(0, m, p.v0, p.dv, pc, pk), Factor(j + 1, M, s.v0, s.dv, sc, sk)]


def _free_factor(scenario: Scenario, j: int) -> Factor:
    s = scenario.scatterers[j]
    xj = scenario.coordinate(j)
    coef, const = _linear({xj: s.mass / scenario.hbar}, {xj: s.x0})
    return Factor(j + 1, s.mass, s.v0, s.dv, coef, const)


def build_terms(scenario: Scenario) -> tuple[Term, ...]:
    """Terms of the state whose modulus squared is the joint PDF.

    Mirror scenarios keep the incident term and subtract the reflected one
    (the pair vanishes at contact). Otherwise only the scattered terms are
    kept, one per scatterer, with equal weights.
    """
    if scenario.has_mirror:
        p = scenario.particle
        coef, const = _linear({"x1": p.mass / scenario.hbar}, {"x1": p.x0})
        incident = Term("incident", 1.0, (Factor(0, p.mass, p.v0, p.dv, coef, const),
                                          _free_factor(scenario, 0)))
        reflected = Term("reflected", -1.0, tuple(_reflection_factors(scenario, 0)))
        return incident, reflected
    terms = []
    for j, s in enumerate(scenario.scatterers):
        factors = _reflection_factors(scenario, j)
        factors += [_free_factor(scenario, k) for k, o in enumerate(scenario.scatterers)
                    if k != j and not o.rigid]
        terms.append(Term(f"reflect:{scenario.coordinate(j)}", -1.0, tuple(factors)))
    return tuple(terms)


def _check_coords(scenario: Scenario, coords: Mapping[str, Any]) -> None:
    missing = [n for n in scenario.coordinates if n not in coords]
    if missing:
        raise KeyError(f"missing coordinates {missing}; scenario needs {list(scenario.coordinates)}")


def term_amplitudes(scenario: Scenario, coords: Mapping[str, Any], t: float | None = None,
                    method: str = "analytic", nodes: int = 64) -> list[np.ndarray]:
    _check_coords(scenario, coords)
    t = scenario.time if t is None else t
    out = []
    for term in build_terms(scenario):
        a = term.sign
        for f in term.factors:
            a = a * f.value(coords, t, scenario.hbar, method, nodes)
        out.append(np.asarray(a, dtype=complex))
    return out


def _amplitude_fixed(scenario, coords, t, method, nodes):
    amps = term_amplitudes(scenario, coords, t, method, nodes)
    total = amps[0]
    for a in amps[1:]:
        total = total + a
    return total


def amplitude(scenario: Scenario, coords: Mapping[str, Any], t: float | None = None,
              method: str = "analytic", quad: QuadratureSpec | None = None):
    """Superposed wavegroup amplitude at the given coordinates (broadcast)."""
    if method == "analytic":
        return _amplitude_fixed(scenario, coords, t, method, 0)
    quad = quad or QuadratureSpec()
    history: list[tuple[int, float]] = []
    n = quad.nodes
    prev = _amplitude_fixed(scenario, coords, t, "quadrature", n)
    while 2 * n <= quad.max_nodes:
        n *= 2
        cur = _amplitude_fixed(scenario, coords, t, "quadrature", n)
        change = float(np.max(np.abs(cur - prev))) if cur.size else 0.0
        history.append((n, change))
        if change <= quad.tol:
            return cur
        prev = cur
    raise QuadratureConvergenceError(
        f"quadrature did not converge to {quad.tol:g} within {quad.max_nodes} nodes", history)


def joint_pdf(scenario: Scenario, coords: Mapping[str, Any], t: float | None = None,
              method: str = "analytic", quad: QuadratureSpec | None = None):
    """Raw joint PDF ``|amplitude|^2``."""
    return np.abs(amplitude(scenario, coords, t, method, quad)) ** 2


def wavegroup_pdf(scenario: Scenario, point: Mapping[str, Any], t: float | None = None,
                  quad: QuadratureSpec | None = None):
    """Joint PDF by Gauss-Hermite quadrature with node doubling."""
    val = joint_pdf(scenario, point, t, "quadrature", quad)
    return float(val) if np.ndim(val) == 0 else val


def incoherent_envelope(scenario: Scenario, coords, t=None, method="analytic"):
    """Sum of the per-term densities: the joint PDF with interference removed."""
    return sum(np.abs(a) ** 2 for a in term_amplitudes(scenario, coords, t, method))


# -- closed forms -----------------------------------------------------------

def closed_form_bs_pdf(x3, m: float, M3: float, v0: float, dv: float, dV3: float, x0: float,
                       hbar: float = 1.0):
    """Beamsplitter-plus-scatterer PDF at t = 0, V30 = 0, to first order in m/M3.

    ``exp(-A) + exp(-B) + 2 exp(-C) cos(2 m v0 x3 / hbar)`` with
    ``C = (A + B) / 2``; the result is the modulus squared of the two
    reflected amplitudes seen with the particle at the beamsplitter.
    """
    x3 = np.asarray(x3, dtype=float)
    h2 = hbar * hbar
    A = 2.0 * dV3**2 * M3**2 * (x3 - x0) ** 2 / h2
    B = 2.0 * ((2.0 * m * x3 * dv) ** 2 + dV3**2 * (M3 * x0 + 2.0 * m * x3 - M3 * x3) ** 2) / h2
    C = 2.0 * (2.0 * (m * x3 * dv) ** 2
               + dV3**2 * (M3**2 * (x0 - x3) ** 2 + 2.0 * m * M3 * (x0 - x3) * x3
                           + 2.0 * m**2 * x3**2)) / h2
    return np.exp(-A) + np.exp(-B) + 2.0 * np.exp(-C) * np.cos(2.0 * m * v0 * x3 / hbar)


def bs_parameters(scenario: Scenario) -> dict[str, float]:
    """Arguments of :func:`closed_form_bs_pdf` for a beamsplitter scenario."""
    sc = scenario.scatterers
    if len(sc) != 2 or not sc[0].rigid or sc[1].rigid:
        raise ValueError("need [beamsplitter, scatterer]")
    if sc[0].x0 != 0.0 or scenario.particle.x0 != 0.0:
        raise ValueError("closed form assumes the beamsplitter and particle at the origin")
    if sc[1].v0 != 0.0:
        raise ValueError("closed form assumes the scatterer at rest (V30 = 0)")
    p, s = scenario.particle, sc[1]
    return dict(m=p.mass, M3=s.mass, v0=p.v0, dv=p.dv, dV3=s.dv, x0=s.x0, hbar=scenario.hbar)


def eq6_pdf(x3, wavelength: float, lc: float, x0: float):
    """Heavy-scatterer beamsplitter PDF: Gaussian envelope times ``cos^2(2 pi x3 / lambda)``."""
    if lc <= 0:
        raise ValueError("coherence length must be positive")
    x3 = np.asarray(x3, dtype=float)
    env = np.exp(-8.0 * math.pi**2 * (x3 - x0) ** 2 / lc**2) / math.sqrt(lc)
    return env * np.cos(2.0 * math.pi * x3 / wavelength) ** 2


# -- grids --------------------------------------------------------------------

@dataclass
class PdfField:
    """PDF samples on a rectilinear grid; ``values.shape`` follows ``axes``."""

    axes: tuple[tuple[str, np.ndarray], ...]
    values: np.ndarray
    normalization: str = "raw"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        shape = tuple(len(a) for _, a in self.axes)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != shape:
            raise ValueError(f"values shape {self.values.shape} does not match axes {shape}")
        if np.any(self.values < 0):
            raise ValueError("PDF values must be non-negative")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.axes)

    def axis(self, name: str) -> np.ndarray:
        for n, a in self.axes:
            if n == name:
                return a
        raise KeyError(name)

    def total(self) -> float:
        from scipy.integrate import simpson

        v = self.values
        for _, a in reversed(self.axes):
            v = simpson(v, x=a, axis=-1)
        return float(v)

    def normalized(self) -> "PdfField":
        """Copy scaled to integrate to 1 over the grid window."""
        return PdfField(self.axes, self.values / self.total(), "window", dict(self.metadata))


def evaluate_grid(scenario: Scenario, axes: Sequence[tuple[str, Sequence[float]]],
                  fixed: Mapping[str, float] | None = None, t: float | None = None,
                  method: str = "analytic", quad: QuadratureSpec | None = None,
                  threads: int | None = None, rows_per_chunk: int = 8) -> PdfField:
    """Joint PDF on the tensor grid of ``axes``; other coordinates from ``fixed``.

    Rows of the first axis are evaluated in fixed-size chunks, in parallel,
    and assembled in index order.
    """
    axes = tuple((n, np.asarray(a, dtype=float)) for n, a in axes)
    if not axes or any(a.size == 0 for _, a in axes):
        raise ValueError("grid is empty")
    fixed = dict(fixed or {})
    names = [n for n, _ in axes]
    if len(set(names)) != len(names):
        raise ValueError("duplicate axis")
    t = scenario.time if t is None else t
    first = axes[0][1]

    def work(sl: slice):
        mesh = np.meshgrid(first[sl], *(a for _, a in axes[1:]), indexing="ij")
        coords = dict(fixed)
        coords.update(zip(names, mesh))
        return joint_pdf(scenario, coords, t, method, quad)

    parts = ordered_map(work, chunks(first.size, rows_per_chunk), threads)
    values = np.concatenate(parts, axis=0)
    meta = {"scenario": scenario.digest(), "time": t, "fixed": fixed, "method": method}
    return PdfField(axes, values, "raw", meta)


def two_body_mirror_pdf(scenario: Scenario, x1, x2, t: float | None = None,
                        method: str = "analytic", threads: int | None = None) -> PdfField:
    """Particle-mirror joint PDF (incident plus reflected wavegroups) on a grid."""
    if not scenario.has_mirror:
        raise ValueError("scenario has no mirror")
    x1, x2 = np.asarray(x1, dtype=float), np.asarray(x2, dtype=float)
    lam = scenario.wavelength
    for name, a in (("x1", x1), ("x2", x2)):
        if a.size > 1:
            step = float(np.max(np.abs(np.diff(a))))
            if step > lam / 8:
                span = float(a.max() - a.min())
                warnings.warn(f"{name} spacing {step:g} under-resolves the {lam / 2:g} fringes; "
                              f"use at least {math.ceil(8 * span / lam) + 1} samples",
                              GridResolutionWarning, stacklevel=2)
    return evaluate_grid(scenario, (("x1", x1), ("x2", x2)), t=t, method=method, threads=threads)


# -- Gaussian envelope algebra ------------------------------------------------

def _log_magnitude_form(scenario: Scenario, term: Term, t: float, names: Sequence[str]):
    """``log|term| = -x.Q.x + b.x + c`` over the coordinates ``names``."""
    n = len(names)
    idx = {nm: i for i, nm in enumerate(names)}
    Q = np.zeros((n, n))
    b = np.zeros(n)
    c = 0.0
    hb = scenario.hbar
    for f in term.factors:
        if f.spread == 0:
            continue
        s = SQRT2 * f.spread
        alpha = 1.0 / (2.0 * s * s) + 1j * f.mass * t / (2.0 * hb)
        rho = (1.0 / (4.0 * alpha)).real
        c += math.log(abs(np.sqrt(math.pi / alpha)) / (math.sqrt(2.0 * math.pi) * s))
        a = np.zeros(n)
        for nm, coef in f.coef:
            if coef != 0.0:
                a[idx[nm]] = coef
        k0 = f.const - f.mass * f.u0 * t / hb
        Q += rho * np.outer(a, a)
        b += -2.0 * rho * k0 * a
        c += -rho * k0 * k0
    return Q, b, c


def _gauss_log_integral(Q, b, c) -> float:
    sign, logdet = np.linalg.slogdet(Q)
    if sign <= 0:
        raise ValueError("envelope is not integrable (an eigenstate body or degenerate lobe)")
    n = len(b)
    return 0.5 * (n * math.log(math.pi) - logdet) + 0.25 * float(b @ np.linalg.solve(Q, b)) + c


def lobe_overlap(scenario: Scenario, i: int = 0, j: int = 1, t: float | None = None) -> dict:
    """Overlap of the envelopes of terms ``i`` and ``j`` in configuration space.

    Returns ``overlap = int|a||b| / sqrt(int|a|^2 int|b|^2)`` and the global
    fringe visibility ``2 int|a||b| / (int|a|^2 + int|b|^2)``, the contrast
    left in the joint PDF once it is summed over the whole configuration space
    along the fringes.
    """
    t = scenario.time if t is None else t
    terms = build_terms(scenario)
    names = scenario.coordinates
    Qa, ba, ca = _log_magnitude_form(scenario, terms[i], t, names)
    Qb, bb, cb = _log_magnitude_form(scenario, terms[j], t, names)
    cross = _gauss_log_integral(Qa + Qb, ba + bb, ca + cb)
    na = _gauss_log_integral(2 * Qa, 2 * ba, 2 * ca)
    nb = _gauss_log_integral(2 * Qb, 2 * bb, 2 * cb)
    overlap = math.exp(cross - 0.5 * (na + nb))
    m = max(na, nb)
    vis = 2.0 * math.exp(cross - m) / (math.exp(na - m) + math.exp(nb - m))
    return {"overlap": overlap, "joint_visibility": vis, "norms": (math.exp(na), math.exp(nb))}
