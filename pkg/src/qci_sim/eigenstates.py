"""Joint PDFs of momentum-eigenstate bodies.

These PDFs are not normalizable; every function returns raw ``cos^2``-type
values and leaves normalization over a window to :mod:`qci_sim.analysis`.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .scenario import Scenario

HEAVY_RATIO = 1e3


class HeavyLimitWarning(UserWarning):
    """A heavy-scatterer formula was used with M/m below the advisory cutoff."""


def _two_scatterers(scenario: Scenario):
    if len(scenario.scatterers) != 2:
        raise ValueError(f"need exactly 2 scatterers, scenario has {len(scenario.scatterers)}")
    if any(s.rigid for s in scenario.scatterers):
        raise ValueError("eigenstate joint PDFs need two movable scatterers")
    return scenario.scatterers


def _check_heavy(m: float, masses: Iterable[float]) -> None:
    ratio = min(masses) / m
    if ratio < 1.0:
        raise ValueError("heavy-limit formulas need scatterers at least as heavy as the particle")
    if ratio < HEAVY_RATIO:
        warnings.warn(f"M/m = {ratio:g} is below {HEAVY_RATIO:g}; heavy-limit form is approximate",
                      HeavyLimitWarning, stacklevel=3)


def exact_phase(scenario: Scenario, x1, x2, x3):
    """Half the phase difference between the two scattered three-body
    eigenstates, ``A/B``; linear in every coordinate."""
    s2, s3 = _two_scatterers(scenario)
    m, v = scenario.particle.mass, scenario.particle.v0
    M2, V2, M3, V3 = s2.mass, s2.v0, s3.mass, s3.v0
    x1, x2, x3 = (np.asarray(a, dtype=float) for a in (x1, x2, x3))
    dV12, dx12 = v - V2, x1 - x2
    dV13, dx13 = v - V3, x1 - x3
    A = (dV12 * dx12 * m**2 * M2 - dV13 * dx13 * m**2 * M3
         + m * M2 * M3 * (V3 * x1 - v * x2 - V2 * dx12 + dV13 * x3))
    B = scenario.hbar * (m + M2) * (m + M3)
    return A / B


def joint_pdf_exact(scenario: Scenario, x1, x2, x3):
    """``cos^2(A/B)`` for a particle and two free scatterers, all eigenstates."""
    if scenario.particle.dv or any(s.dv for s in scenario.scatterers):
        raise ValueError("joint_pdf_exact needs momentum eigenstates (dv = 0)")
    return np.cos(exact_phase(scenario, x1, x2, x3)) ** 2


def joint_pdf_heavy(scenario: Scenario, x2, x3):
    """Heavy-scatterer limit ``cos^2(m v (x3 - x2) / hbar)``; independent of x1."""
    s2, s3 = _two_scatterers(scenario)
    m, v = scenario.particle.mass, scenario.particle.v0
    _check_heavy(m, (s2.mass, s3.mass))
    x2, x3 = np.asarray(x2, dtype=float), np.asarray(x3, dtype=float)
    return np.cos(m * v * (x3 - x2) / scenario.hbar) ** 2


def joint_pdf_offset(scenario: Scenario, dx2, dx3):
    """Heavy limit written in displacements from the scatterer peaks."""
    s2, s3 = _two_scatterers(scenario)
    m, v = scenario.particle.mass, scenario.particle.v0
    _check_heavy(m, (s2.mass, s3.mass))
    x0 = scenario.separation
    dx2, dx3 = np.asarray(dx2, dtype=float), np.asarray(dx3, dtype=float)
    return np.cos(m * v * (x0 + dx3 - dx2) / scenario.hbar) ** 2


def classical_scatterer_pdf(scenario: Scenario) -> float:
    """``cos^2(m v x0 / hbar)``: both scatterers pinned at their peaks."""
    return float(joint_pdf_offset(scenario, 0.0, 0.0))


SCATTERER_INDICES = (2, 3, 4)
ALL_PAIRS = tuple(itertools.combinations(SCATTERER_INDICES, 2))


@dataclass(frozen=True)
class FourBodyPdf:
    """``3 + 2 * sum(cos a_jk)`` over the pairs still present.

    ``a_jk = m v (x_jk + dx_k - dx_j) / hbar`` with ``x_jk = x0_j - x0_k``.
    Scatterers are indexed 2, 3, 4. Tracing a scatterer out removes every
    pair that contains it; the constant stays at 3 because traces here are
    averages over whole fringe periods.
    """

    positions: tuple[float, float, float]
    m: float
    v: float
    hbar: float = 1.0
    pairs: tuple[tuple[int, int], ...] = ALL_PAIRS
    constant: float = 3.0
    traced: frozenset = field(default_factory=frozenset)

    @property
    def k(self) -> float:
        return self.m * self.v / self.hbar

    @property
    def period(self) -> float:
        """Displacement period of every ``cos a_jk`` term."""
        return 2.0 * math.pi / abs(self.k)

    def phase(self, j: int, k: int, displacements: Mapping[int, np.ndarray]):
        x0 = dict(zip(SCATTERER_INDICES, self.positions))
        dj = np.asarray(displacements.get(j, 0.0), dtype=float)
        dk = np.asarray(displacements.get(k, 0.0), dtype=float)
        return self.k * (x0[j] - x0[k] + dk - dj)

    def __call__(self, dx2=0.0, dx3=0.0, dx4=0.0):
        d = {2: dx2, 3: dx3, 4: dx4}
        out = np.full(np.broadcast(*(np.asarray(a) for a in d.values())).shape, self.constant)
        for j, k in self.pairs:
            out = out + 2.0 * np.cos(self.phase(j, k, d))
        return out[()] if out.ndim == 0 else out


def joint_pdf_fourbody(positions, displacements, m: float, v: float, hbar: float = 1.0):
    """Particle plus three identical heavy scatterers."""
    pdf = FourBodyPdf(tuple(float(p) for p in positions), m, v, hbar)
    return pdf(*displacements)


def trace_fourbody(pdf: FourBodyPdf, open_scatterers: Iterable[int],
                   spans: Mapping[int, float] | None = None) -> FourBodyPdf:
    """Analytic trace over the displacements of ``open_scatterers``.

    Each open scatterer must be integrated over at least one full period;
    pass ``spans`` to have that checked.
    """
    open_set = frozenset(open_scatterers)
    bad = open_set - set(SCATTERER_INDICES)
    if bad:
        raise ValueError(f"unknown scatterer indices {sorted(bad)}")
    for j, span in (spans or {}).items():
        if j in open_set and span < pdf.period * (1 - 1e-12):
            raise ValueError(f"scatterer {j} spans {span:g}, less than one period {pdf.period:g}")
    pairs = tuple(p for p in pdf.pairs if not (set(p) & open_set))
    return FourBodyPdf(pdf.positions, pdf.m, pdf.v, pdf.hbar, pairs, pdf.constant,
                       pdf.traced | open_set)
