"""Exact 1D elastic-collision kinematics, interaction offsets, thermal formulas."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import H, K_B


@dataclass(frozen=True)
class ReflectionResult:
    v_r: float
    V_r: float
    k_r: float
    K_r: float


@dataclass(frozen=True)
class InteractionOffsets:
    """Phase offsets of the particle (``x10``) and scatterer (``x30``) after a
    delayed reflection from a scatterer initially ``x0`` away."""

    x10: float
    x30: float


def reflected_velocities(m, v, M, V):
    """Post-collision velocities; broadcasts over numpy arrays.

    ``M = inf`` is a rigid reflector moving at ``V``.
    """
    m, v, M, V = (np.asarray(a, dtype=float) for a in (m, v, M, V))
    if np.any(np.isinf(M)):
        rigid = np.isinf(M)
        Mf = np.where(rigid, 1.0, M)
        v_r = np.where(rigid, 2.0 * V - v, ((m - Mf) * v + 2.0 * Mf * V) / (m + Mf))
        V_r = np.where(rigid, V, ((Mf - m) * V + 2.0 * m * v) / (m + Mf))
    else:
        v_r = ((m - M) * v + 2.0 * M * V) / (m + M)
        V_r = ((M - m) * V + 2.0 * m * v) / (m + M)
    return v_r[()], V_r[()]


def reflect(m: float, v: float, M: float, V: float, hbar: float = 1.0) -> ReflectionResult:
    if m <= 0 or M <= 0:
        raise ValueError("masses must be positive")
    v_r, V_r = reflected_velocities(m, v, M, V)
    K_r = math.nan if math.isinf(M) else M * V_r / hbar
    return ReflectionResult(float(v_r), float(V_r), m * float(v_r) / hbar, K_r)


def reflected_wavevectors_printed(m, v, M, V, hbar=1.0):
    """Reflected wavevectors in the factored form printed for scatterer 2."""
    k_r = m * (2 * M * V - M * v + m * v) / (hbar * (M + m))
    K_r = M * (M * V - m * V + 2 * m * v) / (hbar * (M + m))
    return k_r, K_r


def offsets(m: float, M: float, x0: float) -> InteractionOffsets:
    if m <= 0 or M <= 0:
        raise ValueError("masses must be positive")
    if math.isinf(M):
        return InteractionOffsets(2.0 * x0, x0)
    return InteractionOffsets(2.0 * M * x0 / (m + M), (M - m) * x0 / (m + M))


def thermal_coherence_length(M: float, T: float) -> float:
    """``h / sqrt(2 M k_B T)`` in metres (SI inputs)."""
    if T <= 0:
        raise ValueError("temperature must be positive")
    if M <= 0:
        raise ValueError("mass must be positive")
    return H / math.sqrt(2.0 * M * K_B * T)


def thermal_velocity_spread(M: float, T: float) -> float:
    """``sqrt(2 k_B T / M)``, used as the Gaussian velocity width."""
    if T <= 0 or M <= 0:
        raise ValueError("mass and temperature must be positive")
    return math.sqrt(2.0 * K_B * T / M)


def mass_boundary(wavelength: float, T: float) -> float:
    """Largest scatterer mass (kg) that still erases the particle marginal
    fringes: ``2 h^2 / (lambda0^2 k_B T)``."""
    if wavelength <= 0 or T <= 0:
        raise ValueError("wavelength and temperature must be positive")
    return 2.0 * H**2 / (wavelength**2 * K_B * T)


def de_broglie_wavelength(m: float, v: float) -> float:
    """SI de Broglie wavelength ``h / (m v)``."""
    if v == 0:
        raise ValueError("wavelength undefined for zero velocity")
    return abs(H / (m * v))
