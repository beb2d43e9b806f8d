"""Physical configurations, unit conventions and single-body derived quantities.

Natural units (hbar = 1) are the default. SI mode is meant for the thermal and
mass-bound formulas, where laboratory-scale numbers live.

Scenario files are JSON::

    {
      "schema": 1,
      "units": "natural",                 # or "SI"
      "description": "...",               # optional, free text
      "particle":   {"mass": 1, "v0": 6.283, "dv": 0.05, "x0": 0},
      "scatterers": [{"mass": 1200, "coherence_length": 0.3, "x0": 0,
                      "label": "scatterer"}, ...],
      "separation": 5.0,                  # optional
      "time": 0.0                         # optional
    }

Body keys are ``mass``, ``v0``, ``dv``, ``x0``, ``label`` and
``coherence_length``. ``coherence_length`` is an alternative to ``dv``;
giving both is an error. When ``separation`` is present, scatterer ``i``
without an explicit ``x0`` is placed at ``i * separation``. Unknown keys are
rejected.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Sequence

from .constants import FWHM_PER_SIGMA, HBAR, LC_PER_SIGMA

SCHEMA_VERSION = 1
MAX_SCATTERERS = 3
LABELS = ("particle", "scatterer", "mirror", "beamsplitter")
UNITS = ("natural", "SI")

_BODY_KEYS = {"mass", "v0", "dv", "x0", "label", "coherence_length"}
_TOP_KEYS = {"schema", "units", "description", "particle", "scatterers", "separation", "time"}


class ScenarioError(ValueError):
    """Raised when a scenario violates one or more invariants."""

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class Body:
    """One participant: the particle, a scatterer, a mirror or a beamsplitter.

    ``dv`` is the standard deviation of the velocity probability distribution;
    ``dv == 0`` means a momentum eigenstate. A beamsplitter is a rigid
    potential: its mass and spread never enter a velocity integral.
    """

    mass: float
    v0: float = 0.0
    dv: float = 0.0
    x0: float = 0.0
    label: str = "scatterer"

    @property
    def rigid(self) -> bool:
        return self.label == "beamsplitter"

    @property
    def eigenstate(self) -> bool:
        return self.dv == 0.0

    def replace(self, **changes) -> "Body":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class GaussianSpec:
    """Position-space widths of a minimum-uncertainty wavegroup at t = 0.

    ``sigma_x`` is the standard deviation of the position PDF. ``lc`` is the
    coherence length, fixed at ``4*pi*sigma_x``; ``fwhm`` is the PDF FWHM.
    All three are ``inf`` for a momentum eigenstate.
    """

    sigma_x: float
    fwhm: float
    lc: float

    @property
    def eigenstate(self) -> bool:
        return math.isinf(self.sigma_x)


@dataclass(frozen=True)
class Scenario:
    particle: Body
    scatterers: tuple[Body, ...]
    units: str = "natural"
    time: float = 0.0
    description: str = field(default="", compare=False)

    @property
    def hbar(self) -> float:
        return 1.0 if self.units == "natural" else HBAR

    @property
    def separation(self) -> float:
        """Distance from the first to the last scatterer peak."""
        if len(self.scatterers) < 2:
            return 0.0
        return self.scatterers[-1].x0 - self.scatterers[0].x0

    @property
    def wavelength(self) -> float:
        return wavelength(self.particle, self.hbar)

    @property
    def has_mirror(self) -> bool:
        return any(s.label == "mirror" for s in self.scatterers)

    def coordinate(self, index: int) -> str:
        """Coordinate name of scatterer ``index`` (the particle is ``x1``)."""
        return f"x{index + 2}"

    @property
    def coordinates(self) -> tuple[str, ...]:
        """Names of the coordinates the joint PDF depends on."""
        names = ["x1"]
        names += [self.coordinate(i) for i, s in enumerate(self.scatterers) if not s.rigid]
        return tuple(names)

    def with_separation(self, x0: float) -> "Scenario":
        """Copy with the last scatterer moved to ``first.x0 + x0``."""
        first = self.scatterers[0]
        moved = self.scatterers[-1].replace(x0=first.x0 + x0)
        return dataclasses.replace(self, scatterers=self.scatterers[:-1] + (moved,))

    def with_time(self, t: float) -> "Scenario":
        return dataclasses.replace(self, time=t)

    def to_dict(self) -> dict[str, Any]:
        def body(b: Body) -> dict[str, Any]:
            return {"mass": b.mass, "v0": b.v0, "dv": b.dv, "x0": b.x0, "label": b.label}

        out: dict[str, Any] = {
            "schema": SCHEMA_VERSION,
            "units": self.units,
            "particle": body(self.particle),
            "scatterers": [body(s) for s in self.scatterers],
            "time": self.time,
        }
        if self.description:
            out["description"] = self.description
        return out

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form; used to tag outputs."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _finite(name: str, value: Any, errors: list[str]) -> bool:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        errors.append(f"{name} must be a number")
        return False
    if not math.isfinite(value):
        errors.append(f"{name} must be finite")
        return False
    return True


def _check_body(name: str, b: Body, errors: list[str]) -> None:
    for attr in ("mass", "v0", "dv", "x0"):
        _finite(f"{name}.{attr}", getattr(b, attr), errors)
    if isinstance(b.mass, (int, float)) and math.isfinite(b.mass) and b.mass <= 0:
        errors.append(f"{name}: mass must be positive")
    if isinstance(b.dv, (int, float)) and math.isfinite(b.dv) and b.dv < 0:
        errors.append(f"{name}: velocity spread must be non-negative")
    if b.label not in LABELS:
        errors.append(f"{name}: unknown label {b.label!r}")


def validate(scenario: Scenario) -> Scenario:
    """Check every invariant; return the scenario or raise :class:`ScenarioError`.

    All violations are collected before raising.
    """
    errors: list[str] = []
    if scenario.units not in UNITS:
        errors.append(f"units must be one of {UNITS}, got {scenario.units!r}")
    _finite("time", scenario.time, errors)
    _check_body("particle", scenario.particle, errors)
    if scenario.particle.label != "particle":
        errors.append("particle must carry the label 'particle'")
    n = len(scenario.scatterers)
    if n == 0:
        errors.append("at least 1 scatterer required")
    if n > MAX_SCATTERERS:
        errors.append(f"at most {MAX_SCATTERERS} scatterers supported")
    for i, s in enumerate(scenario.scatterers):
        _check_body(f"scatterers[{i}]", s, errors)
        if s.label == "particle":
            errors.append(f"scatterers[{i}]: label 'particle' is reserved")
    if scenario.has_mirror and n != 1:
        errors.append("a mirror scenario has exactly one scatterer")
    if sum(s.rigid for s in scenario.scatterers) > 1:
        errors.append("at most one beamsplitter supported")
    if errors:
        raise ScenarioError(errors)
    return scenario


def wavelength(body: Body, hbar: float = 1.0) -> float:
    """de Broglie wavelength ``2*pi*hbar / (m*v0)``."""
    if body.v0 == 0:
        raise ValueError("wavelength undefined for zero velocity")
    return abs(2.0 * math.pi * hbar / (body.mass * body.v0))


def gaussian_from_sigma(sigma: float) -> GaussianSpec:
    return GaussianSpec(sigma_x=sigma, fwhm=FWHM_PER_SIGMA * sigma, lc=LC_PER_SIGMA * sigma)


def coherence_from_velocity_spread(body: Body, hbar: float = 1.0) -> GaussianSpec:
    """Position widths of a minimum-uncertainty packet with velocity spread ``dv``."""
    if body.dv == 0:
        return GaussianSpec(math.inf, math.inf, math.inf)
    return gaussian_from_sigma(hbar / (2.0 * body.mass * body.dv))


def velocity_spread(mass: float, *, sigma: float | None = None, fwhm: float | None = None,
                    lc: float | None = None, hbar: float = 1.0) -> float:
    """Inverse of :func:`coherence_from_velocity_spread`; give exactly one width."""
    given = [w for w in (sigma, fwhm, lc) if w is not None]
    if len(given) != 1:
        raise ValueError("give exactly one of sigma, fwhm, lc")
    if sigma is None:
        sigma = fwhm / FWHM_PER_SIGMA if fwhm is not None else lc / LC_PER_SIGMA
    if math.isinf(sigma):
        return 0.0
    if sigma <= 0:
        raise ValueError("width must be positive")
    return hbar / (2.0 * mass * sigma)


def position_spec(scenario: Scenario, body: Body) -> GaussianSpec:
    return coherence_from_velocity_spread(body, scenario.hbar)


# -- construction helpers ----------------------------------------------------

def natural_particle(wavelength: float = 1.0, lc: float | None = None, mass: float = 1.0) -> Body:
    """Particle in natural units with the given de Broglie wavelength."""
    v0 = 2.0 * math.pi / (mass * wavelength)
    dv = 0.0 if lc is None else velocity_spread(mass, lc=lc)
    return Body(mass=mass, v0=v0, dv=dv, x0=0.0, label="particle")


def natural_scatterer(mass: float, x0: float = 0.0, lc: float | None = None,
                      label: str = "scatterer") -> Body:
    dv = 0.0 if lc is None else velocity_spread(mass, lc=lc)
    return Body(mass=mass, v0=0.0, dv=dv, x0=x0, label=label)


def _body_from_dict(name: str, d: Any, units: str, default_label: str,
                    errors: list[str]) -> Body | None:
    if not isinstance(d, dict):
        errors.append(f"{name} must be an object")
        return None
    unknown = set(d) - _BODY_KEYS
    if unknown:
        errors.append(f"{name}: unknown keys {sorted(unknown)}")
    if "mass" not in d:
        errors.append(f"{name}: mass is required")
        return None
    if "dv" in d and "coherence_length" in d:
        errors.append(f"{name}: give dv or coherence_length, not both")
    mass = d["mass"]
    dv = d.get("dv", 0.0)
    if "coherence_length" in d:
        lc = d["coherence_length"]
        if _finite(f"{name}.coherence_length", lc, errors) and _finite(f"{name}.mass", mass, errors):
            if lc <= 0 or mass <= 0:
                errors.append(f"{name}: coherence_length and mass must be positive")
            else:
                dv = velocity_spread(mass, lc=lc, hbar=1.0 if units == "natural" else HBAR)
    return Body(mass=mass, v0=d.get("v0", 0.0), dv=dv, x0=d.get("x0", 0.0),
                label=d.get("label", default_label))


def from_dict(doc: Any) -> Scenario:
    """Build and validate a scenario from its JSON document form."""
    errors: list[str] = []
    if not isinstance(doc, dict):
        raise ScenarioError(["scenario document must be a JSON object"])
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        errors.append(f"unknown keys {sorted(unknown)}")
    schema = doc.get("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        errors.append(f"unsupported schema {schema!r}; expected {SCHEMA_VERSION}")
    units = doc.get("units", "natural")
    for key in ("particle", "scatterers"):
        if key not in doc:
            errors.append(f"{key} is required")
    if errors:
        raise ScenarioError(errors)

    particle = _body_from_dict("particle", doc["particle"], units, "particle", errors)
    raw = doc["scatterers"]
    if not isinstance(raw, list):
        raise ScenarioError(errors + ["scatterers must be a list"])
    sep = doc.get("separation")
    if sep is not None:
        _finite("separation", sep, errors)
    scatterers = []
    for i, d in enumerate(raw):
        b = _body_from_dict(f"scatterers[{i}]", d, units, "scatterer", errors)
        if b is None:
            continue
        if isinstance(sep, (int, float)) and isinstance(d, dict) and "x0" not in d:
            b = b.replace(x0=i * sep)
        scatterers.append(b)
    if errors:
        raise ScenarioError(errors)
    scen = Scenario(particle=particle, scatterers=tuple(scatterers), units=units,
                    time=doc.get("time", 0.0), description=doc.get("description", ""))
    if sep is not None and len(scatterers) >= 2 and not math.isclose(
            scen.separation, sep, rel_tol=1e-12, abs_tol=1e-15):
        raise ScenarioError([f"separation {sep} disagrees with scatterer positions"])
    return validate(scen)


def load_scenario(path: str | Path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError([f"invalid JSON: {exc}"]) from exc
    return from_dict(doc)


def list_presets() -> list[str]:
    root = resources.files("qci_sim") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def preset_document(name: str) -> dict[str, Any]:
    path = resources.files("qci_sim") / "presets" / f"{name}.json"
    if not path.is_file():
        raise ScenarioError([f"unknown preset {name!r}; available: {', '.join(list_presets())}"])
    return json.loads(path.read_text(encoding="utf-8"))


def load_preset(name: str) -> Scenario:
    return from_dict(preset_document(name))


def iter_bodies(scenario: Scenario) -> Iterable[tuple[str, Body]]:
    yield "x1", scenario.particle
    for i, s in enumerate(scenario.scatterers):
        yield scenario.coordinate(i), s
