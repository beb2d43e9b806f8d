"""Joint and marginal PDFs for a particle retro-reflecting from movable scatterers."""

from .scenario import Body, Scenario, ScenarioError, load_preset, load_scenario, validate

__version__ = "0.1.0"

__all__ = ["Body", "Scenario", "ScenarioError", "load_preset", "load_scenario", "validate",
           "__version__"]
