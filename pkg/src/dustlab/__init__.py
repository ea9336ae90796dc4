"""Lagrangian simulation and analytic blowup certification for
pressureless self-gravitating dust with a background constant."""

from .core import (Geometry, LagrangianMarker, NumericalSettings, Scenario,
                   Trajectory, ValidatedScenario, initial_vorticity_satisfied,
                   load_scenario, validate_scenario)
from .geometry1d import integrate_slab
from .radial import integrate_radial

__version__ = "0.1.0"


def simulate(scenario) -> Trajectory:
    """Integrate a validated scenario in its own geometry."""
    vs = validate_scenario(scenario)
    if vs.geometry is Geometry.SLAB1D:
        return integrate_slab(vs)
    return integrate_radial(vs)
