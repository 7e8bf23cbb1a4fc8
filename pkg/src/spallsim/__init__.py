"""spallsim: 1D coupled hygro-thermo-mechanical simulation of heated
concrete walls, with surface spalling treated as a moving boundary."""

__version__ = "0.1.0"

from .constants import CONST, THETA_CR, PhysicalConstants
from .materials import Aggregate, ConcreteClass, FluidState, MaterialParams
from .scenarios import (
    BoundarySpec,
    FireCurve,
    Scenario,
    builtin_scenarios,
    fire_curve_value,
    load_scenario,
    resolve_scenario,
    save_scenario,
    validate,
)
from .solver import (
    Mesh1D,
    SolverSettings,
    State,
    StepReport,
    TimeSeries,
    advance,
    build_mesh,
    initial_state,
    run,
)

__all__ = [
    "__version__",
    "CONST",
    "THETA_CR",
    "PhysicalConstants",
    "Aggregate",
    "ConcreteClass",
    "FluidState",
    "MaterialParams",
    "BoundarySpec",
    "FireCurve",
    "Scenario",
    "builtin_scenarios",
    "fire_curve_value",
    "load_scenario",
    "resolve_scenario",
    "save_scenario",
    "validate",
    "Mesh1D",
    "SolverSettings",
    "State",
    "StepReport",
    "TimeSeries",
    "advance",
    "build_mesh",
    "initial_state",
    "run",
]
