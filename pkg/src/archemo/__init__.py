"""Finite-difference simulator for an attraction-repulsion chemotaxis system
with a nonlocal logistic source and power-law signal production."""

from .grid import Grid, ImaginaryStateError, chemo_divergence, integrate, laplacian
from .model import (
    EmptySeriesError,
    EnvelopeReport,
    MassEnvelope,
    ModelParams,
    Theorem1Result,
    mass_envelope_check,
    nonlocal_source,
    production,
    theorem1_predicate,
)
from .diagnostics import (
    ConvergenceStudy,
    ManufacturedSolution,
    RunReport,
    Sample,
    SeriesRecorder,
    convergence_order,
    mms_spatial_study,
    mms_temporal_study,
    norms,
)
from .stepper import (
    Event,
    EventKind,
    SimState,
    StepPolicy,
    initial_state,
    rhs,
    run,
    stable_dt,
    step,
)
from .scenarios import (
    GaussianBump,
    Scenario,
    build_state,
    catalog,
    event_matches_expected,
    get,
    scenario_from_config,
    scenario_to_config,
)

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "ImaginaryStateError",
    "laplacian",
    "chemo_divergence",
    "integrate",
    "ModelParams",
    "MassEnvelope",
    "Theorem1Result",
    "EnvelopeReport",
    "EmptySeriesError",
    "production",
    "nonlocal_source",
    "theorem1_predicate",
    "mass_envelope_check",
    "Event",
    "EventKind",
    "SimState",
    "StepPolicy",
    "initial_state",
    "rhs",
    "stable_dt",
    "step",
    "run",
    "RunReport",
    "Sample",
    "SeriesRecorder",
    "ConvergenceStudy",
    "ManufacturedSolution",
    "norms",
    "convergence_order",
    "mms_spatial_study",
    "mms_temporal_study",
    "GaussianBump",
    "Scenario",
    "build_state",
    "catalog",
    "get",
    "event_matches_expected",
    "scenario_to_config",
    "scenario_from_config",
    "__version__",
]
