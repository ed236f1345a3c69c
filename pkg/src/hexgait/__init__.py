"""Quasi-static gait planning for a planar multi-legged chain.

Resistive-force-style friction plus force balance turns shape velocity into
body velocity per contact pattern; the resulting connection fields over
shape space decompose into potential and height functions; potential
differences weight a cyclic gait graph whose optimal contact schedule is
found exactly by a Potts-to-Ising domain-wall search; synthesized plans run
in a rate-invariant SE(2) rollout.
"""

__version__ = "0.1.0"

from .model import (
    ALL_STANCE,
    BodyVelocity,
    ContactCatalog,
    ContactPattern,
    DegeneratePatternError,
    HexapodParams,
    JointLimitError,
    LEG_NAMES,
    ShapePoint,
    ShapeVelocity,
    TRIPOD_A,
    TRIPOD_B,
    build_catalog,
    foot_positions,
    foot_velocities,
)
from .connection import (
    ConnectionSample,
    SolverError,
    SolverSettings,
    grf,
    local_connection,
    solve_body_velocity,
)

__all__ = [
    "__version__",
    "ALL_STANCE",
    "BodyVelocity",
    "ContactCatalog",
    "ContactPattern",
    "ConnectionSample",
    "DegeneratePatternError",
    "HexapodParams",
    "JointLimitError",
    "LEG_NAMES",
    "ShapePoint",
    "ShapeVelocity",
    "SolverError",
    "SolverSettings",
    "TRIPOD_A",
    "TRIPOD_B",
    "build_catalog",
    "foot_positions",
    "foot_velocities",
    "grf",
    "local_connection",
    "solve_body_velocity",
]
