"""Level-set mean curvature flow of axisymmetric surfaces with homology tracking.

Modules: ``grid`` (fields and surfaces), ``evolver`` (the flow), ``tracker``
(the inside/outside homology ledger), ``homology`` (voxel H1 and spacetime
descent), ``shrinker`` (profile shooting), ``entropy`` and ``harness``
(family classification and bisection).
"""

from .exceptions import (AxisCrossing, BracketError, ConfigurationError, DomainError,
                         GenusFlowError, InternalConsistencyError, NoPinchError,
                         NumericalBlowup, SetupError, SurfaceExtinct)
from .grid import (Cylinder, FamilySpec, OffsetOfProfile, ScalarField, Sphere, Torus,
                   build_grid, family_surface, init_signed_distance, reinitialize)
from .evolver import EvolverConfig, FlowState, run_until_event
from .tracker import HomologyLedger, track_run
from .shrinker import catalogue, find_torus_shrinker
from .entropy import density, entropy
from .homology import betti1, verify_descent, voxelize_revolution
from .harness import RunConfig, bisect, classify_flow

__version__ = "0.1.0"

__all__ = [
    "AxisCrossing", "BracketError", "ConfigurationError", "DomainError", "GenusFlowError",
    "InternalConsistencyError", "NoPinchError", "NumericalBlowup", "SetupError",
    "SurfaceExtinct", "Cylinder", "FamilySpec", "OffsetOfProfile", "ScalarField", "Sphere",
    "Torus", "build_grid", "family_surface", "init_signed_distance", "reinitialize",
    "EvolverConfig", "FlowState", "run_until_event", "HomologyLedger", "track_run",
    "catalogue", "find_torus_shrinker", "density", "entropy", "betti1", "verify_descent",
    "voxelize_revolution", "RunConfig", "bisect", "classify_flow",
]
