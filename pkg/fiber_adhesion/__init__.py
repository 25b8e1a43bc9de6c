"""
Copyright (c) Meta Platforms, Inc. and affiliates.
All rights reserved.

This source code is licensed under the BSD-style license found in the
LICENSE file in the root directory of this source tree.

"""

from fiber_adhesion.beam import BSplineBeam, straight_beam
from fiber_adhesion.fiber_adhesion_types import (
    CompositeLaw,
    ContinuationConfig,
    DefaultContinuationConfig,
    DefaultInteractionConfig,
    DefaultLennardJonesLaw,
    DefaultQuadratureSpec,
    DefaultSectionPairGeometry,
    DegenerateFrameError,
    EquilibriumPath,
    Formulation,
    InteractionConfig,
    InteractionLawType,
    InterpenetrationError,
    lennard_jones_law,
    LoadStepRecord,
    NewtonConvergenceError,
    NoEquilibriumError,
    PowerLawSpec,
    QuadratureMethod,
    QuadratureSpec,
    QuadratureToleranceError,
    SectionKinematics,
    SectionPairGeometry,
    StepUnderflowError,
)
from fiber_adhesion.potential_laws import (
    cylinder_per_length,
    equilibrium_gap,
    issip_derivatives,
    issip_value,
    lssip_derivatives,
)
from fiber_adhesion.solver import (
    adaptive_march,
    FiberSystem,
    newton_solve,
    peel_system,
    PeelProblem,
    PeelSetup,
)
from fiber_adhesion.verify import oracle_potential, run_verification_suite


__all__ = [
    # Point-pair laws.
    "PowerLawSpec",
    "CompositeLaw",
    "lennard_jones_law",
    "DefaultLennardJonesLaw",
    # Section-section laws.
    "SectionPairGeometry",
    "DefaultSectionPairGeometry",
    "SectionKinematics",
    "issip_derivatives",
    "issip_value",
    "lssip_derivatives",
    "cylinder_per_length",
    "equilibrium_gap",
    # Beams and their interaction.
    "BSplineBeam",
    "straight_beam",
    "Formulation",
    "InteractionLawType",
    "InteractionConfig",
    "DefaultInteractionConfig",
    "FiberSystem",
    # Load stepping.
    "ContinuationConfig",
    "DefaultContinuationConfig",
    "LoadStepRecord",
    "EquilibriumPath",
    "newton_solve",
    "adaptive_march",
    "PeelSetup",
    "peel_system",
    "PeelProblem",
    # Verification.
    "QuadratureMethod",
    "QuadratureSpec",
    "DefaultQuadratureSpec",
    "oracle_potential",
    "run_verification_suite",
    # Errors.
    "InterpenetrationError",
    "DegenerateFrameError",
    "NoEquilibriumError",
    "NewtonConvergenceError",
    "StepUnderflowError",
    "QuadratureToleranceError",
]
