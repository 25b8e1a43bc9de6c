"""
Copyright (c) Meta Platforms, Inc. and affiliates.
All rights reserved.

This source code is licensed under the BSD-style license found in the
LICENSE file in the root directory of this source tree.

"""

import enum
import math
from dataclasses import dataclass, field
from typing import Any

import torch

from commons import as_real_tensor


###### ERROR CLASSES ######
class InterpenetrationError(ArithmeticError):
    """Two cross sections touch or overlap (gap q2 <= 0)."""


class DegenerateFrameError(ArithmeticError):
    """A local coordinate system cannot be built (vanishing tangent or perpendicular-opposed averaging)."""


class NoEquilibriumError(ValueError):
    """The per-length potential has no stationary gap."""


class NewtonConvergenceError(ArithmeticError):
    """Newton-Raphson iteration did not reach the residual tolerance."""


class StepUnderflowError(ArithmeticError):
    """Load step fell below the minimum step size.

    Attributes:
        path (EquilibriumPath): Converged part of the equilibrium path.
        last_state (Any): Last converged state handed to the load step problem.
        last_t (float): Load factor of last_state.

    """

    def __init__(
        self, message: str, path: "EquilibriumPath", last_state: Any, last_t: float
    ) -> None:
        super().__init__(message)
        self.path = path
        self.last_state = last_state
        self.last_t = last_t


class QuadratureToleranceError(ArithmeticError):
    """Adaptive cubature did not meet its tolerances."""


###### ENUM CLASSES ######
@enum.unique
class Formulation(enum.Enum):
    """
    Reference frame in which the offset q1 and the gap q2 are measured.

    AVERAGED: Frame spanned by the normalized sum of both tangents.
    STRAIGHTFORWARD: Frame of beam x.
    """

    AVERAGED = "averaged"
    STRAIGHTFORWARD = "straightforward"


@enum.unique
class InteractionLawType(enum.Enum):
    """
    Section-section law used for the interaction.

    ISSIP: Closed form in offset and gap with the hypergeometric kernel.
    LSSIP: Pure power of the centroid gap, exact for coplanar sections only.
    """

    ISSIP = "issip"
    LSSIP = "lssip"


@enum.unique
class QuadratureMethod(enum.Enum):
    """
    Coordinates of the adaptive reference integral of a section-section potential.

    CARTESIAN_4D: Both disks in polar coordinates, a 4D integral; loses accuracy at small gaps.
    REDUCED_2D: Distance and polar radius about the centroid of disk x, a 2D integral with an arccos kernel.
    """

    CARTESIAN_4D = "cartesian-4d"
    REDUCED_2D = "reduced-2d"


###### DATACLASSES ######
@dataclass(kw_only=True)
class PowerLawSpec:
    """Inverse power point-pair law k_m / r^m.

    Attributes:
        m (float): Exponent.
        k_m (float): Coefficient; negative for attraction, positive for repulsion.

    """

    m: float
    k_m: float

    def __post_init__(self) -> None:
        if not self.m > 0.0:
            raise ValueError(f"Invalid m value: {self.m}. Must be > 0.0.")
        if not math.isfinite(self.k_m):
            raise ValueError(f"Invalid k_m value: {self.k_m}. Must be finite.")


@dataclass(kw_only=True)
class CompositeLaw:
    """Sum of inverse power laws with distinct exponents.

    Attributes:
        terms (tuple[PowerLawSpec, ...]): Terms of the law.

    """

    terms: tuple[PowerLawSpec, ...]

    def __post_init__(self) -> None:
        self.terms = tuple(self.terms)
        if not self.terms:
            raise ValueError("Invalid terms value: (). Must contain at least one term.")
        exponents = [term.m for term in self.terms]
        if len(set(exponents)) != len(exponents):
            raise ValueError(
                f"Invalid terms value: exponents {exponents}. Must be distinct."
            )


def lennard_jones_law(k_6: float = -1e-7, k_12: float = 5e-25) -> CompositeLaw:
    return CompositeLaw(terms=(PowerLawSpec(m=6.0, k_m=k_6), PowerLawSpec(m=12.0, k_m=k_12)))


DefaultLennardJonesLaw = lennard_jones_law()


@dataclass(kw_only=True)
class SectionPairGeometry:
    """Radii and reference particle densities of the two interacting cross sections.

    Attributes:
        radius_x (float): Cross-section radius of beam x. (Default: 0.02)
        radius_y (float): Cross-section radius of beam y. (Default: 0.02)
        beta_x (float): Particle density of beam x. (Default: 1.0)
        beta_y (float): Particle density of beam y. (Default: 1.0)

    """

    radius_x: float = 0.02
    radius_y: float = 0.02
    beta_x: float = 1.0
    beta_y: float = 1.0

    def __post_init__(self) -> None:
        for name in ("radius_x", "radius_y", "beta_x", "beta_y"):
            if not getattr(self, name) > 0.0:
                raise ValueError(
                    f"Invalid {name} value: {getattr(self, name)}. Must be > 0.0."
                )

    @property
    def radius_sum(self) -> float:
        return self.radius_x + self.radius_y


DefaultSectionPairGeometry = SectionPairGeometry()


@dataclass(kw_only=True)
class SectionKinematics:
    """Offset and gap of interacting section pairs (batched over the leading shape).

    Attributes:
        q1 (torch.Tensor): Offset along the reference tangent.
        q2 (torch.Tensor): Surface gap, q2_hat - radius_x - radius_y.
        q2_hat (torch.Tensor): Absolute projection of the centroid distance on the reference normal.
        s_alpha (torch.Tensor): Sign of that projection, real even for complex-step inputs.

    """

    q1: torch.Tensor
    q2: torch.Tensor
    q2_hat: torch.Tensor
    s_alpha: torch.Tensor

    @classmethod
    def from_offset_and_gap(
        cls,
        q1: float | torch.Tensor,
        q2: float | torch.Tensor,
        geometry: SectionPairGeometry = DefaultSectionPairGeometry,
    ) -> "SectionKinematics":
        q1_tensor, q2_tensor = torch.broadcast_tensors(
            as_real_tensor(q1), as_real_tensor(q2)
        )
        return cls(
            q1=q1_tensor,
            q2=q2_tensor,
            q2_hat=q2_tensor + geometry.radius_sum,
            s_alpha=torch.ones(q2_tensor.shape, dtype=torch.float64),
        )


@dataclass(kw_only=True)
class InteractionConfig:
    """Configuration of the beam-beam interaction.

    Attributes:
        law_type (InteractionLawType): Section-section law. (Default: InteractionLawType.ISSIP)
        formulation (Formulation): Reference frame of the kinematics. (Default: Formulation.AVERAGED)
        include_moments (bool): Add the interaction moments to the residual. Their linearization is not assembled.
            Only available with the ISSIP law. (Default: False)
        include_tangential_force (bool): Keep the tangential component f1 in force and tangent. (Default: True)
        cutoff (float): Pairs with centroid distance above the cutoff are neglected. (Default: 0.05)
        density (float): Interaction points per unit reference length. (Default: 3200.0)
        end_exclusion_fraction (float): Fraction of the parametric range at each beam end without interaction
            points. (Default: 0.0)
        freeze_pairs_per_step (bool): Search pairs once per load step instead of every Newton iteration.
            (Default: False)
        pair_chunk_size (int): Number of pairs evaluated at once. (Default: 200000)

    """

    law_type: InteractionLawType = InteractionLawType.ISSIP
    formulation: Formulation = Formulation.AVERAGED
    include_moments: bool = False
    include_tangential_force: bool = True
    cutoff: float = 0.05
    density: float = 3200.0
    end_exclusion_fraction: float = 0.0
    freeze_pairs_per_step: bool = False
    pair_chunk_size: int = 200000

    def __post_init__(self) -> None:
        if not self.cutoff > 0.0:
            raise ValueError(f"Invalid cutoff value: {self.cutoff}. Must be > 0.0.")
        if not self.density >= 1.0:
            raise ValueError(f"Invalid density value: {self.density}. Must be >= 1.0.")
        if not 0.0 <= self.end_exclusion_fraction < 0.5:
            raise ValueError(
                f"Invalid end_exclusion_fraction value: {self.end_exclusion_fraction}. Must be in the interval [0.0, 0.5)."
            )
        if self.pair_chunk_size < 1:
            raise ValueError(
                f"Invalid pair_chunk_size value: {self.pair_chunk_size}. Must be >= 1."
            )
        if self.include_moments and self.law_type != InteractionLawType.ISSIP:
            raise ValueError(
                f"Invalid include_moments value: {self.include_moments}. Requires law_type {InteractionLawType.ISSIP}."
            )


DefaultInteractionConfig = InteractionConfig()


@dataclass(kw_only=True)
class ContinuationConfig:
    """Configuration of the adaptive load stepping and the Newton-Raphson iteration.

    Attributes:
        t_start (float): First load factor. (Default: 0.00016)
        t_end (float): Last load factor. (Default: 1.0)
        initial_step (float): First load increment. (Default: 1e-3)
        max_step (float): Largest load increment. (Default: 0.02)
        min_step (float): Smaller increments abort the march. (Default: 1e-8)
        growth_factor (float): Step growth after an easy step. (Default: 1.25)
        shrink_factor (float): Step reduction after a failed step. (Default: 0.5)
        target_iterations (int): Steps converging within this many iterations grow the increment. (Default: 8)
        max_iterations (int): Newton iterations per step. (Default: 25)
        tolerance (float): Relative residual tolerance. (Default: 1e-5)
        force_scale_floor (float): Lower bound of the force scale the residual is measured against; only keeps the scale
            positive in a force-free state. (Default: 1e-10)

    """

    t_start: float = 0.00016
    t_end: float = 1.0
    initial_step: float = 1e-3
    max_step: float = 0.02
    min_step: float = 1e-8
    growth_factor: float = 1.25
    shrink_factor: float = 0.5
    target_iterations: int = 8
    max_iterations: int = 25
    tolerance: float = 1e-5
    force_scale_floor: float = 1e-10

    def __post_init__(self) -> None:
        if not self.t_start < self.t_end:
            raise ValueError(
                f"Invalid t_start value: {self.t_start}. Must be < t_end = {self.t_end}."
            )
        if not 0.0 < self.min_step <= self.initial_step <= self.max_step:
            raise ValueError(
                f"Invalid step sizes: {self.min_step=}, {self.initial_step=}, {self.max_step=}. Must satisfy 0 < min_step <= initial_step <= max_step."
            )
        if not 0.0 < self.shrink_factor < 1.0 < self.growth_factor:
            raise ValueError(
                f"Invalid step factors: {self.shrink_factor=}, {self.growth_factor=}. Must satisfy 0 < shrink_factor < 1 < growth_factor."
            )
        if not 1 <= self.target_iterations <= self.max_iterations:
            raise ValueError(
                f"Invalid target_iterations value: {self.target_iterations}. Must be in the interval [1, {self.max_iterations}]."
            )
        if not self.tolerance > 0.0:
            raise ValueError(f"Invalid tolerance value: {self.tolerance}. Must be > 0.0.")
        if not self.force_scale_floor > 0.0:
            raise ValueError(
                f"Invalid force_scale_floor value: {self.force_scale_floor}. Must be > 0.0."
            )


DefaultContinuationConfig = ContinuationConfig()


@dataclass(kw_only=True)
class LoadStepRecord:
    """One point of the equilibrium path.

    Attributes:
        t (float): Load factor.
        reaction_x (float): Sum of horizontal support reactions of beam x.
        reaction_y (float): Sum of horizontal support reactions of beam y.
        iterations (int): Newton iterations of the step.
        snapshot_id (int | None): Key of the stored state, if any. (Default: None)
        post_snap (bool): Separated state after the interaction was removed. (Default: False)

    """

    t: float
    reaction_x: float
    reaction_y: float
    iterations: int
    snapshot_id: int | None = None
    post_snap: bool = False


@dataclass
class EquilibriumPath:
    records: list[LoadStepRecord] = field(default_factory=list)

    def append(self, record: LoadStepRecord) -> None:
        # The post-snap record repeats the load factor of the pull-off state.
        if self.records and not (
            record.t > self.records[-1].t
            or (record.post_snap and record.t == self.records[-1].t)
        ):
            raise ValueError(
                f"Invalid t value: {record.t}. Must be > {self.records[-1].t}."
            )
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def load_factors(self) -> list[float]:
        return [record.t for record in self.records]

    @property
    def mean_iterations(self) -> float:
        converged = [record.iterations for record in self.records if not record.post_snap]
        return sum(converged) / max(len(converged), 1)

    def peak(self) -> LoadStepRecord:
        """Converged record with the largest reaction magnitude of beam x."""
        return max(
            (record for record in self.records if not record.post_snap),
            key=lambda record: abs(record.reaction_x),
        )


@dataclass(kw_only=True)
class QuadratureSpec:
    """Adaptive cubature settings of the reference integrals.

    Attributes:
        method (QuadratureMethod): Integration coordinates. (Default: QuadratureMethod.REDUCED_2D)
        absolute_tolerance (float): Absolute error target. (Default: 1e-30)
        relative_tolerance (float): Relative error target. (Default: 1e-10)
        max_subdivisions (int): Region subdivisions per sub-domain. (Default: 10000)

    """

    method: QuadratureMethod = QuadratureMethod.REDUCED_2D
    absolute_tolerance: float = 1e-30
    relative_tolerance: float = 1e-10
    max_subdivisions: int = 10000

    def __post_init__(self) -> None:
        for name in ("absolute_tolerance", "relative_tolerance"):
            if not getattr(self, name) > 0.0:
                raise ValueError(
                    f"Invalid {name} value: {getattr(self, name)}. Must be > 0.0."
                )
        if not self.max_subdivisions >= 1:
            raise ValueError(
                f"Invalid max_subdivisions value: {self.max_subdivisions}. Must be >= 1."
            )


DefaultQuadratureSpec = QuadratureSpec()
