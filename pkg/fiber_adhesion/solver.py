"""
Copyright (c) Meta Platforms, Inc. and affiliates.
All rights reserved.

This source code is licensed under the BSD-style license found in the
LICENSE file in the root directory of this source tree.

"""

import logging
import math
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from functools import cached_property

import torch
from commons import REAL_DTYPE
from fiber_adhesion.beam import (
    BSplineBeam,
    internal_energy,
    internal_forces_and_tangent,
    straight_beam,
)
from fiber_adhesion.fiber_adhesion_types import (
    CompositeLaw,
    ContinuationConfig,
    DefaultContinuationConfig,
    DefaultInteractionConfig,
    DefaultLennardJonesLaw,
    DegenerateFrameError,
    EquilibriumPath,
    InteractionConfig,
    InterpenetrationError,
    LoadStepRecord,
    NewtonConvergenceError,
    PowerLawSpec,
    SectionPairGeometry,
    StepUnderflowError,
)
from fiber_adhesion.interaction import (
    assemble_interaction,
    build_grid,
    find_pairs,
    grid_layout,
    GridLayout,
    interaction_energy,
    interaction_resultant,
    InteractionGrid,
)

from torch import Tensor

logger: logging.Logger = logging.getLogger(__name__)

# Failures of a load step that a smaller increment can recover from.
RECOVERABLE_STEP_ERRORS: tuple[type[ArithmeticError], ...] = (
    NewtonConvergenceError,
    InterpenetrationError,
    DegenerateFrameError,
)

# Component index of the horizontal support reaction.
HORIZONTAL: int = 0


###### DATACLASSES ######
@dataclass(kw_only=True)
class BoundaryConditions:
    """Prescribed displacements u[dofs] = initial_values + t * rates.

    Attributes:
        dofs (Tensor): Constrained global dofs, int64 of shape (K,).
        initial_values (Tensor): Values at t = 0, shape (K,).
        rates (Tensor): Change per unit load factor, shape (K,).

    """

    dofs: Tensor
    initial_values: Tensor
    rates: Tensor

    def __post_init__(self) -> None:
        if not self.dofs.shape == self.initial_values.shape == self.rates.shape:
            raise ValueError(
                f"Invalid boundary condition shapes: {self.dofs.shape=}, {self.initial_values.shape=}, {self.rates.shape=}. Must be equal."
            )
        if torch.unique(self.dofs).numel() != self.dofs.numel():
            raise ValueError(f"Invalid dofs value: {self.dofs}. Must be unique.")

    def values(self, t: float) -> Tensor:
        return self.initial_values + t * self.rates

    def free_mask(self, num_dofs: int) -> Tensor:
        free = torch.ones(num_dofs, dtype=torch.bool)
        free[self.dofs] = False
        return free


@dataclass
class SystemEvaluation:
    """Global residual and tangent of a FiberSystem at one state.

    Attributes:
        residual (Tensor): Internal plus interaction force vector.
        tangent (Tensor | None): Its derivative with respect to the displacements.
        internal_norm (float): Norm of the internal force vector.
        interaction_norm (float): Norm of the interaction force vector.
        pairs (tuple[Tensor, Tensor] | None): Interacting point pairs, None without interaction.

    """

    residual: Tensor
    tangent: Tensor | None
    internal_norm: float
    interaction_norm: float
    pairs: tuple[Tensor, Tensor] | None


@dataclass(kw_only=True)
class FiberSystem:
    """Two interacting beams; beam y's dofs follow beam x's in the global vector.

    Attributes:
        beams (tuple[BSplineBeam, BSplineBeam]): Beam x and beam y.
        geometry (SectionPairGeometry): Radii and particle densities; the radii must match the beams.
        law (PowerLawSpec | CompositeLaw): Point-pair law. (Default: DefaultLennardJonesLaw)
        interaction_config (InteractionConfig): Interaction options. (Default: DefaultInteractionConfig)

    """

    beams: tuple[BSplineBeam, BSplineBeam]
    geometry: SectionPairGeometry
    law: PowerLawSpec | CompositeLaw = DefaultLennardJonesLaw
    interaction_config: InteractionConfig = DefaultInteractionConfig

    def __post_init__(self) -> None:
        beam_x, beam_y = self.beams
        if beam_x.dof_offset != 0 or beam_y.dof_offset != beam_x.num_dofs:
            raise ValueError(
                f"Invalid dof_offset values: ({beam_x.dof_offset}, {beam_y.dof_offset}). Must be (0, {beam_x.num_dofs})."
            )
        if (self.geometry.radius_x, self.geometry.radius_y) != (
            beam_x.radius,
            beam_y.radius,
        ):
            raise ValueError(
                f"Invalid geometry value: radii ({self.geometry.radius_x}, {self.geometry.radius_y}). Must match the beam radii ({beam_x.radius}, {beam_y.radius})."
            )

    @property
    def num_dofs(self) -> int:
        return sum(beam.num_dofs for beam in self.beams)

    @cached_property
    def layouts(self) -> tuple[GridLayout, GridLayout]:
        return tuple(
            grid_layout(
                beam,
                self.interaction_config.density,
                self.interaction_config.end_exclusion_fraction,
            )
            for beam in self.beams
        )

    def grid(self, displacements: Tensor) -> InteractionGrid:
        return build_grid(
            self.beams,
            displacements,
            self.interaction_config.density,
            layouts=self.layouts,
        )

    def find_pairs(self, grid: InteractionGrid) -> tuple[Tensor, Tensor]:
        return find_pairs(grid, self.interaction_config.cutoff)

    def internal(
        self, displacements: Tensor, with_tangent: bool = True
    ) -> tuple[Tensor, Tensor | None]:
        residual = torch.zeros(self.num_dofs, dtype=displacements.dtype)
        tangent = (
            torch.zeros(self.num_dofs, self.num_dofs, dtype=displacements.dtype)
            if with_tangent
            else None
        )
        for beam in self.beams:
            dofs = beam.dof_indices()
            beam_residual, beam_tangent = internal_forces_and_tangent(
                beam, beam.local_displacements(displacements), with_tangent
            )
            residual.index_add_(0, dofs, beam_residual)
            if with_tangent:
                tangent[dofs.unsqueeze(-1), dofs] = beam_tangent
        return residual, tangent

    def evaluate(
        self,
        displacements: Tensor,
        with_interaction: bool = True,
        with_tangent: bool = True,
        pairs: tuple[Tensor, Tensor] | None = None,
    ) -> SystemEvaluation:
        """Residual and tangent of the internal forces, plus the interaction when with_interaction is set.

        Pairs are searched in the current configuration unless given.
        """
        residual, tangent = self.internal(displacements, with_tangent)
        internal_norm = torch.linalg.vector_norm(residual).item()
        if not with_interaction:
            return SystemEvaluation(
                residual=residual,
                tangent=tangent,
                internal_norm=internal_norm,
                interaction_norm=0.0,
                pairs=None,
            )

        grid = self.grid(displacements)
        if pairs is None:
            pairs = self.find_pairs(grid)
        interaction_residual, interaction_tangent = assemble_interaction(
            grid,
            pairs,
            self.law,
            self.geometry,
            self.interaction_config,
            self.num_dofs,
            with_tangent,
        )
        return SystemEvaluation(
            residual=residual + interaction_residual,
            tangent=tangent + interaction_tangent if with_tangent else None,
            internal_norm=internal_norm,
            interaction_norm=torch.linalg.vector_norm(interaction_residual).item(),
            pairs=pairs,
        )


@dataclass
class NewtonResult:
    """Converged state of one load step.

    Attributes:
        displacements (Tensor): Global displacements.
        iterations (int): Linear solves performed.
        residual_norms (list[float]): Relative residual norm before each iteration and at convergence.

    """

    displacements: Tensor
    iterations: int
    residual_norms: list[float] = field(default_factory=list)


@dataclass
class SupportReactions:
    """Reactions at the constrained dofs, the residual there with the constraints released."""

    dofs: Tensor
    values: Tensor

    def beam_sum(self, beam: BSplineBeam, component: int = HORIZONTAL) -> float:
        """Sum of one component of the reactions at the supports of beam."""
        mask = (
            (self.dofs >= beam.dof_offset)
            & (self.dofs < beam.dof_offset + beam.num_dofs)
            & ((self.dofs - beam.dof_offset) % 2 == component)
        )
        return self.values[mask].sum().item()


def total_potential(
    system: FiberSystem,
    displacements: Tensor,
    pairs: tuple[Tensor, Tensor] | None = None,
) -> Tensor:
    """Strain energy of both beams plus the interaction energy."""
    energy = sum(
        internal_energy(beam, beam.local_displacements(displacements))
        for beam in system.beams
    )
    grid = system.grid(displacements)
    if pairs is None:
        pairs = system.find_pairs(grid)
    return energy + interaction_energy(
        grid, pairs, system.law, system.geometry, system.interaction_config
    )


def newton_solve(
    system: FiberSystem,
    displacements: Tensor,
    boundary_conditions: BoundaryConditions,
    t: float,
    config: ContinuationConfig = DefaultContinuationConfig,
    with_interaction: bool = True,
) -> NewtonResult:
    """Newton-Raphson iteration for the equilibrium at load factor t.

    The error is the norm of the residual at the free dofs divided by the force scale, the largest internal or
    interaction force norm seen during the iteration (at least config.force_scale_floor).

    Args:
        system (FiberSystem): The beams and their interaction.
        displacements (Tensor): Starting state; the constrained dofs are overwritten with their values at t.
        boundary_conditions (BoundaryConditions): Supports.
        t (float): Load factor.
        config (ContinuationConfig): Tolerance and iteration limit. (Default: DefaultContinuationConfig)
        with_interaction (bool): Include the interaction residual and tangent. (Default: True)

    Returns:
        result (NewtonResult): Converged state and iteration statistics.

    Raises:
        NewtonConvergenceError: If the tolerance is not reached within config.max_iterations or the residual is not finite.
        InterpenetrationError: If an iterate makes cross sections overlap.

    """
    displacements = displacements.clone()
    displacements[boundary_conditions.dofs] = boundary_conditions.values(t)
    free = boundary_conditions.free_mask(system.num_dofs)
    freeze_pairs = system.interaction_config.freeze_pairs_per_step
    pairs = None
    force_scale = config.force_scale_floor
    residual_norms: list[float] = []

    for iteration in range(config.max_iterations + 1):
        start_time = time.perf_counter()
        evaluation = system.evaluate(
            displacements,
            with_interaction=with_interaction,
            pairs=pairs if freeze_pairs else None,
        )
        pairs = evaluation.pairs
        force_scale = max(
            force_scale, evaluation.internal_norm, evaluation.interaction_norm
        )
        error = torch.linalg.vector_norm(evaluation.residual[free]).item() / force_scale
        residual_norms.append(error)
        logger.debug(
            f"Newton t={t:.6g} iteration {iteration}: error {error:.3e}, force scale {force_scale:.3e}, "
            f"{time.perf_counter() - start_time:.3e} s."
        )
        if not math.isfinite(error):
            raise NewtonConvergenceError(
                f"Newton iteration at t = {t} produced a non-finite residual."
            )
        if error <= config.tolerance:
            return NewtonResult(
                displacements=displacements,
                iterations=iteration,
                residual_norms=residual_norms,
            )
        if iteration == config.max_iterations:
            break
        increment = torch.linalg.solve(
            evaluation.tangent[free][:, free], -evaluation.residual[free]
        )
        displacements[free] += increment

    raise NewtonConvergenceError(
        f"Newton iteration at t = {t} did not converge in {config.max_iterations} iterations: error {residual_norms[-1]:.3e} > {config.tolerance}."
    )


def reaction_recovery(
    system: FiberSystem,
    displacements: Tensor,
    boundary_conditions: BoundaryConditions,
    with_interaction: bool = True,
) -> SupportReactions:
    evaluation = system.evaluate(
        displacements, with_interaction=with_interaction, with_tangent=False
    )
    return SupportReactions(
        dofs=boundary_conditions.dofs,
        values=evaluation.residual[boundary_conditions.dofs],
    )


def equilibrium_check(
    system: FiberSystem,
    displacements: Tensor,
    boundary_conditions: BoundaryConditions,
    refinement: float = 2.0,
) -> float:
    """Relative mismatch between the horizontal support reactions of beam x and the horizontal interaction force on
    beam x integrated on a grid refined by the given factor.

    At a converged state the reactions balance the interaction force of the solver's own grid, so the mismatch is the
    integration error of that grid plus the Newton residual. The first one only becomes small once the grid resolves
    the gap: below a few thousand points per unit length the lattice of points distorts the net force of a nearly
    balanced contact by more than the force itself.
    """
    reactions = reaction_recovery(system, displacements, boundary_conditions)
    refined = replace(
        system,
        interaction_config=replace(
            system.interaction_config,
            density=system.interaction_config.density * refinement,
        ),
    )
    grid = refined.grid(displacements)
    force = interaction_resultant(
        grid,
        refined.find_pairs(grid),
        refined.law,
        refined.geometry,
        refined.interaction_config,
    )[HORIZONTAL].item()
    mismatch = abs(reactions.beam_sum(system.beams[0]) + force) / abs(force)
    logger.info(
        f"Equilibrium check: reaction sum {reactions.beam_sum(system.beams[0]):.10e}, "
        f"interaction force {force:.10e} (density x{refinement}), relative mismatch {mismatch:.3e}."
    )
    return mismatch


@dataclass
class SnapOffResult:
    displacements: Tensor
    iterations: int
    converged: bool


def snap_off(
    system: FiberSystem,
    displacements: Tensor,
    boundary_conditions: BoundaryConditions,
    t: float,
    config: ContinuationConfig = DefaultContinuationConfig,
) -> SnapOffResult:
    """Separated state after pull-off, the equilibrium at t with the interaction removed.

    Non-convergence is logged and the input state is returned with converged = False.
    """
    try:
        result = newton_solve(
            system,
            displacements,
            boundary_conditions,
            t,
            config,
            with_interaction=False,
        )
    except NewtonConvergenceError as error:
        logger.warning(f"Snap-off did not converge: {error}")
        return SnapOffResult(
            displacements=displacements, iterations=config.max_iterations, converged=False
        )
    logger.info(f"Snap-off at t = {t:.6g} converged in {result.iterations} iterations.")
    return SnapOffResult(
        displacements=result.displacements,
        iterations=result.iterations,
        converged=True,
    )


###### LOAD STEPPING ######
class LoadStepProblem(ABC):
    """A quasi-static problem marched over the load factor by adaptive_march."""

    @abstractmethod
    def initial_state(self) -> Tensor: ...

    @abstractmethod
    def solve_step(self, state: Tensor, t: float) -> tuple[Tensor, int]:
        """Equilibrium at t starting from state; returns the state and the iteration count.

        Raises one of RECOVERABLE_STEP_ERRORS when the step has to be retried with a smaller increment.
        """

    @abstractmethod
    def record_step(self, state: Tensor, t: float, iterations: int) -> LoadStepRecord: ...


def adaptive_march(
    problem: LoadStepProblem, config: ContinuationConfig = DefaultContinuationConfig
) -> EquilibriumPath:
    """Marches the load factor from config.t_start to config.t_end.

    Steps converging within config.target_iterations grow the increment by config.growth_factor (up to
    config.max_step); failed steps are retried with the increment multiplied by config.shrink_factor.

    Raises:
        StepUnderflowError: If the increment falls below config.min_step, or the first load factor cannot be solved.
            The error carries the converged part of the path and the last converged state.

    """
    path = EquilibriumPath()
    state = problem.initial_state()
    t_current: float | None = None
    t_next = config.t_start
    step = config.initial_step

    while True:
        try:
            new_state, iterations = problem.solve_step(state, t_next)
        except RECOVERABLE_STEP_ERRORS as error:
            if t_current is None:
                raise StepUnderflowError(
                    f"First load step t = {t_next} failed: {error}", path, state, t_next
                ) from error
            step = min(step, t_next - t_current) * config.shrink_factor
            logger.warning(
                f"Load step to t = {t_next:.8g} failed ({type(error).__name__}); retrying with step {step:.3e}."
            )
            if step < config.min_step:
                raise StepUnderflowError(
                    f"Load step {step:.3e} fell below min_step = {config.min_step} at t = {t_current}.",
                    path,
                    state,
                    t_current,
                ) from error
            t_next = t_current + step
            continue

        state, t_current = new_state, t_next
        path.append(problem.record_step(state, t_current, iterations))
        logger.info(
            f"Accepted t = {t_current:.8g} after {iterations} iterations (step {step:.3e})."
        )
        if t_current >= config.t_end:
            return path
        if iterations <= config.target_iterations:
            step = min(step * config.growth_factor, config.max_step)
        t_next = min(t_current + step, config.t_end)


###### PEELING ######
@dataclass(kw_only=True)
class PeelSetup:
    """Two parallel simply supported fibers of length L, initially a gap initial_gap apart; the supports of the right
    fiber are pulled away horizontally so that the support gap equals L t.

    Attributes:
        youngs_modulus (float): Material stiffness, required.
        length (float): Fiber length L. (Default: 5.0)
        radius (float): Cross-section radius of both fibers. (Default: 0.02)
        beta (float): Particle density of both fibers. (Default: 1.0)
        degree (int): B-spline degree. (Default: 4)
        num_control_points (int): Control points per fiber. (Default: 161)
        initial_gap (float): Support gap at t = t_start. (Default: 0.0008)

    """

    youngs_modulus: float
    length: float = 5.0
    radius: float = 0.02
    beta: float = 1.0
    degree: int = 4
    num_control_points: int = 161
    initial_gap: float = 0.0008

    def __post_init__(self) -> None:
        for name in ("youngs_modulus", "length", "radius", "beta", "initial_gap"):
            if not getattr(self, name) > 0.0:
                raise ValueError(
                    f"Invalid {name} value: {getattr(self, name)}. Must be > 0.0."
                )


def peel_system(
    setup: PeelSetup,
    law: PowerLawSpec | CompositeLaw = DefaultLennardJonesLaw,
    interaction_config: InteractionConfig = DefaultInteractionConfig,
) -> tuple[FiberSystem, BoundaryConditions]:
    """Vertical fibers along x = 0 (beam x) and x = 2 R + initial_gap (beam y), both pointing up, with pinned ends."""
    offset = 2 * setup.radius + setup.initial_gap
    beam_x = straight_beam(
        (0.0, 0.0),
        (0.0, setup.length),
        setup.degree,
        setup.num_control_points,
        setup.radius,
        setup.youngs_modulus,
    )
    beam_y = straight_beam(
        (offset, 0.0),
        (offset, setup.length),
        setup.degree,
        setup.num_control_points,
        setup.radius,
        setup.youngs_modulus,
        dof_offset=beam_x.num_dofs,
    )
    system = FiberSystem(
        beams=(beam_x, beam_y),
        geometry=SectionPairGeometry(
            radius_x=setup.radius,
            radius_y=setup.radius,
            beta_x=setup.beta,
            beta_y=setup.beta,
        ),
        law=law,
        interaction_config=interaction_config,
    )

    end_points = torch.tensor([0, setup.num_control_points - 1])
    support_dofs = [
        beam.control_point_dofs(end_points).reshape(-1) for beam in system.beams
    ]
    dofs = torch.cat(support_dofs)
    rates = torch.zeros(dofs.numel(), dtype=REAL_DTYPE)
    initial_values = torch.zeros(dofs.numel(), dtype=REAL_DTYPE)
    # Horizontal dofs of the right fiber's supports.
    pulled = torch.arange(len(support_dofs[0]), dofs.numel(), 2)
    rates[pulled] = setup.length
    initial_values[pulled] = -setup.initial_gap
    return system, BoundaryConditions(
        dofs=dofs, initial_values=initial_values, rates=rates
    )


@dataclass
class PeelMilestones:
    peak_t: float | None = None
    peak_reaction: float | None = None
    pull_off_t: float | None = None


class PeelProblem(LoadStepProblem):
    """Peeling and pull-off of two fibers; every accepted state is kept as a snapshot.

    Args:
        system (FiberSystem): The fibers, from peel_system.
        boundary_conditions (BoundaryConditions): The supports, from peel_system.
        config (ContinuationConfig): Newton and load stepping settings. (Default: DefaultContinuationConfig)
        check_equilibrium (bool): Run equilibrium_check at the first load step. (Default: True)

    """

    def __init__(
        self,
        system: FiberSystem,
        boundary_conditions: BoundaryConditions,
        config: ContinuationConfig = DefaultContinuationConfig,
        check_equilibrium: bool = True,
    ) -> None:
        self._system = system
        self._boundary_conditions = boundary_conditions
        self._config = config
        self._check_equilibrium = check_equilibrium
        self.snapshots: dict[int, Tensor] = {}
        self.equilibrium_mismatch: float | None = None

    @property
    def system(self) -> FiberSystem:
        return self._system

    @property
    def boundary_conditions(self) -> BoundaryConditions:
        return self._boundary_conditions

    def initial_state(self) -> Tensor:
        return torch.zeros(self._system.num_dofs, dtype=REAL_DTYPE)

    def solve_step(self, state: Tensor, t: float) -> tuple[Tensor, int]:
        result = newton_solve(
            self._system, state, self._boundary_conditions, t, self._config
        )
        return result.displacements, result.iterations

    def record_step(
        self, state: Tensor, t: float, iterations: int, with_interaction: bool = True
    ) -> LoadStepRecord:
        if self._check_equilibrium and self.equilibrium_mismatch is None:
            self.equilibrium_mismatch = equilibrium_check(
                self._system, state, self._boundary_conditions
            )
        reactions = reaction_recovery(
            self._system, state, self._boundary_conditions, with_interaction
        )
        snapshot_id = len(self.snapshots)
        self.snapshots[snapshot_id] = state
        beam_x, beam_y = self._system.beams
        return LoadStepRecord(
            t=t,
            reaction_x=reactions.beam_sum(beam_x),
            reaction_y=reactions.beam_sum(beam_y),
            iterations=iterations,
            snapshot_id=snapshot_id,
            post_snap=not with_interaction,
        )

    def run(self) -> tuple[EquilibriumPath, PeelMilestones]:
        """Marches until pull-off (or t_end) and appends the separated state after snap-off."""
        milestones = PeelMilestones()
        try:
            path = adaptive_march(self, self._config)
        except StepUnderflowError as error:
            if not error.path.records:
                raise
            path = error.path
            milestones.pull_off_t = error.last_t
            logger.info(f"Pull-off at t = {error.last_t:.6g}; resolving snap-off.")
            separated = snap_off(
                self._system,
                error.last_state,
                self._boundary_conditions,
                error.last_t,
                self._config,
            )
            path.append(
                self.record_step(
                    separated.displacements,
                    error.last_t,
                    separated.iterations,
                    with_interaction=False,
                )
            )

        peak = path.peak()
        milestones.peak_t, milestones.peak_reaction = peak.t, peak.reaction_x
        logger.info(
            f"Peel milestones: peak reaction {peak.reaction_x:.6e} at t = {peak.t:.6g}, pull-off t = {milestones.pull_off_t}, "
            f"{len(path)} points, mean iterations {path.mean_iterations:.2f}."
        )
        return path, milestones
