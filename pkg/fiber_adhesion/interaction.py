"""
Copyright (c) Meta Platforms, Inc. and affiliates.
All rights reserved.

This source code is licensed under the BSD-style license found in the
LICENSE file in the root directory of this source tree.

"""

import logging
import math
import time
from collections.abc import Callable, Iterator
from dataclasses import dataclass

import numpy as np

import torch
from commons import real_part, REAL_DTYPE, vector_norm
from fiber_adhesion.beam import axis_derivatives, BSplineBeam
from fiber_adhesion.fiber_adhesion_types import (
    CompositeLaw,
    Formulation,
    InteractionConfig,
    InteractionLawType,
    PowerLawSpec,
    SectionKinematics,
    SectionPairGeometry,
)
from fiber_adhesion.kinematics import (
    averaged_frame,
    frame_jacobians,
    gap_offset,
    gradients_straightforward,
    moment_weights,
    rotate_quarter,
    SectionFrame,
    straightforward_jacobians,
    tangent_gradients_averaged,
)
from fiber_adhesion.potential_laws import (
    cylinder_per_length_force,
    issip_derivatives,
    lssip_derivatives,
    PotentialDerivatives,
)
from fiber_adhesion.utils.bspline_basis import (
    BasisEvaluation,
    element_boundaries,
    gauss_legendre_points,
    midpoint_rule_points,
)
from fiber_adhesion.utils.neighbor_index import NeighborIndex
from scipy import integrate

from torch import Tensor

logger: logging.Logger = logging.getLogger(__name__)

# Row points of the tangent handled per scatter into the global matrix.
_ROW_CHUNK_SIZE: int = 1024


###### DATACLASSES ######
@dataclass
class GridLayout:
    """Reference layout of the interaction points of one beam (independent of the displacements).

    Attributes:
        beam (BSplineBeam): The beam.
        xi (Tensor): Mid-points of the integration segments, shape (P,).
        weights (Tensor): Parametric widths of the segments, shape (P,).
        basis (BasisEvaluation): Basis functions and first derivatives at xi.
        reference_sqrt_g (Tensor): Reference metric at xi, shape (P,).

    """

    beam: BSplineBeam
    xi: Tensor
    weights: Tensor
    basis: BasisEvaluation
    reference_sqrt_g: Tensor

    @property
    def num_points(self) -> int:
        return self.xi.numel()

    @property
    def quadrature_weights(self) -> Tensor:
        """Reference arc length represented by each point."""
        return self.weights * self.reference_sqrt_g

    @property
    def dofs(self) -> Tensor:
        """Global dofs of the active control points, shape (P, degree + 1, 2)."""
        return self.beam.control_point_dofs(self.basis.function_indices())


@dataclass
class InteractionGrid:
    """Interaction points of both beams with their frames in the current configuration.

    Attributes:
        layouts (tuple[GridLayout, GridLayout]): Layouts of beam x and beam y.
        frames (tuple[SectionFrame, SectionFrame]): Current frames at the points of beam x and beam y.
        density (float): Points per unit reference length.

    """

    layouts: tuple[GridLayout, GridLayout]
    frames: tuple[SectionFrame, SectionFrame]
    density: float


@dataclass
class PairLinearization:
    """Derivatives of the pair force f with respect to the position of section x (d_x) and the tangent vectors of
    sections x and y (d_x1, d_y1). The derivative with respect to the position of y is -d_x. Shape (P, 2, 2) each,
    entry [p, a, c] = d f_a / d u_c.
    """

    d_x: Tensor
    d_x1: Tensor
    d_y1: Tensor


@dataclass
class PairContribution:
    """Interaction of a batch of point pairs.

    Attributes:
        index_x (Tensor): Points on beam x.
        index_y (Tensor): Points on beam y.
        kinematics (SectionKinematics): Offset and gap of each pair.
        derivatives (PotentialDerivatives): Section-section potential and its partials.
        force (Tensor): Gradient of the pair potential with respect to the position of section x, shape (P, 2). The
            gradient with respect to section y is -force.
        weight (Tensor): Combined quadrature weight of the pair, shape (P,).
        moment_x (Tensor | None): Coefficient of N' n_x in the moment term of beam x, shape (P,).
        moment_y (Tensor | None): Coefficient of N' n_y in the moment term of beam y, shape (P,).
        linearization (PairLinearization | None): Force derivatives, if requested.

    """

    index_x: Tensor
    index_y: Tensor
    kinematics: SectionKinematics
    derivatives: PotentialDerivatives
    force: Tensor
    weight: Tensor
    moment_x: Tensor | None = None
    moment_y: Tensor | None = None
    linearization: PairLinearization | None = None


@dataclass
class PointForces:
    """Interaction force per unit reference length acting on each point of one beam, in that beam's frame.

    Attributes:
        xi (Tensor): Parameters of the points.
        f1 (Tensor): Component along the tangent.
        f2 (Tensor): Component along the normal.

    """

    xi: Tensor
    f1: Tensor
    f2: Tensor


def grid_layout(
    beam: BSplineBeam, density: float, end_exclusion_fraction: float = 0.0
) -> GridLayout:
    """Mid-point layout with ceil(reference length * density) points.

    Points are split over the elements proportionally to their parametric span. With end_exclusion_fraction > 0 that
    fraction of the parametric range is left without points at both ends.
    """
    boundaries = element_boundaries(beam.knots)
    lower, upper = boundaries[0].item(), boundaries[-1].item()
    margin = end_exclusion_fraction * (upper - lower)
    boundaries = torch.unique_consecutive(
        boundaries.clamp(lower + margin, upper - margin)
    )

    gauss_xi, gauss_weights = gauss_legendre_points(boundaries, beam.degree + 1)
    gauss_sqrt_g = _reference_sqrt_g(beam, beam.basis(gauss_xi, order=1))
    active_length = (gauss_weights * gauss_sqrt_g).sum().item()
    num_points = max(math.ceil(active_length * density * (1 - 1e-12)), 1)

    spans = boundaries[1:] - boundaries[:-1]
    share = num_points * spans / spans.sum()
    counts = torch.floor(share).to(torch.int64)
    # Largest remainders take the points lost to flooring.
    leftover = num_points - int(counts.sum())
    order = torch.argsort(share - counts, descending=True, stable=True)
    counts[order[:leftover]] += 1
    counts = counts.clamp(min=1)

    xi, weights = midpoint_rule_points(boundaries, counts)
    basis = beam.basis(xi, order=1)
    return GridLayout(
        beam=beam,
        xi=xi,
        weights=weights,
        basis=basis,
        reference_sqrt_g=_reference_sqrt_g(beam, basis),
    )


def _reference_sqrt_g(beam: BSplineBeam, basis: BasisEvaluation) -> Tensor:
    derivatives = axis_derivatives(
        beam, basis, torch.zeros(beam.num_dofs, dtype=REAL_DTYPE)
    )
    return vector_norm(derivatives[:, 1])


def _current_frame(layout: GridLayout, displacements: Tensor) -> SectionFrame:
    derivatives = axis_derivatives(
        layout.beam, layout.basis, layout.beam.local_displacements(displacements)
    )
    return SectionFrame.from_axis(derivatives[:, 0], derivatives[:, 1])


def build_grid(
    beams: tuple[BSplineBeam, BSplineBeam],
    displacements: Tensor,
    density: float,
    end_exclusion_fraction: float = 0.0,
    layouts: tuple[GridLayout, GridLayout] | None = None,
) -> InteractionGrid:
    """Interaction points of both beams with frames in the configuration given by the global displacements.

    Args:
        beams (tuple[BSplineBeam, BSplineBeam]): Beam x and beam y.
        displacements (Tensor): Global displacement vector (real or complex).
        density (float): Points per unit reference length.
        end_exclusion_fraction (float): Parametric fraction without points at each beam end. (Default: 0.0)
        layouts (tuple[GridLayout, GridLayout] | None): Precomputed layouts to reuse. (Default: None)

    Returns:
        grid (InteractionGrid): The grid.

    """
    if layouts is None:
        layouts = tuple(
            grid_layout(beam, density, end_exclusion_fraction) for beam in beams
        )
    return InteractionGrid(
        layouts=layouts,
        frames=tuple(_current_frame(layout, displacements) for layout in layouts),
        density=density,
    )


def find_pairs(grid: InteractionGrid, cutoff: float) -> tuple[Tensor, Tensor]:
    """Point pairs (x point, y point) with centroid distance <= cutoff, sorted lexicographically."""
    if not cutoff > 0.0:
        raise ValueError(f"Invalid cutoff value: {cutoff}. Must be > 0.0.")
    frame_x, frame_y = grid.frames
    index_x, index_y = NeighborIndex(frame_y.position, cell_size=cutoff).query_radius(
        frame_x.position, cutoff
    )
    logger.debug(f"Found {index_x.numel()} interacting point pairs within {cutoff}.")
    return index_x, index_y


def _outer(a: Tensor, b: Tensor) -> Tensor:
    return a.unsqueeze(-1) * b.unsqueeze(-2)


def _issip_pair(
    frame_x: SectionFrame,
    frame_y: SectionFrame,
    d: Tensor,
    law: PowerLawSpec | CompositeLaw,
    geometry: SectionPairGeometry,
    config: InteractionConfig,
    with_tangent: bool,
) -> tuple[SectionKinematics, PotentialDerivatives, Tensor, PairLinearization | None]:
    match config.formulation:
        case Formulation.AVERAGED:
            averaged = averaged_frame(frame_x.tangent, frame_y.tangent)
            kinematics = gap_offset(averaged, d, geometry)
            t_ref, n_ref = averaged.t_hat, averaged.n_hat
        case Formulation.STRAIGHTFORWARD:
            kinematics = gap_offset(frame_x, d, geometry)
            t_ref, n_ref = frame_x.tangent, frame_x.normal
        case _:
            raise NotImplementedError(f"{config.formulation=} is not supported.")

    derivatives = issip_derivatives(
        kinematics, law, geometry, order=2 if with_tangent else 1
    )
    tangential = 1.0 if config.include_tangential_force else 0.0
    s_alpha = kinematics.s_alpha.unsqueeze(-1)
    force = (
        tangential * derivatives.d_q1.unsqueeze(-1) * t_ref
        + s_alpha * derivatives.d_q2.unsqueeze(-1) * n_ref
    )
    if not with_tangent:
        return kinematics, derivatives, force, None

    match config.formulation:
        case Formulation.AVERAGED:
            gradients = tangent_gradients_averaged(
                frame_x, frame_y, averaged, d, kinematics
            )
            d_tref_dx1, d_tref_dy1 = frame_jacobians(frame_x, frame_y, averaged)
        case Formulation.STRAIGHTFORWARD:
            gradients = gradients_straightforward(frame_x, d, kinematics)
            d_tref_dx1, d_tref_dy1 = straightforward_jacobians(frame_x)

    # Force derivative along the gradients of q1 and q2, and with respect to the reference tangent.
    a_1 = (
        tangential * derivatives.d_q1q1.unsqueeze(-1) * t_ref
        + s_alpha * derivatives.d_q1q2.unsqueeze(-1) * n_ref
    )
    a_2 = (
        tangential * derivatives.d_q1q2.unsqueeze(-1) * t_ref
        + s_alpha * derivatives.d_q2q2.unsqueeze(-1) * n_ref
    )
    eye = torch.eye(2, dtype=REAL_DTYPE)
    quarter_turn = rotate_quarter(eye.T).T
    a_frame = (
        tangential * derivatives.d_q1.unsqueeze(-1).unsqueeze(-1) * eye
        + (kinematics.s_alpha * derivatives.d_q2).unsqueeze(-1).unsqueeze(-1)
        * quarter_turn
    )
    linearization = PairLinearization(
        d_x=_outer(a_1, t_ref) + _outer(a_2, s_alpha * n_ref),
        d_x1=_outer(a_1, gradients.d_q1_dx1)
        + _outer(a_2, gradients.d_q2_dx1)
        + a_frame @ d_tref_dx1.to(a_frame.dtype),
        d_y1=_outer(a_1, gradients.d_q1_dy1)
        + _outer(a_2, gradients.d_q2_dy1)
        + a_frame @ d_tref_dy1.to(a_frame.dtype),
    )
    return kinematics, derivatives, force, linearization


def _lssip_pair(
    d: Tensor,
    law: PowerLawSpec | CompositeLaw,
    geometry: SectionPairGeometry,
    with_tangent: bool,
) -> tuple[SectionKinematics, PotentialDerivatives, Tensor, PairLinearization | None]:
    distance = vector_norm(d)
    derivatives = lssip_derivatives(distance - geometry.radius_sum, law, geometry)
    kinematics = SectionKinematics(
        q1=torch.zeros_like(distance),
        q2=distance - geometry.radius_sum,
        q2_hat=distance,
        s_alpha=torch.ones(distance.shape, dtype=REAL_DTYPE),
    )
    direction = d / distance.unsqueeze(-1)
    force = derivatives.d_q2.unsqueeze(-1) * direction
    if not with_tangent:
        return kinematics, derivatives, force, None

    projector = _outer(direction, direction)
    d_x = derivatives.d_q2q2.unsqueeze(-1).unsqueeze(-1) * projector + (
        derivatives.d_q2 / distance
    ).unsqueeze(-1).unsqueeze(-1) * (torch.eye(2, dtype=REAL_DTYPE) - projector)
    zeros = torch.zeros_like(d_x)
    return (
        kinematics,
        derivatives,
        force,
        PairLinearization(d_x=d_x, d_x1=zeros, d_y1=zeros),
    )


def pair_force(
    grid: InteractionGrid,
    index_x: Tensor,
    index_y: Tensor,
    law: PowerLawSpec | CompositeLaw,
    geometry: SectionPairGeometry,
    config: InteractionConfig,
    with_tangent: bool = False,
) -> PairContribution:
    """Section-section forces of a batch of point pairs.

    The force is the gradient of the pair potential with respect to the position of section x, f = phi_1 t + s phi_2 n
    in the reference frame of the formulation, or phi_2 d / |d| for the gap-only law. Moment coefficients are computed
    when config.include_moments is set.

    Raises:
        InterpenetrationError: If any pair has a non-positive gap.

    """
    frame_x = grid.frames[0][index_x]
    frame_y = grid.frames[1][index_y]
    d = frame_x.position - frame_y.position

    match config.law_type:
        case InteractionLawType.ISSIP:
            kinematics, derivatives, force, linearization = _issip_pair(
                frame_x, frame_y, d, law, geometry, config, with_tangent
            )
        case InteractionLawType.LSSIP:
            kinematics, derivatives, force, linearization = _lssip_pair(
                d, law, geometry, with_tangent
            )
        case _:
            raise NotImplementedError(f"{config.law_type=} is not supported.")

    weight = (
        grid.layouts[0].quadrature_weights[index_x]
        * grid.layouts[1].quadrature_weights[index_y]
    )
    contribution = PairContribution(
        index_x=index_x,
        index_y=index_y,
        kinematics=kinematics,
        derivatives=derivatives,
        force=force,
        weight=weight,
        linearization=linearization,
    )
    if config.include_moments:
        w_x, w_y = moment_weights(geometry)
        torque = kinematics.s_alpha * (
            derivatives.d_q1 * kinematics.q2_hat - derivatives.d_q2 * kinematics.q1
        )
        contribution.moment_x = w_x * torque / frame_x.sqrt_g
        contribution.moment_y = w_y * torque / frame_y.sqrt_g
    return contribution


def _pair_chunks(
    pairs: tuple[Tensor, Tensor], chunk_size: int
) -> Iterator[tuple[slice, Tensor, Tensor]]:
    index_x, index_y = pairs
    for start in range(0, index_x.numel(), chunk_size):
        chunk = slice(start, start + chunk_size)
        yield chunk, index_x[chunk], index_y[chunk]


@dataclass
class _PointAggregates:
    force: tuple[Tensor, Tensor]
    moment: tuple[Tensor, Tensor]
    energy: Tensor


def _aggregate(
    grid: InteractionGrid,
    pairs: tuple[Tensor, Tensor],
    law: PowerLawSpec | CompositeLaw,
    geometry: SectionPairGeometry,
    config: InteractionConfig,
    on_chunk: Callable[[slice, PairContribution], None] | None = None,
) -> _PointAggregates:
    """Sums the weighted pair forces, moment coefficients and energies per point, chunk by chunk in pair order."""
    dtype = grid.frames[0].position.dtype
    force = tuple(
        torch.zeros(layout.num_points, 2, dtype=dtype) for layout in grid.layouts
    )
    moment = tuple(torch.zeros(layout.num_points, dtype=dtype) for layout in grid.layouts)
    energy = torch.zeros((), dtype=dtype)
    for chunk, index_x, index_y in _pair_chunks(pairs, config.pair_chunk_size):
        contribution = pair_force(
            grid,
            index_x,
            index_y,
            law,
            geometry,
            config,
            with_tangent=on_chunk is not None,
        )
        weighted = contribution.weight.unsqueeze(-1) * contribution.force
        force[0].index_add_(0, index_x, weighted)
        force[1].index_add_(0, index_y, -weighted)
        if config.include_moments:
            moment[0].index_add_(0, index_x, contribution.weight * contribution.moment_x)
            moment[1].index_add_(0, index_y, contribution.weight * contribution.moment_y)
        energy = energy + (contribution.weight * contribution.derivatives.value).sum()
        if on_chunk is not None:
            on_chunk(chunk, contribution)
    return _PointAggregates(force=force, moment=moment, energy=energy)


def _scatter_residual(
    grid: InteractionGrid, aggregates: _PointAggregates, residual: Tensor
) -> None:
    for layout, frame, force, moment in zip(
        grid.layouts, grid.frames, aggregates.force, aggregates.moment
    ):
        values = layout.basis.values.to(residual.dtype)
        contribution = values[:, 0].unsqueeze(-1) * force.unsqueeze(1) + values[
            :, 1
        ].unsqueeze(-1) * (moment.unsqueeze(-1) * frame.normal).unsqueeze(1)
        residual.index_add_(0, layout.dofs.reshape(-1), contribution.reshape(-1))


def assemble_interaction(
    grid: InteractionGrid,
    pairs: tuple[Tensor, Tensor],
    law: PowerLawSpec | CompositeLaw,
    geometry: SectionPairGeometry,
    config: InteractionConfig,
    num_dofs: int,
    with_tangent: bool = True,
) -> tuple[Tensor, Tensor | None]:
    """Interaction residual and tangent in the global dofs.

    The residual collects w N f on beam x and -w N f on beam y (plus the moment terms through N' when enabled). The
    tangent is the consistent linearization of the force terms; the moment terms are not linearized, so the tangent is
    inexact when moments are included. The tangent is not symmetric in general.

    Assembly runs in two stages. Pair derivatives are first summed per row point and column dof, then spread over the
    row point's basis functions in chunks of row points.

    Args:
        grid (InteractionGrid): Current interaction grid.
        pairs (tuple[Tensor, Tensor]): Pair indices from find_pairs.
        law (PowerLawSpec | CompositeLaw): Point-pair law.
        geometry (SectionPairGeometry): Radii and densities.
        config (InteractionConfig): Interaction options.
        num_dofs (int): Size of the global system.
        with_tangent (bool): Assemble the tangent. (Default: True)

    Returns:
        residual (Tensor): Shape (num_dofs,).
        tangent (Tensor | None): Shape (num_dofs, num_dofs), or None.

    """
    start_time = time.perf_counter()
    dtype = grid.frames[0].position.dtype
    residual = torch.zeros(num_dofs, dtype=dtype)
    tangent = torch.zeros(num_dofs, num_dofs, dtype=dtype) if with_tangent else None

    on_chunk = None
    if with_tangent:
        # Stage one: per side, row point x column dof x force component.
        rows = [torch.unique(index, return_inverse=True) for index in pairs]
        point_derivatives = [
            torch.zeros(row_points.numel() * num_dofs * 2, dtype=dtype)
            for row_points, _ in rows
        ]
        layout_x, layout_y = grid.layouts
        component = torch.arange(2).reshape(1, 1, 2, 1)

        def on_chunk(chunk: slice, contribution: PairContribution) -> None:
            linearization = contribution.linearization
            weight = contribution.weight.reshape(-1, 1, 1, 1)
            blocks = []
            for layout, index, position_sign, d_tangent in (
                (layout_x, contribution.index_x, 1.0, linearization.d_x1),
                (layout_y, contribution.index_y, -1.0, linearization.d_y1),
            ):
                values = layout.basis.values[index].to(dtype)
                block = weight * (
                    position_sign
                    * values[:, 0].reshape(-1, values.shape[-1], 1, 1)
                    * linearization.d_x.unsqueeze(1)
                    + values[:, 1].reshape(-1, values.shape[-1], 1, 1)
                    * d_tangent.unsqueeze(1)
                )
                blocks.append((block, layout.dofs[index]))
            for side, (_, inverse) in enumerate(rows):
                row = inverse[chunk].reshape(-1, 1, 1, 1)
                side_sign = 1.0 if side == 0 else -1.0
                for block, columns in blocks:
                    flat = (row * num_dofs + columns.unsqueeze(2)) * 2 + component
                    point_derivatives[side].index_put_(
                        (flat.reshape(-1),),
                        (side_sign * block).reshape(-1),
                        accumulate=True,
                    )

    aggregates = _aggregate(grid, pairs, law, geometry, config, on_chunk)
    _scatter_residual(grid, aggregates, residual)

    if with_tangent:
        # Stage two: spread each row point over its basis functions.
        for side, (row_points, _) in enumerate(rows):
            layout = grid.layouts[side]
            derivatives = point_derivatives[side].reshape(-1, num_dofs, 2)
            for start in range(0, row_points.numel(), _ROW_CHUNK_SIZE):
                points = row_points[start : start + _ROW_CHUNK_SIZE]
                values = layout.basis.values[points, 0].to(dtype)
                spread = values.reshape(*values.shape, 1, 1) * derivatives[
                    start : start + _ROW_CHUNK_SIZE
                ].transpose(1, 2).unsqueeze(1)
                tangent.index_add_(
                    0, layout.dofs[points].reshape(-1), spread.reshape(-1, num_dofs)
                )

    logger.debug(
        f"Interaction assembly: {pairs[0].numel()} pairs, tangent={with_tangent}, "
        f"{time.perf_counter() - start_time:.3e} s."
    )
    return residual, tangent


def interaction_energy(
    grid: InteractionGrid,
    pairs: tuple[Tensor, Tensor],
    law: PowerLawSpec | CompositeLaw,
    geometry: SectionPairGeometry,
    config: InteractionConfig,
) -> Tensor:
    """Sum of w phi over all pairs."""
    return _aggregate(grid, pairs, law, geometry, config).energy


def interaction_resultant(
    grid: InteractionGrid,
    pairs: tuple[Tensor, Tensor],
    law: PowerLawSpec | CompositeLaw,
    geometry: SectionPairGeometry,
    config: InteractionConfig,
) -> Tensor:
    """Total interaction force acting on beam x, -sum of w f over all pairs."""
    return -_aggregate(grid, pairs, law, geometry, config).force[0].sum(dim=0)


def point_forces(
    grid: InteractionGrid,
    pairs: tuple[Tensor, Tensor],
    law: PowerLawSpec | CompositeLaw,
    geometry: SectionPairGeometry,
    config: InteractionConfig,
) -> tuple[PointForces, PointForces]:
    """Interaction force per unit reference length acting on every point of beam x and beam y."""
    aggregates = _aggregate(grid, pairs, law, geometry, config)
    outputs = []
    for layout, frame, force in zip(grid.layouts, grid.frames, aggregates.force):
        per_length = -real_part(force) / layout.quadrature_weights.unsqueeze(-1)
        outputs.append(
            PointForces(
                xi=layout.xi,
                f1=(per_length * real_part(frame.tangent)).sum(dim=-1),
                f2=(per_length * real_part(frame.normal)).sum(dim=-1),
            )
        )
    return outputs[0], outputs[1]


def _gap_derivative_along_line(
    q1: np.ndarray,
    q2: float,
    law: PowerLawSpec | CompositeLaw,
    geometry: SectionPairGeometry,
) -> np.ndarray:
    q1_tensor = torch.as_tensor(np.atleast_1d(q1), dtype=REAL_DTYPE)
    kinematics = SectionKinematics.from_offset_and_gap(q1_tensor, q2, geometry)
    return issip_derivatives(kinematics, law, geometry, order=1).d_q2.numpy()


def _line_integral_reference(
    q2: float,
    half_width: float,
    law: PowerLawSpec | CompositeLaw,
    geometry: SectionPairGeometry,
) -> float:
    breakpoints = [point for point in (q2, 10 * q2, 100 * q2) if point < half_width]
    value, _ = integrate.quad(
        lambda q1: _gap_derivative_along_line(q1, q2, law, geometry)[0],
        0.0,
        half_width,
        points=breakpoints or None,
        limit=200,
        epsabs=0.0,
        epsrel=1e-12,
    )
    return 2 * value


def cutoff_error_estimate(
    q2: float,
    law: PowerLawSpec | CompositeLaw,
    geometry: SectionPairGeometry,
    cutoff: float,
) -> float:
    """Relative error of the normal force per unit length between a section and a straight parallel beam when pairs
    beyond the centroid distance cutoff are neglected.

    Returns 1.0 when the cutoff does not reach the other beam.
    """
    if not q2 > 0.0:
        raise ValueError(f"Invalid q2 value: {q2}. Must be > 0.0.")
    if not cutoff > 0.0:
        raise ValueError(f"Invalid cutoff value: {cutoff}. Must be > 0.0.")
    q2_hat = q2 + geometry.radius_sum
    if cutoff <= q2_hat:
        return 1.0
    truncated = _line_integral_reference(
        q2, math.sqrt(cutoff**2 - q2_hat**2), law, geometry
    )
    exact = cylinder_per_length_force(q2, law, geometry).item()
    return abs(truncated - exact) / abs(exact)


def integration_rule_error(
    q2: float,
    half_width: float,
    points_per_length: float,
    order: int,
    law: PowerLawSpec | CompositeLaw,
    geometry: SectionPairGeometry,
) -> float:
    """Relative error of a composite Gauss-Legendre rule integrating phi_2 over q1 in [-half_width, half_width].

    The rule uses round(2 * half_width * points_per_length / order) segments of order points each, so that the number
    of points per length matches points_per_length; order 1 is the mid-point rule.
    """
    if order not in range(1, 6):
        raise ValueError(f"Invalid order value: {order}. Must be in [1, 5].")
    segments = max(round(2 * half_width * points_per_length / order), 1)
    q1, weights = gauss_legendre_points(
        torch.linspace(-half_width, half_width, segments + 1, dtype=REAL_DTYPE), order
    )
    approximation = float(
        (weights.numpy() * _gap_derivative_along_line(q1.numpy(), q2, law, geometry)).sum()
    )
    reference = _line_integral_reference(q2, half_width, law, geometry)
    return abs(approximation - reference) / abs(reference)
