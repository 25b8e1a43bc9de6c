"""
Copyright (c) Meta Platforms, Inc. and affiliates.
All rights reserved.

This source code is licensed under the BSD-style license found in the
LICENSE file in the root directory of this source tree.

"""

import logging
import math
from dataclasses import dataclass
from functools import cached_property

import torch
from commons import dot, real_part, REAL_DTYPE
from fiber_adhesion.fiber_adhesion_types import DegenerateFrameError
from fiber_adhesion.kinematics import normal_from_tangent, rotate_quarter
from fiber_adhesion.utils.bspline_basis import (
    basis_function_derivatives,
    BasisEvaluation,
    element_boundaries,
    gauss_legendre_points,
    greville_abscissae,
    open_uniform_knot_vector,
)

from torch import Tensor

logger: logging.Logger = logging.getLogger(__name__)

# Permutation symbol; d2c / (dx'_a dx''_b) = LEVI_CIVITA[a, b].
_LEVI_CIVITA: Tensor = torch.tensor([[0.0, 1.0], [-1.0, 0.0]], dtype=REAL_DTYPE)


###### DATACLASSES ######
@dataclass(kw_only=True)
class BSplineBeam:
    """Rotation-free Bernoulli-Euler beam on one clamped B-spline patch.

    Attributes:
        degree (int): Polynomial degree p >= 2.
        knots (Tensor): Clamped, non-decreasing knot vector of length n + p + 1.
        control_points (Tensor): Reference control points, shape (n, 2).
        radius (float): Radius of the circular cross section.
        youngs_modulus (float): Young's modulus E.
        dof_offset (int): Index of the first degree of freedom in the global vector. Control point i owns
            dof_offset + 2 i (horizontal) and dof_offset + 2 i + 1 (vertical). (Default: 0)

    """

    degree: int
    knots: Tensor
    control_points: Tensor
    radius: float
    youngs_modulus: float
    dof_offset: int = 0

    def __post_init__(self) -> None:
        if self.degree < 2:
            raise ValueError(f"Invalid degree value: {self.degree}. Must be >= 2.")
        self.knots = self.knots.to(REAL_DTYPE)
        self.control_points = self.control_points.to(REAL_DTYPE)
        num_control_points = self.control_points.shape[0]
        if num_control_points < self.degree + 1:
            raise ValueError(
                f"Invalid control_points value: {num_control_points} points. Must be >= degree + 1 = {self.degree + 1}."
            )
        if self.knots.numel() != num_control_points + self.degree + 1:
            raise ValueError(
                f"Invalid knots value: {self.knots.numel()} knots. Must be num_control_points + degree + 1 = {num_control_points + self.degree + 1}."
            )
        if bool((self.knots[1:] < self.knots[:-1]).any()):
            raise ValueError("Invalid knots value: Must be non-decreasing.")
        p = self.degree
        if not (
            bool((self.knots[: p + 1] == self.knots[0]).all())
            and bool((self.knots[-p - 1 :] == self.knots[-1]).all())
        ):
            raise ValueError(
                f"Invalid knots value: Must be clamped with end multiplicity degree + 1 = {p + 1}."
            )
        if not self.radius > 0.0:
            raise ValueError(f"Invalid radius value: {self.radius}. Must be > 0.0.")
        if not self.youngs_modulus > 0.0:
            raise ValueError(
                f"Invalid youngs_modulus value: {self.youngs_modulus}. Must be > 0.0."
            )

    @property
    def num_control_points(self) -> int:
        return self.control_points.shape[0]

    @property
    def num_dofs(self) -> int:
        return 2 * self.num_control_points

    @property
    def area(self) -> float:
        return math.pi * self.radius**2

    @property
    def second_moment_of_area(self) -> float:
        return math.pi * self.radius**4 / 4

    @property
    def axial_stiffness(self) -> float:
        return self.youngs_modulus * self.area

    @property
    def bending_stiffness(self) -> float:
        return self.youngs_modulus * self.second_moment_of_area

    def dof_indices(self) -> Tensor:
        return torch.arange(self.dof_offset, self.dof_offset + self.num_dofs)

    def control_point_dofs(self, function_indices: Tensor) -> Tensor:
        """Global dofs of control points, shape function_indices.shape + (2,)."""
        return self.dof_offset + 2 * function_indices.unsqueeze(-1) + torch.arange(2)

    def local_displacements(self, global_displacements: Tensor) -> Tensor:
        return global_displacements[self.dof_offset : self.dof_offset + self.num_dofs]

    def basis(self, xi: Tensor, order: int = 2) -> BasisEvaluation:
        return basis_function_derivatives(self.knots, self.degree, xi, order)

    @cached_property
    def gauss_quadrature(self) -> "BeamQuadrature":
        xi, weights = gauss_legendre_points(
            element_boundaries(self.knots), self.degree + 1
        )
        basis = self.basis(xi)
        reference = _axis_geometry(
            axis_derivatives(self, basis, torch.zeros(self.num_dofs, dtype=REAL_DTYPE))
        )
        return BeamQuadrature(
            xi=xi,
            weights=weights,
            basis=basis,
            reference_g=reference.g,
            reference_curvature=reference.curvature,
            reference_curvature_parametric=reference.curvature_parametric,
        )

    @cached_property
    def reference_length(self) -> float:
        quadrature = self.gauss_quadrature
        return (quadrature.weights * quadrature.reference_g.sqrt()).sum().item()


@dataclass
class BeamQuadrature:
    """Gauss points of a beam with their basis table and reference metric."""

    xi: Tensor
    weights: Tensor
    basis: BasisEvaluation
    reference_g: Tensor
    reference_curvature: Tensor
    reference_curvature_parametric: Tensor


@dataclass
class AxisMetric:
    """Metric and curvature of the beam axis at a batch of parameters.

    Attributes:
        g (Tensor): Squared norm of the tangent vector x,1.
        sqrt_g (Tensor): Its norm.
        tangent (Tensor): Unit tangent t, shape (P, 2).
        normal (Tensor): Unit normal n = Lambda t, shape (P, 2).
        curvature (Tensor): Signed curvature per arc length K.
        curvature_parametric (Tensor): Signed curvature per parametric coordinate, g K = x,11 . n.

    """

    g: Tensor
    sqrt_g: Tensor
    tangent: Tensor
    normal: Tensor
    curvature: Tensor
    curvature_parametric: Tensor


@dataclass
class StrainState:
    """Axis strain measures relative to the reference configuration.

    Attributes:
        eps11 (Tensor): Green-Lagrange axis strain (g - g_ref) / 2.
        kappa (Tensor): Change of the parametric curvature.
        chi (Tensor): Change of the curvature per arc length.

    """

    eps11: Tensor
    kappa: Tensor
    chi: Tensor


def straight_beam(
    start: tuple[float, float],
    end: tuple[float, float],
    degree: int,
    num_control_points: int,
    radius: float,
    youngs_modulus: float,
    dof_offset: int = 0,
) -> BSplineBeam:
    """Straight beam with uniform knots and control points at the Greville abscissae (affine parametrization)."""
    knots = open_uniform_knot_vector(degree, num_control_points)
    greville = greville_abscissae(knots, degree)
    start_t = torch.tensor(start, dtype=REAL_DTYPE)
    end_t = torch.tensor(end, dtype=REAL_DTYPE)
    return BSplineBeam(
        degree=degree,
        knots=knots,
        control_points=start_t + greville.unsqueeze(-1) * (end_t - start_t),
        radius=radius,
        youngs_modulus=youngs_modulus,
        dof_offset=dof_offset,
    )


def basis_eval(beam: BSplineBeam, xi: Tensor, order: int = 2) -> BasisEvaluation:
    """Active basis functions of the beam and their derivatives up to order at xi."""
    return beam.basis(xi, order)


def axis_derivatives(
    beam: BSplineBeam, basis: BasisEvaluation, displacements: Tensor
) -> Tensor:
    """Current position, x,1 and x,11 at the basis parameters, shape (P, 3, 2).

    Args:
        beam (BSplineBeam): The beam.
        basis (BasisEvaluation): Basis table with at least second derivatives.
        displacements (Tensor): Beam-local control point displacements, shape (2 n,). May be complex.

    """
    points = beam.control_points + displacements.reshape(-1, 2)
    active = points[basis.function_indices()]
    return torch.einsum("pkf,pfj->pkj", basis.values[:, :3].to(active.dtype), active)


def _axis_geometry(derivatives: Tensor) -> AxisMetric:
    x1, x11 = derivatives[:, 1], derivatives[:, 2]
    g = dot(x1, x1)
    sqrt_g = torch.sqrt(g)
    if bool((real_part(sqrt_g) < 1e-12).any()):
        raise DegenerateFrameError(
            f"Degenerate beam axis: min sqrt(g) = {real_part(sqrt_g).min().item()} < 1e-12."
        )
    tangent = x1 / sqrt_g.unsqueeze(-1)
    normal = normal_from_tangent(tangent)
    curvature_parametric = dot(x11, normal)
    return AxisMetric(
        g=g,
        sqrt_g=sqrt_g,
        tangent=tangent,
        normal=normal,
        curvature=curvature_parametric / g,
        curvature_parametric=curvature_parametric,
    )


def axis_metric(beam: BSplineBeam, displacements: Tensor, xi: Tensor) -> AxisMetric:
    """Metric, frame and curvature of the current axis at xi."""
    return _axis_geometry(axis_derivatives(beam, beam.basis(xi), displacements))


def strains(beam: BSplineBeam, displacements: Tensor, xi: Tensor) -> StrainState:
    basis = beam.basis(xi)
    current = _axis_geometry(axis_derivatives(beam, basis, displacements))
    reference = _axis_geometry(
        axis_derivatives(beam, basis, torch.zeros(beam.num_dofs, dtype=REAL_DTYPE))
    )
    return StrainState(
        eps11=(current.g - reference.g) / 2,
        kappa=current.curvature_parametric - reference.curvature_parametric,
        chi=current.curvature - reference.curvature,
    )


def stress_outputs(
    beam: BSplineBeam, displacements: Tensor, xi: Tensor
) -> tuple[Tensor, Tensor]:
    """Axial stress resultant N = EA eps_a and stress couple M = EI chi at xi."""
    basis = beam.basis(xi)
    current = _axis_geometry(axis_derivatives(beam, basis, displacements))
    reference = _axis_geometry(
        axis_derivatives(beam, basis, torch.zeros(beam.num_dofs, dtype=REAL_DTYPE))
    )
    axial_strain = (current.g - reference.g) / (2 * reference.g)
    return (
        beam.axial_stiffness * axial_strain,
        beam.bending_stiffness * (current.curvature - reference.curvature),
    )


def internal_energy(beam: BSplineBeam, displacements: Tensor) -> Tensor:
    """Strain energy 1/2 int (EA eps_a^2 + EI chi^2) ds over the reference axis."""
    quadrature = beam.gauss_quadrature
    current = _axis_geometry(
        axis_derivatives(beam, quadrature.basis, displacements)
    )
    axial_strain = (current.g - quadrature.reference_g) / (2 * quadrature.reference_g)
    chi = current.curvature - quadrature.reference_curvature
    weight = quadrature.weights * quadrature.reference_g.sqrt()
    return 0.5 * (
        weight
        * (beam.axial_stiffness * axial_strain**2 + beam.bending_stiffness * chi**2)
    ).sum()


def internal_forces_and_tangent(
    beam: BSplineBeam, displacements: Tensor, with_tangent: bool = True
) -> tuple[Tensor, Tensor | None]:
    """Gradient and Hessian of the strain energy with respect to the beam-local control point displacements.

    Args:
        beam (BSplineBeam): The beam.
        displacements (Tensor): Beam-local displacements, shape (2 n,). Complex inputs propagate.
        with_tangent (bool): Also assemble the Hessian. (Default: True)

    Returns:
        residual (Tensor): Internal force vector, shape (2 n,).
        tangent (Tensor | None): Symmetric stiffness matrix, shape (2 n, 2 n), or None.

    """
    quadrature = beam.gauss_quadrature
    basis = quadrature.basis
    dtype = torch.promote_types(displacements.dtype, REAL_DTYPE)
    d_basis = basis.values[:, 1].to(dtype)
    dd_basis = basis.values[:, 2].to(dtype)
    num_points, num_functions = d_basis.shape
    local_size = 2 * num_functions

    derivatives = axis_derivatives(beam, basis, displacements.to(dtype))
    x1, x11 = derivatives[:, 1], derivatives[:, 2]
    g = dot(x1, x1)
    c = dot(x11, rotate_quarter(x1))
    g_ref = quadrature.reference_g
    axial_strain = (g - g_ref) / (2 * g_ref)
    chi = c * g**-1.5 - quadrature.reference_curvature
    weight = quadrature.weights * g_ref.sqrt()

    # First variations per local dof (point, function, direction), flattened to (point, 2 * function).
    d_g = (2 * d_basis.unsqueeze(-1) * x1.unsqueeze(1)).reshape(num_points, local_size)
    d_c = (
        d_basis.unsqueeze(-1) * (-rotate_quarter(x11)).unsqueeze(1)
        + dd_basis.unsqueeze(-1) * rotate_quarter(x1).unsqueeze(1)
    ).reshape(num_points, local_size)
    d_strain = d_g / (2 * g_ref).unsqueeze(-1)
    g_15, g_25 = (g**-1.5).unsqueeze(-1), (g**-2.5).unsqueeze(-1)
    d_curvature = g_15 * d_c - 1.5 * c.unsqueeze(-1) * g_25 * d_g

    axial = beam.axial_stiffness * axial_strain
    bending = beam.bending_stiffness * chi
    local_residual = weight.unsqueeze(-1) * (
        axial.unsqueeze(-1) * d_strain + bending.unsqueeze(-1) * d_curvature
    )

    local_dofs = (
        2 * basis.function_indices().unsqueeze(-1) + torch.arange(2)
    ).reshape(num_points, local_size)
    residual = torch.zeros(beam.num_dofs, dtype=dtype).index_add_(
        0, local_dofs.reshape(-1), local_residual.reshape(-1)
    )
    if not with_tangent:
        return residual, None

    eye = torch.eye(2, dtype=dtype)
    dd_g = 2 * torch.einsum("pi,pj,ab->piajb", d_basis, d_basis, eye).reshape(
        num_points, local_size, local_size
    )
    dd_c = torch.einsum(
        "pij,ab->piajb",
        d_basis.unsqueeze(-1) * dd_basis.unsqueeze(1)
        - dd_basis.unsqueeze(-1) * d_basis.unsqueeze(1),
        _LEVI_CIVITA.to(dtype),
    ).reshape(num_points, local_size, local_size)

    def outer(a: Tensor, b: Tensor) -> Tensor:
        return a.unsqueeze(-1) * b.unsqueeze(-2)

    g_35 = (g**-3.5).unsqueeze(-1).unsqueeze(-1)
    c_ = c.unsqueeze(-1).unsqueeze(-1)
    dd_curvature = (
        g_15.unsqueeze(-1) * dd_c
        - 1.5 * g_25.unsqueeze(-1) * (outer(d_c, d_g) + outer(d_g, d_c))
        + 3.75 * c_ * g_35 * outer(d_g, d_g)
        - 1.5 * c_ * g_25.unsqueeze(-1) * dd_g
    )
    local_tangent = weight.unsqueeze(-1).unsqueeze(-1) * (
        beam.axial_stiffness
        * (
            outer(d_strain, d_strain)
            + axial_strain.unsqueeze(-1).unsqueeze(-1)
            * dd_g
            / (2 * g_ref).unsqueeze(-1).unsqueeze(-1)
        )
        + beam.bending_stiffness
        * (outer(d_curvature, d_curvature) + chi.unsqueeze(-1).unsqueeze(-1) * dd_curvature)
    )
    rows = local_dofs.unsqueeze(-1).expand(-1, -1, local_size)
    cols = local_dofs.unsqueeze(-2).expand(-1, local_size, -1)
    tangent = torch.zeros(beam.num_dofs, beam.num_dofs, dtype=dtype).index_put_(
        (rows.reshape(-1), cols.reshape(-1)), local_tangent.reshape(-1), accumulate=True
    )
    return residual, tangent
