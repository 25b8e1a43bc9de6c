"""
Copyright (c) Meta Platforms, Inc. and affiliates.
All rights reserved.

This source code is licensed under the BSD-style license found in the
LICENSE file in the root directory of this source tree.

"""

from dataclasses import dataclass

import numpy as np

import torch
from commons import REAL_DTYPE

from torch import Tensor


@dataclass
class BasisEvaluation:
    """Active B-spline basis functions at a batch of parameters.

    Attributes:
        spans (Tensor): Knot span index per parameter, shape (P,). Active functions are spans - degree ... spans.
        values (Tensor): Derivatives of the active functions, shape (P, order + 1, degree + 1); values[:, k] is the
            k-th derivative with respect to the parameter.

    """

    spans: Tensor
    values: Tensor

    @property
    def first_function(self) -> Tensor:
        return self.spans - (self.values.shape[-1] - 1)

    def function_indices(self) -> Tensor:
        """Global indices of the active functions, shape (P, degree + 1)."""
        return self.first_function.unsqueeze(-1) + torch.arange(
            self.values.shape[-1], device=self.spans.device
        )


def open_uniform_knot_vector(degree: int, num_control_points: int) -> Tensor:
    """Clamped knot vector on [0, 1] with equally spaced interior knots.

    Args:
        degree (int): Polynomial degree p.
        num_control_points (int): Number of control points n >= p + 1.

    Returns:
        knots (Tensor): Knot vector of length n + p + 1.

    """
    if degree < 1:
        raise ValueError(f"Invalid degree value: {degree}. Must be >= 1.")
    if num_control_points < degree + 1:
        raise ValueError(
            f"Invalid num_control_points value: {num_control_points}. Must be >= degree + 1 = {degree + 1}."
        )
    num_elements = num_control_points - degree
    interior = torch.linspace(0.0, 1.0, num_elements + 1, dtype=REAL_DTYPE)
    return torch.cat(
        (
            torch.zeros(degree, dtype=REAL_DTYPE),
            interior,
            torch.ones(degree, dtype=REAL_DTYPE),
        )
    )


def greville_abscissae(knots: Tensor, degree: int) -> Tensor:
    """Parameters at which control points of an affine map sit on the curve."""
    num_control_points = knots.numel() - degree - 1
    windows = knots[1:].unfold(0, degree, 1)[:num_control_points]
    return windows.mean(dim=-1)


def element_boundaries(knots: Tensor) -> Tensor:
    """Distinct knot values, i.e. the boundaries of the non-empty knot spans."""
    return torch.unique_consecutive(knots)


def find_span(knots: Tensor, degree: int, xi: Tensor) -> Tensor:
    """Knot span index i with knots[i] <= xi < knots[i + 1], closed at the last knot."""
    num_control_points = knots.numel() - degree - 1
    lower, upper = knots[degree].item(), knots[num_control_points].item()
    tolerance = 1e-12 * max(upper - lower, 1.0)
    if bool(((xi < lower - tolerance) | (xi > upper + tolerance)).any()):
        raise ValueError(
            f"Invalid xi value: {xi.min().item()}..{xi.max().item()}. Must be within the knot range [{lower}, {upper}]."
        )
    spans = torch.searchsorted(knots, xi.contiguous(), right=True) - 1
    return spans.clamp(degree, num_control_points - 1)


def basis_function_derivatives(
    knots: Tensor, degree: int, xi: Tensor, order: int = 2
) -> BasisEvaluation:
    """Non-zero B-spline basis functions and their derivatives (Cox-de Boor triangle, vectorised over xi).

    Args:
        knots (Tensor): Non-decreasing knot vector.
        degree (int): Polynomial degree p.
        xi (Tensor): Parameters, shape (P,).
        order (int): Highest derivative, at most p. (Default: 2)

    Returns:
        evaluation (BasisEvaluation): Spans and the (P, order + 1, p + 1) derivative table.

    """
    if not 0 <= order <= degree:
        raise ValueError(f"Invalid order value: {order}. Must be in [0, {degree}].")
    xi = xi.to(REAL_DTYPE).reshape(-1)
    spans = find_span(knots, degree, xi)
    num_points, p = xi.shape[0], degree

    ndu = xi.new_zeros(num_points, p + 1, p + 1)
    left = xi.new_zeros(num_points, p + 1)
    right = xi.new_zeros(num_points, p + 1)
    ndu[:, 0, 0] = 1.0
    for j in range(1, p + 1):
        left[:, j] = xi - knots[spans + 1 - j]
        right[:, j] = knots[spans + j] - xi
        saved = xi.new_zeros(num_points)
        for r in range(j):
            # Lower triangle holds knot differences, upper triangle basis values.
            ndu[:, j, r] = right[:, r + 1] + left[:, j - r]
            temp = ndu[:, r, j - 1] / ndu[:, j, r]
            ndu[:, r, j] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        ndu[:, j, j] = saved

    derivatives = xi.new_zeros(num_points, order + 1, p + 1)
    derivatives[:, 0, :] = ndu[:, :, p]
    for r in range(p + 1):
        a = xi.new_zeros(num_points, 2, p + 1)
        a[:, 0, 0] = 1.0
        s1, s2 = 0, 1
        for k in range(1, order + 1):
            d = xi.new_zeros(num_points)
            rk, pk = r - k, p - k
            if r >= k:
                a[:, s2, 0] = a[:, s1, 0] / ndu[:, pk + 1, rk]
                d = a[:, s2, 0] * ndu[:, rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[:, s2, j] = (a[:, s1, j] - a[:, s1, j - 1]) / ndu[:, pk + 1, rk + j]
                d = d + a[:, s2, j] * ndu[:, rk + j, pk]
            if r <= pk:
                a[:, s2, k] = -a[:, s1, k - 1] / ndu[:, pk + 1, r]
                d = d + a[:, s2, k] * ndu[:, r, pk]
            derivatives[:, k, r] = d
            s1, s2 = s2, s1

    factor = p
    for k in range(1, order + 1):
        derivatives[:, k, :] *= factor
        factor *= p - k

    return BasisEvaluation(spans=spans, values=derivatives)


def gauss_legendre_points(
    boundaries: Tensor, points_per_element: int
) -> tuple[Tensor, Tensor]:
    """Gauss-Legendre parameters and weights on every interval between consecutive boundaries.

    Returns:
        xi (Tensor): Parameters, shape (num_elements * points_per_element,).
        weights (Tensor): Parametric weights (including the interval half length), same shape.

    """
    nodes, weights = np.polynomial.legendre.leggauss(points_per_element)
    nodes_t = torch.from_numpy(nodes).to(REAL_DTYPE)
    weights_t = torch.from_numpy(weights).to(REAL_DTYPE)
    lower, upper = boundaries[:-1], boundaries[1:]
    half_length = 0.5 * (upper - lower)
    midpoint = 0.5 * (upper + lower)
    xi = midpoint.unsqueeze(-1) + half_length.unsqueeze(-1) * nodes_t
    return xi.reshape(-1), (half_length.unsqueeze(-1) * weights_t).reshape(-1)


def midpoint_rule_points(
    boundaries: Tensor, points_per_element: Tensor
) -> tuple[Tensor, Tensor]:
    """Midpoints and widths of equal sub-segments of every interval between consecutive boundaries.

    Args:
        boundaries (Tensor): Element boundaries, shape (E + 1,).
        points_per_element (Tensor): Sub-segments per element, integer tensor of shape (E,).

    Returns:
        xi (Tensor): Midpoints in element order.
        weights (Tensor): Parametric widths of the sub-segments.

    """
    widths = (boundaries[1:] - boundaries[:-1]) / points_per_element
    element = torch.repeat_interleave(
        torch.arange(points_per_element.numel()), points_per_element
    )
    first_in_element = torch.cumsum(points_per_element, 0) - points_per_element
    local = torch.arange(element.numel()) - first_in_element[element]
    xi = boundaries[element] + (local.to(REAL_DTYPE) + 0.5) * widths[element]
    return xi, widths[element]
