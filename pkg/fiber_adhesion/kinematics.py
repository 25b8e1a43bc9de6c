"""
Copyright (c) Meta Platforms, Inc. and affiliates.
All rights reserved.

This source code is licensed under the BSD-style license found in the
LICENSE file in the root directory of this source tree.

"""

import logging
from dataclasses import dataclass

import torch
from commons import dot, real_part, REAL_DTYPE, vector_norm
from fiber_adhesion.fiber_adhesion_types import (
    DegenerateFrameError,
    InterpenetrationError,
    SectionKinematics,
    SectionPairGeometry,
)

from torch import Tensor

logger: logging.Logger = logging.getLogger(__name__)

DEGENERATE_FRAME_THRESHOLD: float = 1e-8


###### DATACLASSES ######
@dataclass
class SectionFrame:
    """Local frame of one beam at a batch of cross sections.

    Attributes:
        position (Tensor): Centroid positions, shape (P, 2).
        tangent (Tensor): Unit tangents t, shape (P, 2).
        normal (Tensor): Unit normals n = Lambda t, shape (P, 2).
        sqrt_g (Tensor): Norm of the tangent vector x,1, shape (P,).

    """

    position: Tensor
    tangent: Tensor
    normal: Tensor
    sqrt_g: Tensor

    @classmethod
    def from_axis(cls, position: Tensor, tangent_vector: Tensor) -> "SectionFrame":
        sqrt_g = vector_norm(tangent_vector)
        if bool((real_part(sqrt_g) < 1e-12).any()):
            raise DegenerateFrameError(
                f"Degenerate beam axis: min sqrt(g) = {real_part(sqrt_g).min().item()} < 1e-12."
            )
        tangent = tangent_vector / sqrt_g.unsqueeze(-1)
        return cls(
            position=position,
            tangent=tangent,
            normal=normal_from_tangent(tangent),
            sqrt_g=sqrt_g,
        )

    def __getitem__(self, index: Tensor) -> "SectionFrame":
        return SectionFrame(
            position=self.position[index],
            tangent=self.tangent[index],
            normal=self.normal[index],
            sqrt_g=self.sqrt_g[index],
        )


@dataclass
class AveragedFrame:
    """Frame spanned by the normalized sum of the tangents of two cross sections.

    Attributes:
        t_hat (Tensor): Unit averaged tangent, shape (P, 2).
        n_hat (Tensor): Unit averaged normal Lambda t_hat, shape (P, 2).
        t_xy (Tensor): Un-normalized sum t_x +- t_y, shape (P, 2).
        t_xy_sq (Tensor): Squared norm of t_xy, shape (P,).
        flipped (Tensor): Boolean, True where t_y was rotated by pi before summation, shape (P,).

    """

    t_hat: Tensor
    n_hat: Tensor
    t_xy: Tensor
    t_xy_sq: Tensor
    flipped: Tensor

    @property
    def sigma(self) -> Tensor:
        """Sign applied to t_y, -1 where flipped."""
        return 1.0 - 2.0 * self.flipped.to(REAL_DTYPE)


@dataclass
class GapOffsetGradients:
    """First derivatives of the offset q1 and the gap q2.

    Position gradients are taken with the frame held fixed; tangent gradients are with respect to the tangent
    vectors x,1 and y,1 (per unit parameter). All fields have shape (P, 2).

    """

    d_q1_dx: Tensor
    d_q2_dx: Tensor
    d_q1_dy: Tensor
    d_q2_dy: Tensor
    d_q1_dx1: Tensor
    d_q2_dx1: Tensor
    d_q1_dy1: Tensor
    d_q2_dy1: Tensor


def rotate_quarter(v: Tensor) -> Tensor:
    """Anti-clockwise rotation by 90 degrees, Lambda = [[0, -1], [1, 0]], over the trailing axis."""
    return torch.stack((-v[..., 1], v[..., 0]), dim=-1)


def rotate_quarter_transpose(v: Tensor) -> Tensor:
    return torch.stack((v[..., 1], -v[..., 0]), dim=-1)


def normal_from_tangent(t: Tensor) -> Tensor:
    return rotate_quarter(t)


def averaged_frame(t_x: Tensor, t_y: Tensor) -> AveragedFrame:
    """Averaged frame of two unit tangents; t_y is flipped where the tangents point into opposite half planes.

    Raises:
        DegenerateFrameError: If |t_x +- t_y| < 1e-8 after flipping.

    """
    flipped = real_part(dot(t_x, t_y)) < 0
    sigma = 1.0 - 2.0 * flipped.to(REAL_DTYPE)
    t_xy = t_x + sigma.unsqueeze(-1) * t_y
    t_xy_sq = dot(t_xy, t_xy)
    t_xy_norm = torch.sqrt(t_xy_sq)
    if bool((real_part(t_xy_norm) < DEGENERATE_FRAME_THRESHOLD).any()):
        raise DegenerateFrameError(
            f"Averaged frame is degenerate: min |t_x + t_y| = {real_part(t_xy_norm).min().item()} < {DEGENERATE_FRAME_THRESHOLD}."
        )
    t_hat = t_xy / t_xy_norm.unsqueeze(-1)
    return AveragedFrame(
        t_hat=t_hat,
        n_hat=normal_from_tangent(t_hat),
        t_xy=t_xy,
        t_xy_sq=t_xy_sq,
        flipped=flipped,
    )


def _reference_axes(frame: AveragedFrame | SectionFrame) -> tuple[Tensor, Tensor]:
    match frame:
        case AveragedFrame():
            return frame.t_hat, frame.n_hat
        case SectionFrame():
            return frame.tangent, frame.normal
        case _:
            raise NotImplementedError(f"{type(frame)=} is not supported.")


def gap_offset(
    frame: AveragedFrame | SectionFrame, d: Tensor, geometry: SectionPairGeometry
) -> SectionKinematics:
    """Offset and gap of section pairs from the centroid distance d = x - y.

    Args:
        frame (AveragedFrame | SectionFrame): Reference frame; the averaged frame or the frame of beam x.
        d (Tensor): Centroid distance vectors, shape (P, 2).
        geometry (SectionPairGeometry): Radii of the two sections.

    Returns:
        kinematics (SectionKinematics): q1 = d . t, q2_hat = |d . n|, s_alpha = sign(d . n), q2 = q2_hat - R_x - R_y.

    Raises:
        InterpenetrationError: If any gap is not positive.

    """
    t_ref, n_ref = _reference_axes(frame)
    normal_projection = dot(d, n_ref)
    s_alpha = torch.where(real_part(normal_projection) >= 0, 1.0, -1.0).to(REAL_DTYPE)
    q2_hat = s_alpha * normal_projection
    q2 = q2_hat - geometry.radius_sum
    if bool((real_part(q2) <= 0).any()):
        raise InterpenetrationError(
            f"Cross sections interpenetrate: min q2 = {real_part(q2).min().item()} <= 0."
        )
    return SectionKinematics(q1=dot(d, t_ref), q2=q2, q2_hat=q2_hat, s_alpha=s_alpha)


def position_gradients_averaged(
    frame: AveragedFrame, s_alpha: Tensor
) -> tuple[Tensor, Tensor, Tensor, Tensor]:
    """Frozen-frame gradients (grad_x q1, grad_x q2, grad_y q1, grad_y q2)."""
    d_q1_dx = frame.t_hat
    d_q2_dx = s_alpha.unsqueeze(-1) * frame.n_hat
    return d_q1_dx, d_q2_dx, -d_q1_dx, -d_q2_dx


def _projector(v: Tensor) -> Tensor:
    return v.unsqueeze(-1) * v.unsqueeze(-2)


def frame_jacobians(
    frame_x: SectionFrame, frame_y: SectionFrame, averaged: AveragedFrame
) -> tuple[Tensor, Tensor]:
    """Derivatives of t_hat with respect to the tangent vectors x,1 and y,1, shape (P, 2, 2) each.

    d t_hat / d x,1 = (n_hat n_hat^T / |t_xy|) (n_x n_x^T / sqrt(g_x)), and likewise for y with the flip sign.
    """
    t_xy_norm = torch.sqrt(averaged.t_xy_sq).unsqueeze(-1).unsqueeze(-1)
    normalization = _projector(averaged.n_hat) / t_xy_norm
    d_that_dx1 = normalization @ (
        _projector(frame_x.normal) / frame_x.sqrt_g.unsqueeze(-1).unsqueeze(-1)
    )
    d_that_dy1 = averaged.sigma.unsqueeze(-1).unsqueeze(-1) * (
        normalization
        @ (_projector(frame_y.normal) / frame_y.sqrt_g.unsqueeze(-1).unsqueeze(-1))
    )
    return d_that_dx1, d_that_dy1


def _transpose_apply(jacobian: Tensor, v: Tensor) -> Tensor:
    dtype = torch.promote_types(jacobian.dtype, v.dtype)
    return torch.einsum("pij,pi->pj", jacobian.to(dtype), v.to(dtype))


def tangent_gradients_averaged(
    frame_x: SectionFrame,
    frame_y: SectionFrame,
    averaged: AveragedFrame,
    d: Tensor,
    kinematics: SectionKinematics,
) -> GapOffsetGradients:
    """All gap and offset gradients in the averaged frame, including those with respect to both tangent vectors."""
    d_q1_dx, d_q2_dx, d_q1_dy, d_q2_dy = position_gradients_averaged(
        averaged, kinematics.s_alpha
    )
    d_that_dx1, d_that_dy1 = frame_jacobians(frame_x, frame_y, averaged)
    # d n_hat = Lambda d t_hat, so q2_hat = s d . n_hat picks up Lambda^T d.
    rotated_d = kinematics.s_alpha.unsqueeze(-1) * rotate_quarter_transpose(d)
    return GapOffsetGradients(
        d_q1_dx=d_q1_dx,
        d_q2_dx=d_q2_dx,
        d_q1_dy=d_q1_dy,
        d_q2_dy=d_q2_dy,
        d_q1_dx1=_transpose_apply(d_that_dx1, d),
        d_q2_dx1=_transpose_apply(d_that_dx1, rotated_d),
        d_q1_dy1=_transpose_apply(d_that_dy1, d),
        d_q2_dy1=_transpose_apply(d_that_dy1, rotated_d),
    )


def gradients_straightforward(
    frame_x: SectionFrame, d: Tensor, kinematics: SectionKinematics
) -> GapOffsetGradients:
    """Gap and offset gradients in the frame of beam x; the tangent of beam y does not enter."""
    s_alpha = kinematics.s_alpha.unsqueeze(-1)
    scale = (s_alpha / frame_x.sqrt_g.unsqueeze(-1)) * frame_x.normal
    zeros = torch.zeros_like(scale)
    return GapOffsetGradients(
        d_q1_dx=frame_x.tangent,
        d_q2_dx=s_alpha * frame_x.normal,
        d_q1_dy=-frame_x.tangent,
        d_q2_dy=-s_alpha * frame_x.normal,
        d_q1_dx1=kinematics.q2_hat.unsqueeze(-1) * scale,
        d_q2_dx1=-kinematics.q1.unsqueeze(-1) * scale,
        d_q1_dy1=zeros,
        d_q2_dy1=zeros,
    )


def straightforward_jacobians(frame_x: SectionFrame) -> tuple[Tensor, Tensor]:
    """Counterpart of frame_jacobians for the frame of beam x."""
    d_t_dx1 = _projector(frame_x.normal) / frame_x.sqrt_g.unsqueeze(-1).unsqueeze(-1)
    return d_t_dx1, torch.zeros_like(d_t_dx1)


def moment_weights(geometry: SectionPairGeometry) -> tuple[float, float]:
    """Shares of the interaction moment carried by sections x and y, proportional to their radii."""
    w_x = geometry.radius_x / geometry.radius_sum
    return w_x, 1.0 - w_x
