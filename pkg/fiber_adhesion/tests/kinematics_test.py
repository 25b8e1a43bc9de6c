"""
Copyright (c) Meta Platforms, Inc. and affiliates.
All rights reserved.

This source code is licensed under the BSD-style license found in the
LICENSE file in the root directory of this source tree.

"""

import math
import re
import unittest

import torch
from commons import COMPLEX_DTYPE, dot, REAL_DTYPE
from fiber_adhesion.fiber_adhesion_types import (
    DefaultSectionPairGeometry,
    DegenerateFrameError,
    InterpenetrationError,
    SectionKinematics,
    SectionPairGeometry,
)
from fiber_adhesion.kinematics import (
    averaged_frame,
    gap_offset,
    gradients_straightforward,
    moment_weights,
    normal_from_tangent,
    position_gradients_averaged,
    SectionFrame,
    tangent_gradients_averaged,
)
from torch import Tensor
from torch.testing._internal.common_utils import (
    instantiate_parametrized_tests,
    parametrize,
)


def _unit(angle: float) -> Tensor:
    return torch.tensor([[math.cos(angle), math.sin(angle)]], dtype=REAL_DTYPE)


def _frame(tangent_vector: Tensor) -> SectionFrame:
    return SectionFrame.from_axis(torch.zeros_like(tangent_vector), tangent_vector)


def _averaged_kinematics(x1: Tensor, y1: Tensor, d: Tensor) -> SectionKinematics:
    averaged = averaged_frame(_frame(x1).tangent, _frame(y1).tangent)
    return gap_offset(averaged, d, DefaultSectionPairGeometry)


def _configuration(angle_x: float, angle_y: float) -> tuple[Tensor, Tensor, Tensor]:
    """Tangent vectors of both beams and a centroid distance with gap 0.005 and offset 0.01."""
    x1, y1 = 2.5 * _unit(angle_x), 0.7 * _unit(angle_y)
    averaged = averaged_frame(_frame(x1).tangent, _frame(y1).tangent)
    d = 0.045 * averaged.n_hat + 0.01 * averaged.t_hat
    return x1, y1, d


class NormalFromTangentTest(unittest.TestCase):
    def test_quarter_turns(self) -> None:
        torch.testing.assert_close(
            normal_from_tangent(torch.tensor([1.0, 0.0], dtype=REAL_DTYPE)),
            torch.tensor([0.0, 1.0], dtype=REAL_DTYPE),
        )
        torch.testing.assert_close(
            normal_from_tangent(torch.tensor([0.0, 1.0], dtype=REAL_DTYPE)),
            torch.tensor([-1.0, 0.0], dtype=REAL_DTYPE),
        )

    def test_unit_and_orthogonal(self) -> None:
        t = _unit(0.83)
        n = normal_from_tangent(t)
        self.assertAlmostEqual(dot(n, n).item(), 1.0, places=15)
        self.assertAlmostEqual(dot(n, t).item(), 0.0, places=15)


class AveragedFrameTest(unittest.TestCase):
    def test_identical_tangents(self) -> None:
        frame = averaged_frame(_unit(0.0), _unit(0.0))
        torch.testing.assert_close(frame.t_hat, _unit(0.0))
        self.assertFalse(bool(frame.flipped.item()))

    def test_bisector(self) -> None:
        frame = averaged_frame(_unit(0.0), _unit(math.pi / 2))
        torch.testing.assert_close(frame.t_hat, _unit(math.pi / 4))
        torch.testing.assert_close(frame.n_hat, _unit(3 * math.pi / 4))

    def test_opposed_tangents_are_flipped(self) -> None:
        t_x = torch.tensor([[1.0, 0.0]], dtype=REAL_DTYPE)
        t_y = torch.tensor([[-0.8, 0.6]], dtype=REAL_DTYPE)
        frame = averaged_frame(t_x, t_y)
        self.assertTrue(bool(frame.flipped.item()))
        self.assertGreater(dot(frame.t_hat, t_x).item(), 0.0)
        self.assertAlmostEqual(dot(frame.t_hat, frame.t_hat).item(), 1.0, places=15)
        torch.testing.assert_close(frame.t_xy, torch.tensor([[1.8, -0.6]], dtype=REAL_DTYPE))

    def test_degenerate(self) -> None:
        zeros = torch.zeros(1, 2, dtype=REAL_DTYPE)
        self.assertRaisesRegex(
            DegenerateFrameError,
            re.escape("Averaged frame is degenerate"),
            averaged_frame,
            zeros,
            zeros,
        )


@instantiate_parametrized_tests
class GapOffsetTest(unittest.TestCase):
    def test_normal_distance(self) -> None:
        frame = _frame(_unit(0.0))
        kinematics = gap_offset(
            frame, torch.tensor([[0.0, 0.043]], dtype=REAL_DTYPE), DefaultSectionPairGeometry
        )
        self.assertEqual(kinematics.q1.item(), 0.0)
        self.assertAlmostEqual(kinematics.q2.item(), 0.003, places=15)
        self.assertEqual(kinematics.s_alpha.item(), 1.0)

    def test_reversed_distance(self) -> None:
        x1, y1, d = _configuration(0.2, 0.4)
        forward = _averaged_kinematics(x1, y1, d)
        backward = _averaged_kinematics(x1, y1, -d)
        torch.testing.assert_close(backward.q1, -forward.q1)
        torch.testing.assert_close(backward.q2, forward.q2)
        torch.testing.assert_close(backward.s_alpha, -forward.s_alpha)

    def test_matches_explicit_projections(self) -> None:
        frame = _frame(3.0 * _unit(1.1))
        d = torch.tensor([[-0.05, 0.02]], dtype=REAL_DTYPE)
        kinematics = gap_offset(frame, d, DefaultSectionPairGeometry)
        t = (math.cos(1.1), math.sin(1.1))
        normal_projection = -0.05 * -t[1] + 0.02 * t[0]
        self.assertAlmostEqual(kinematics.q1.item(), -0.05 * t[0] + 0.02 * t[1], places=15)
        self.assertAlmostEqual(kinematics.q2_hat.item(), abs(normal_projection), places=15)
        self.assertEqual(kinematics.s_alpha.item(), math.copysign(1.0, normal_projection))
        torch.testing.assert_close(kinematics.q2_hat - kinematics.q2, torch.tensor([0.04], dtype=REAL_DTYPE))

    def test_interpenetration(self) -> None:
        self.assertRaisesRegex(
            InterpenetrationError,
            re.escape("Cross sections interpenetrate"),
            gap_offset,
            _frame(_unit(0.0)),
            torch.tensor([[0.1, 0.039]], dtype=REAL_DTYPE),
            DefaultSectionPairGeometry,
        )

    @parametrize("rotation", (0.4, -2.0, math.pi))
    def test_rigid_rotation_invariance(self, rotation: float) -> None:
        x1, y1, d = _configuration(0.2, 2.9)
        cos, sin = math.cos(rotation), math.sin(rotation)
        matrix = torch.tensor([[cos, -sin], [sin, cos]], dtype=REAL_DTYPE)
        original = _averaged_kinematics(x1, y1, d)
        rotated = _averaged_kinematics(x1 @ matrix.T, y1 @ matrix.T, d @ matrix.T)
        torch.testing.assert_close(rotated.q1, original.q1, rtol=0.0, atol=1e-12)
        torch.testing.assert_close(rotated.q2, original.q2, rtol=0.0, atol=1e-12)
        torch.testing.assert_close(rotated.s_alpha, original.s_alpha)

    def test_parallel_sections_agree_between_formulations(self) -> None:
        x1 = 1.3 * _unit(0.7)
        d = torch.tensor([[-0.03, 0.05]], dtype=REAL_DTYPE)
        straightforward = gap_offset(_frame(x1), d, DefaultSectionPairGeometry)
        averaged = _averaged_kinematics(x1, 4.0 * _unit(0.7), d)
        for name in ("q1", "q2", "q2_hat", "s_alpha"):
            torch.testing.assert_close(
                getattr(averaged, name), getattr(straightforward, name), rtol=0.0, atol=1e-12
            )


@instantiate_parametrized_tests
class AveragedGradientsTest(unittest.TestCase):
    def test_position_gradients(self) -> None:
        x1, y1, d = _configuration(0.3, 0.9)
        averaged = averaged_frame(_frame(x1).tangent, _frame(y1).tangent)
        kinematics = gap_offset(averaged, d, DefaultSectionPairGeometry)
        d_q1_dx, d_q2_dx, d_q1_dy, d_q2_dy = position_gradients_averaged(
            averaged, kinematics.s_alpha
        )
        torch.testing.assert_close(d_q1_dy, -d_q1_dx, rtol=0.0, atol=0.0)
        torch.testing.assert_close(d_q2_dy, -d_q2_dx, rtol=0.0, atol=0.0)
        self.assertAlmostEqual(dot(d_q1_dx, d_q2_dx).item(), 0.0, places=15)

        h = 1e-7
        for i in range(2):
            step = torch.zeros(1, 2, dtype=REAL_DTYPE)
            step[0, i] = h
            plus = gap_offset(averaged, d + step, DefaultSectionPairGeometry)
            minus = gap_offset(averaged, d - step, DefaultSectionPairGeometry)
            self.assertAlmostEqual(((plus.q1 - minus.q1) / (2 * h)).item(), d_q1_dx[0, i].item(), delta=1e-8)
            self.assertAlmostEqual(((plus.q2 - minus.q2) / (2 * h)).item(), d_q2_dx[0, i].item(), delta=1e-8)

    @parametrize(
        "angle_x, angle_y",
        ((0.3, 0.5), (0.1, 3.0), (1.0, -0.2), (0.0, 0.0), (-0.4, -2.2)),
    )
    def test_tangent_gradients_match_finite_differences(
        self, angle_x: float, angle_y: float
    ) -> None:
        x1, y1, d = _configuration(angle_x, angle_y)
        frame_x, frame_y = _frame(x1), _frame(y1)
        averaged = averaged_frame(frame_x.tangent, frame_y.tangent)
        gradients = tangent_gradients_averaged(
            frame_x, frame_y, averaged, d, gap_offset(averaged, d, DefaultSectionPairGeometry)
        )
        h = 1e-6
        for i in range(2):
            step = torch.zeros(1, 2, dtype=REAL_DTYPE)
            step[0, i] = h
            for perturbed, d_q1, d_q2 in (
                (lambda s: (x1 + s, y1), gradients.d_q1_dx1, gradients.d_q2_dx1),
                (lambda s: (x1, y1 + s), gradients.d_q1_dy1, gradients.d_q2_dy1),
            ):
                plus = _averaged_kinematics(*perturbed(step), d)
                minus = _averaged_kinematics(*perturbed(-step), d)
                self.assertAlmostEqual(
                    ((plus.q1 - minus.q1) / (2 * h)).item(), d_q1[0, i].item(), delta=1e-9
                )
                self.assertAlmostEqual(
                    ((plus.q2 - minus.q2) / (2 * h)).item(), d_q2[0, i].item(), delta=1e-9
                )

    @parametrize("angle_y", (0.6, 2.7))
    def test_swapping_beams_swaps_tangent_gradients(self, angle_y: float) -> None:
        x1, y1, d = _configuration(0.1, angle_y)
        frame_x, frame_y = _frame(x1), _frame(y1)

        def gradients(first: SectionFrame, second: SectionFrame, distance: Tensor):
            averaged = averaged_frame(first.tangent, second.tangent)
            kinematics = gap_offset(averaged, distance, DefaultSectionPairGeometry)
            return tangent_gradients_averaged(first, second, averaged, distance, kinematics), averaged

        original, averaged = gradients(frame_x, frame_y, d)
        swapped, _ = gradients(frame_y, frame_x, -d)
        sigma = averaged.sigma.unsqueeze(-1)
        torch.testing.assert_close(swapped.d_q2_dx1, original.d_q2_dy1, rtol=1e-12, atol=1e-15)
        torch.testing.assert_close(swapped.d_q2_dy1, original.d_q2_dx1, rtol=1e-12, atol=1e-15)
        torch.testing.assert_close(swapped.d_q1_dx1, -sigma * original.d_q1_dy1, rtol=1e-12, atol=1e-15)

    def test_gradients_are_finite(self) -> None:
        generator = torch.Generator().manual_seed(0)
        angles = 2 * math.pi * torch.rand(50, 2, dtype=REAL_DTYPE, generator=generator)
        x1 = torch.stack((angles[:, 0].cos(), angles[:, 0].sin()), dim=-1)
        y1 = 3.0 * torch.stack((angles[:, 1].cos(), angles[:, 1].sin()), dim=-1)
        frame_x, frame_y = _frame(x1), _frame(y1)
        averaged = averaged_frame(frame_x.tangent, frame_y.tangent)
        d = 0.06 * averaged.n_hat - 0.02 * averaged.t_hat
        gradients = tangent_gradients_averaged(
            frame_x, frame_y, averaged, d, gap_offset(averaged, d, DefaultSectionPairGeometry)
        )
        for name in ("d_q1_dx1", "d_q2_dx1", "d_q1_dy1", "d_q2_dy1"):
            self.assertTrue(bool(torch.isfinite(getattr(gradients, name)).all()))


class StraightforwardGradientsTest(unittest.TestCase):
    def test_beam_y_tangent_does_not_enter(self) -> None:
        x1 = 2.0 * _unit(0.4)
        frame_x = _frame(x1)
        d = 0.05 * frame_x.normal + 0.02 * frame_x.tangent
        gradients = gradients_straightforward(
            frame_x, d, gap_offset(frame_x, d, DefaultSectionPairGeometry)
        )
        torch.testing.assert_close(gradients.d_q1_dy1, torch.zeros(1, 2, dtype=REAL_DTYPE), rtol=0.0, atol=0.0)
        torch.testing.assert_close(gradients.d_q2_dy1, torch.zeros(1, 2, dtype=REAL_DTYPE), rtol=0.0, atol=0.0)
        torch.testing.assert_close(gradients.d_q1_dy, -gradients.d_q1_dx, rtol=0.0, atol=0.0)

    def test_zero_offset_has_no_gap_rotation_gradient(self) -> None:
        frame_x = _frame(2.0 * _unit(0.4))
        d = -0.05 * frame_x.normal
        gradients = gradients_straightforward(
            frame_x, d, gap_offset(frame_x, d, DefaultSectionPairGeometry)
        )
        torch.testing.assert_close(gradients.d_q2_dx1, torch.zeros(1, 2, dtype=REAL_DTYPE), rtol=0.0, atol=1e-17)

    def test_complex_step_derivatives(self) -> None:
        x1 = 1.7 * _unit(-0.3)
        frame_x = _frame(x1)
        d = -0.047 * frame_x.normal + 0.013 * frame_x.tangent
        gradients = gradients_straightforward(
            frame_x, d, gap_offset(frame_x, d, DefaultSectionPairGeometry)
        )
        h = 1e-30
        for i in range(2):
            step = torch.zeros(1, 2, dtype=COMPLEX_DTYPE)
            step[0, i] = 1j * h
            perturbed = gap_offset(
                _frame(x1.to(COMPLEX_DTYPE) + step), d.to(COMPLEX_DTYPE), DefaultSectionPairGeometry
            )
            self.assertAlmostEqual((perturbed.q1.imag / h).item(), gradients.d_q1_dx1[0, i].item(), delta=1e-14)
            self.assertAlmostEqual((perturbed.q2.imag / h).item(), gradients.d_q2_dx1[0, i].item(), delta=1e-14)
            perturbed = gap_offset(frame_x, d.to(COMPLEX_DTYPE) + step, DefaultSectionPairGeometry)
            self.assertAlmostEqual((perturbed.q1.imag / h).item(), gradients.d_q1_dx[0, i].item(), delta=1e-14)
            self.assertAlmostEqual((perturbed.q2.imag / h).item(), gradients.d_q2_dx[0, i].item(), delta=1e-14)


@instantiate_parametrized_tests
class MomentWeightsTest(unittest.TestCase):
    @parametrize(
        "radius_x, radius_y, expected",
        ((0.02, 0.02, (0.5, 0.5)), (0.04, 0.02, (2 / 3, 1 / 3))),
    )
    def test_radius_shares(
        self, radius_x: float, radius_y: float, expected: tuple[float, float]
    ) -> None:
        w_x, w_y = moment_weights(SectionPairGeometry(radius_x=radius_x, radius_y=radius_y))
        self.assertAlmostEqual(w_x, expected[0], places=15)
        self.assertAlmostEqual(w_y, expected[1], places=15)
        self.assertEqual(w_x + w_y, 1.0)
