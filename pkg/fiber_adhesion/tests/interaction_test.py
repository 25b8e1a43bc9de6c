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
from commons import COMPLEX_DTYPE, REAL_DTYPE
from fiber_adhesion.beam import BSplineBeam, straight_beam
from fiber_adhesion.fiber_adhesion_types import (
    DefaultLennardJonesLaw,
    DefaultSectionPairGeometry,
    Formulation,
    InteractionConfig,
    InteractionLawType,
    InterpenetrationError,
)
from fiber_adhesion.interaction import (
    assemble_interaction,
    build_grid,
    cutoff_error_estimate,
    find_pairs,
    grid_layout,
    integration_rule_error,
    interaction_energy,
    interaction_resultant,
    pair_force,
    point_forces,
)
from torch import Tensor
from torch.testing._internal.common_utils import (
    instantiate_parametrized_tests,
    parametrize,
)


def _beam_pair(
    start_x: tuple[float, float],
    end_x: tuple[float, float],
    start_y: tuple[float, float],
    end_y: tuple[float, float],
    num_control_points: int = 6,
) -> tuple[BSplineBeam, BSplineBeam]:
    beam_x = straight_beam(start_x, end_x, 3, num_control_points, 0.02, 1e3)
    beam_y = straight_beam(
        start_y, end_y, 3, num_control_points, 0.02, 1e3, dof_offset=beam_x.num_dofs
    )
    return beam_x, beam_y


def _skewed_pair() -> tuple[BSplineBeam, BSplineBeam]:
    return _beam_pair((0.0, 0.0), (0.2, 0.004), (0.03, 0.05), (0.23, 0.049))


def _parallel_pair(gap: float) -> tuple[BSplineBeam, BSplineBeam]:
    distance = gap + DefaultSectionPairGeometry.radius_sum
    return _beam_pair((0.0, 0.0), (0.2, 0.0), (0.0, distance), (0.2, distance))


def _num_dofs(beams: tuple[BSplineBeam, BSplineBeam]) -> int:
    return sum(beam.num_dofs for beam in beams)


def _perturbation(num_dofs: int, amplitude: float = 5e-4, seed: int = 3) -> Tensor:
    generator = torch.Generator().manual_seed(seed)
    return amplitude * (
        2 * torch.rand(num_dofs, dtype=REAL_DTYPE, generator=generator) - 1
    )


@instantiate_parametrized_tests
class GridLayoutTest(unittest.TestCase):
    @parametrize("density", (100.0, 3200.0))
    def test_points_per_length(self, density: float) -> None:
        beam = straight_beam((0.0, 0.0), (1.0, 0.0), 3, 12, 0.02, 1e3)
        layout = grid_layout(beam, density)
        self.assertEqual(layout.num_points, math.ceil(density))
        torch.testing.assert_close(
            layout.quadrature_weights.sum(),
            torch.tensor(1.0, dtype=REAL_DTYPE),
            atol=1e-12,
            rtol=0.0,
        )
        self.assertTrue(bool((layout.xi[1:] > layout.xi[:-1]).all()))

    def test_uneven_elements_keep_total(self) -> None:
        beam = straight_beam((0.0, 0.0), (0.37, 0.11), 4, 9, 0.02, 1e3)
        layout = grid_layout(beam, 1000.0)
        self.assertEqual(
            layout.num_points, math.ceil(beam.reference_length * 1000.0 * (1 - 1e-12))
        )
        torch.testing.assert_close(
            layout.quadrature_weights.sum().item(),
            beam.reference_length,
            atol=1e-12,
            rtol=0.0,
        )

    def test_end_exclusion(self) -> None:
        beam = straight_beam((0.0, 0.0), (1.0, 0.0), 3, 12, 0.02, 1e3)
        layout = grid_layout(beam, 100.0, end_exclusion_fraction=0.1)
        self.assertEqual(layout.num_points, 80)
        self.assertGreater(layout.xi.min().item(), 0.1)
        self.assertLess(layout.xi.max().item(), 0.9)
        torch.testing.assert_close(
            layout.quadrature_weights.sum().item(), 0.8, atol=1e-12, rtol=0.0
        )

    def test_dofs_follow_offset(self) -> None:
        _, beam_y = _skewed_pair()
        layout = grid_layout(beam_y, 50.0)
        self.assertEqual(layout.dofs.shape, (layout.num_points, 4, 2))
        self.assertGreaterEqual(layout.dofs.min().item(), beam_y.dof_offset)
        self.assertLess(layout.dofs.max().item(), beam_y.dof_offset + beam_y.num_dofs)


class FindPairsTest(unittest.TestCase):
    def test_matches_brute_force(self) -> None:
        beams = _skewed_pair()
        grid = build_grid(beams, _perturbation(_num_dofs(beams)), density=300.0)
        index_x, index_y = find_pairs(grid, cutoff=0.06)

        distance = torch.cdist(
            grid.frames[0].position,
            grid.frames[1].position,
            compute_mode="donot_use_mm_for_euclid_dist",
        )
        expected = torch.nonzero(distance <= 0.06)
        self.assertGreater(index_x.numel(), 0)
        torch.testing.assert_close(index_x, expected[:, 0])
        torch.testing.assert_close(index_y, expected[:, 1])

    def test_invalid_cutoff(self) -> None:
        grid = build_grid(_skewed_pair(), torch.zeros(24, dtype=REAL_DTYPE), 100.0)
        self.assertRaisesRegex(
            ValueError,
            re.escape("Invalid cutoff value: 0.0. Must be > 0.0."),
            find_pairs,
            grid,
            0.0,
        )


@instantiate_parametrized_tests
class PairForceTest(unittest.TestCase):
    def test_aligned_sections_have_no_tangential_force(self) -> None:
        beams = _parallel_pair(gap=0.002)
        grid = build_grid(beams, torch.zeros(24, dtype=REAL_DTYPE), density=200.0)
        index = torch.arange(grid.layouts[0].num_points)
        contribution = pair_force(
            grid, index, index, DefaultLennardJonesLaw, DefaultSectionPairGeometry, InteractionConfig()
        )
        torch.testing.assert_close(
            contribution.kinematics.q1, torch.zeros_like(index, dtype=REAL_DTYPE), atol=1e-15, rtol=0.0
        )
        scale = contribution.force.abs().max().item()
        self.assertGreater(scale, 0.0)
        torch.testing.assert_close(
            contribution.force[:, 0],
            torch.zeros(index.numel(), dtype=REAL_DTYPE),
            atol=1e-12 * scale,
            rtol=0.0,
        )

    @parametrize(
        "gap, attractive",
        ((0.002, True), (0.0003, False)),
    )
    def test_normal_force_sign(self, gap: float, attractive: bool) -> None:
        beams = _parallel_pair(gap=gap)
        grid = build_grid(beams, torch.zeros(24, dtype=REAL_DTYPE), density=200.0)
        pairs = find_pairs(grid, cutoff=0.05)
        forces_x, forces_y = point_forces(
            grid, pairs, DefaultLennardJonesLaw, DefaultSectionPairGeometry, InteractionConfig()
        )
        # Beam x lies below beam y; attraction pushes it up along its normal.
        middle = forces_x.f2.numel() // 2
        self.assertEqual(forces_x.f2[middle].item() > 0, attractive)
        self.assertEqual(forces_y.f2[middle].item() < 0, attractive)

    def test_interpenetration(self) -> None:
        beams = _beam_pair((0.0, 0.0), (0.2, 0.0), (0.0, 0.039), (0.2, 0.039))
        grid = build_grid(beams, torch.zeros(24, dtype=REAL_DTYPE), density=100.0)
        pairs = find_pairs(grid, cutoff=0.05)
        self.assertRaisesRegex(
            InterpenetrationError,
            re.escape("Cross sections interpenetrate"),
            pair_force,
            grid,
            *pairs,
            DefaultLennardJonesLaw,
            DefaultSectionPairGeometry,
            InteractionConfig(),
        )


@instantiate_parametrized_tests
class AssembleInteractionTest(unittest.TestCase):
    @parametrize("include_moments", (False, True))
    def test_action_reaction(self, include_moments: bool) -> None:
        beams = _skewed_pair()
        num_dofs = _num_dofs(beams)
        grid = build_grid(beams, _perturbation(num_dofs), density=300.0)
        pairs = find_pairs(grid, cutoff=0.06)
        config = InteractionConfig(include_moments=include_moments)
        residual, _ = assemble_interaction(
            grid, pairs, DefaultLennardJonesLaw, DefaultSectionPairGeometry, config, num_dofs, with_tangent=False
        )
        scale = residual.abs().max().item()
        self.assertGreater(scale, 0.0)
        torch.testing.assert_close(
            residual.reshape(-1, 2).sum(dim=0),
            torch.zeros(2, dtype=REAL_DTYPE),
            atol=1e-12 * scale,
            rtol=0.0,
        )
        torch.testing.assert_close(
            interaction_resultant(grid, pairs, DefaultLennardJonesLaw, DefaultSectionPairGeometry, config),
            -residual[: beams[0].num_dofs].reshape(-1, 2).sum(dim=0),
            atol=1e-12 * scale,
            rtol=0.0,
        )

    def test_residual_is_energy_gradient_for_gap_law(self) -> None:
        beams = _skewed_pair()
        num_dofs = _num_dofs(beams)
        displacements = _perturbation(num_dofs)
        config = InteractionConfig(law_type=InteractionLawType.LSSIP)
        grid = build_grid(beams, displacements, density=300.0)
        pairs = find_pairs(grid, cutoff=0.06)
        residual, _ = assemble_interaction(
            grid, pairs, DefaultLennardJonesLaw, DefaultSectionPairGeometry, config, num_dofs, with_tangent=False
        )

        def energy(u: Tensor) -> float:
            perturbed = build_grid(beams, u, density=300.0, layouts=grid.layouts)
            return interaction_energy(
                perturbed, pairs, DefaultLennardJonesLaw, DefaultSectionPairGeometry, config
            ).item()

        h = 1e-7
        gradient = torch.zeros(num_dofs, dtype=REAL_DTYPE)
        for dof in range(num_dofs):
            step = torch.zeros(num_dofs, dtype=REAL_DTYPE)
            step[dof] = h
            gradient[dof] = (energy(displacements + step) - energy(displacements - step)) / (2 * h)
        torch.testing.assert_close(
            residual, gradient, atol=1e-6 * residual.abs().max().item(), rtol=0.0
        )

    @parametrize(
        "law_type, formulation",
        (
            (InteractionLawType.ISSIP, Formulation.AVERAGED),
            (InteractionLawType.ISSIP, Formulation.STRAIGHTFORWARD),
            (InteractionLawType.LSSIP, Formulation.AVERAGED),
        ),
    )
    def test_tangent_matches_complex_step(
        self, law_type: InteractionLawType, formulation: Formulation
    ) -> None:
        beams = _skewed_pair()
        num_dofs = _num_dofs(beams)
        displacements = _perturbation(num_dofs)
        config = InteractionConfig(law_type=law_type, formulation=formulation)
        grid = build_grid(beams, displacements, density=200.0)
        pairs = find_pairs(grid, cutoff=0.06)
        _, tangent = assemble_interaction(
            grid, pairs, DefaultLennardJonesLaw, DefaultSectionPairGeometry, config, num_dofs
        )

        h = 1e-30
        columns = []
        for dof in range(num_dofs):
            perturbed = displacements.to(COMPLEX_DTYPE)
            perturbed[dof] += 1j * h
            complex_grid = build_grid(beams, perturbed, density=200.0, layouts=grid.layouts)
            residual, _ = assemble_interaction(
                complex_grid,
                pairs,
                DefaultLennardJonesLaw,
                DefaultSectionPairGeometry,
                config,
                num_dofs,
                with_tangent=False,
            )
            columns.append(residual.imag / h)
        expected = torch.stack(columns, dim=1)
        torch.testing.assert_close(
            tangent, expected, atol=1e-7 * expected.abs().max().item(), rtol=0.0
        )

    def test_swapping_beams_mirrors_point_forces(self) -> None:
        beams = _parallel_pair(gap=0.003)
        grid = build_grid(beams, torch.zeros(24, dtype=REAL_DTYPE), density=200.0)
        pairs = find_pairs(grid, cutoff=0.05)
        forces_x, forces_y = point_forces(
            grid, pairs, DefaultLennardJonesLaw, DefaultSectionPairGeometry, InteractionConfig()
        )
        scale = forces_x.f2.abs().max().item()
        torch.testing.assert_close(forces_x.f1, forces_y.f1, atol=1e-10 * scale, rtol=0.0)
        torch.testing.assert_close(forces_x.f2, -forces_y.f2, atol=1e-10 * scale, rtol=0.0)
        torch.testing.assert_close(
            forces_x.f1, -forces_x.f1.flip(0), atol=1e-10 * scale, rtol=0.0
        )


class CutoffErrorEstimateTest(unittest.TestCase):
    def test_default_cutoff_near_equilibrium(self) -> None:
        error = cutoff_error_estimate(
            0.0009, DefaultLennardJonesLaw, DefaultSectionPairGeometry, 0.05
        )
        self.assertGreater(error, 4e-4 / 3)
        self.assertLess(error, 4e-4 * 3)

    def test_decreases_with_cutoff(self) -> None:
        errors = [
            cutoff_error_estimate(0.0009, DefaultLennardJonesLaw, DefaultSectionPairGeometry, cutoff)
            for cutoff in (0.045, 0.05, 0.06, 0.07)
        ]
        for coarse, fine in zip(errors, errors[1:]):
            self.assertGreater(coarse, fine)

    def test_grows_with_gap(self) -> None:
        near = cutoff_error_estimate(0.0009, DefaultLennardJonesLaw, DefaultSectionPairGeometry, 0.05)
        far = cutoff_error_estimate(0.002, DefaultLennardJonesLaw, DefaultSectionPairGeometry, 0.05)
        self.assertGreater(far, near)

    def test_cutoff_below_distance(self) -> None:
        self.assertEqual(
            cutoff_error_estimate(0.005, DefaultLennardJonesLaw, DefaultSectionPairGeometry, 0.04),
            1.0,
        )

    def test_invalid_gap(self) -> None:
        self.assertRaisesRegex(
            ValueError,
            re.escape("Invalid q2 value: 0.0. Must be > 0.0."),
            cutoff_error_estimate,
            0.0,
            DefaultLennardJonesLaw,
            DefaultSectionPairGeometry,
            0.05,
        )


@instantiate_parametrized_tests
class IntegrationRuleErrorTest(unittest.TestCase):
    def test_midpoint_rule_at_default_density(self) -> None:
        error = integration_rule_error(
            0.0009, 0.03, 3200.0, 1, DefaultLennardJonesLaw, DefaultSectionPairGeometry
        )
        self.assertGreater(error, 1e-5)
        self.assertLess(error, 1e-4)

    def test_refinement_reduces_error(self) -> None:
        coarse = integration_rule_error(
            0.0009, 0.05, 800.0, 1, DefaultLennardJonesLaw, DefaultSectionPairGeometry
        )
        fine = integration_rule_error(
            0.0009, 0.05, 6400.0, 1, DefaultLennardJonesLaw, DefaultSectionPairGeometry
        )
        self.assertLess(fine, coarse)

    @parametrize("order", (0, 6))
    def test_invalid_order(self, order: int) -> None:
        self.assertRaisesRegex(
            ValueError,
            re.escape(f"Invalid order value: {order}. Must be in [1, 5]."),
            integration_rule_error,
            0.0009,
            0.05,
            3200.0,
            order,
            DefaultLennardJonesLaw,
            DefaultSectionPairGeometry,
        )
