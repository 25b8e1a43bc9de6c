"""
Copyright (c) Meta Platforms, Inc. and affiliates.
All rights reserved.

This source code is licensed under the BSD-style license found in the
LICENSE file in the root directory of this source tree.

"""

import math
import os
import re
import unittest

import numpy as np

import torch
from commons import REAL_DTYPE
from fiber_adhesion.fiber_adhesion_types import (
    DefaultLennardJonesLaw,
    DefaultSectionPairGeometry,
    PowerLawSpec,
    QuadratureMethod,
    QuadratureSpec,
    QuadratureToleranceError,
    SectionKinematics,
    SectionPairGeometry,
)
from fiber_adhesion.potential_laws import cylinder_per_length, issip_value
from fiber_adhesion.verify import (
    complex_step_tangent,
    finite_difference_tangent,
    first_peel_step_mismatch,
    loglog_slope_fit,
    oracle_potential,
    quad_oracle_cartesian,
    quad_oracle_reduced,
    run_verification_suite,
    VerificationSuite,
)
from torch import Tensor
from torch.testing._internal.common_utils import (
    instantiate_parametrized_tests,
    parametrize,
)

SLOW_TESTS: bool = os.environ.get("FIBER_ADHESION_SLOW_TESTS") == "1"

_CARTESIAN = QuadratureSpec(method=QuadratureMethod.CARTESIAN_4D, relative_tolerance=1e-8)


class QuadratureSpecTest(unittest.TestCase):
    def test_defaults(self) -> None:
        spec = QuadratureSpec()
        self.assertEqual(spec.method, QuadratureMethod.REDUCED_2D)
        self.assertEqual(spec.max_subdivisions, 10000)

    def test_invalid_tolerance(self) -> None:
        self.assertRaisesRegex(
            ValueError,
            re.escape("Invalid relative_tolerance value: 0.0. Must be > 0.0."),
            QuadratureSpec,
            relative_tolerance=0.0,
        )

    def test_invalid_max_subdivisions(self) -> None:
        self.assertRaisesRegex(
            ValueError,
            re.escape("Invalid max_subdivisions value: 0. Must be >= 1."),
            QuadratureSpec,
            max_subdivisions=0,
        )


@instantiate_parametrized_tests
class QuadOracleTest(unittest.TestCase):
    @parametrize("q2", (0.0006, 0.001))
    def test_reduced_matches_section_law_at_zero_offset(self, q2: float) -> None:
        law = PowerLawSpec(m=6.0, k_m=1.0)
        closed_form = issip_value(
            SectionKinematics.from_offset_and_gap(0.0, q2), law, DefaultSectionPairGeometry
        ).item()
        reference = quad_oracle_reduced(0.0, q2, 6.0)
        self.assertFalse(reference.domain_truncated)
        self.assertLess(abs(closed_form / reference.value - 1.0), 5e-2)

    @parametrize("q1", (0.0, 0.01))
    def test_reduced_matches_cartesian(self, q1: float) -> None:
        reduced = quad_oracle_reduced(q1, 0.02, 6.0).value
        cartesian = quad_oracle_cartesian(q1, 0.02, 6.0, DefaultSectionPairGeometry, _CARTESIAN).value
        self.assertAlmostEqual(reduced / cartesian, 1.0, delta=1e-6)

    def test_reduced_decreases_with_gap(self) -> None:
        values = [quad_oracle_reduced(0.01, q2, 6.0).value for q2 in (0.0008, 0.0016, 0.0032, 0.0064)]
        for near, far in zip(values[:-1], values[1:]):
            self.assertGreater(near, far)

    def test_cartesian_point_mass_limit(self) -> None:
        radius = DefaultSectionPairGeometry.radius_x
        q2 = 1.0
        expected = (math.pi * radius**2) ** 2 * (q2 + 2 * radius) ** -6
        value = quad_oracle_cartesian(0.0, q2, 6.0, DefaultSectionPairGeometry, _CARTESIAN).value
        self.assertAlmostEqual(value / expected, 1.0, delta=1e-2)

    def test_cartesian_symmetric_in_disks(self) -> None:
        geometry = SectionPairGeometry(radius_x=0.02, radius_y=0.01)
        swapped = SectionPairGeometry(radius_x=0.01, radius_y=0.02)
        torch.testing.assert_close(
            quad_oracle_cartesian(0.005, 0.01, 6.0, geometry, _CARTESIAN).value,
            quad_oracle_cartesian(0.005, 0.01, 6.0, swapped, _CARTESIAN).value,
            rtol=1e-6,
            atol=0.0,
        )

    def test_reduced_unequal_radii(self) -> None:
        geometry = SectionPairGeometry(radius_x=0.02, radius_y=0.01)
        reduced = quad_oracle_reduced(0.005, 0.01, 6.0, geometry)
        self.assertFalse(reduced.domain_truncated)
        self.assertAlmostEqual(
            reduced.value
            / quad_oracle_cartesian(0.005, 0.01, 6.0, geometry, _CARTESIAN).value,
            1.0,
            delta=1e-6,
        )

    def test_composite_law_sums_terms(self) -> None:
        q1, q2 = 0.01, 0.001
        expected = sum(
            term.k_m * quad_oracle_reduced(q1, q2, term.m).value
            for term in DefaultLennardJonesLaw.terms
        )
        self.assertAlmostEqual(
            oracle_potential(q1, q2, DefaultLennardJonesLaw).value / expected, 1.0, places=12
        )

    def test_invalid_gap(self) -> None:
        self.assertRaisesRegex(
            ValueError,
            re.escape("Invalid q2 value: 0.0. Must be > 0.0."),
            quad_oracle_reduced,
            0.0,
            0.0,
            6.0,
        )

    def test_tolerance_not_met(self) -> None:
        spec = QuadratureSpec(
            absolute_tolerance=1e-300, relative_tolerance=1e-15, max_subdivisions=1
        )
        self.assertRaisesRegex(
            QuadratureToleranceError,
            re.escape("Reduced oracle did not converge"),
            quad_oracle_reduced,
            0.0,
            0.0006,
            12.0,
            DefaultSectionPairGeometry,
            spec,
        )


def _linear_residual() -> tuple[Tensor, Tensor]:
    generator = torch.Generator().manual_seed(3)
    return (
        torch.randn(6, 6, generator=generator, dtype=REAL_DTYPE),
        torch.randn(6, generator=generator, dtype=REAL_DTYPE),
    )


@instantiate_parametrized_tests
class TangentColumnTest(unittest.TestCase):
    @parametrize("dof", (0, 3, 5))
    def test_complex_step_linear_residual(self, dof: int) -> None:
        matrix, state = _linear_residual()
        torch.testing.assert_close(
            complex_step_tangent(lambda u: matrix.to(u.dtype) @ u, state, dof),
            matrix[:, dof],
            rtol=1e-15,
            atol=1e-15,
        )

    def test_complex_step_independent_of_epsilon(self) -> None:
        _, state = _linear_residual()

        def residual(u: Tensor) -> Tensor:
            return torch.sin(u) * u.sum() + u**3

        reference = complex_step_tangent(residual, state, 2, 1e-30)
        for epsilon in (1e-20, 1e-40):
            torch.testing.assert_close(
                complex_step_tangent(residual, state, 2, epsilon), reference, rtol=1e-12, atol=0.0
            )

    def test_finite_difference_matches_complex_step(self) -> None:
        _, state = _linear_residual()

        def residual(u: Tensor) -> Tensor:
            return torch.exp(u) * u.sum()

        torch.testing.assert_close(
            finite_difference_tangent(residual, state, 4),
            complex_step_tangent(residual, state, 4),
            rtol=1e-6,
            atol=1e-8,
        )

    def test_invalid_step(self) -> None:
        _, state = _linear_residual()
        self.assertRaisesRegex(
            ValueError,
            re.escape("Invalid h value: 0.0. Must be > 0.0."),
            finite_difference_tangent,
            torch.sin,
            state,
            0,
            0.0,
        )


@instantiate_parametrized_tests
class LoglogSlopeFitTest(unittest.TestCase):
    def test_exact_power(self) -> None:
        q2 = np.geomspace(1e-4, 1e-2, 7)
        self.assertAlmostEqual(loglog_slope_fit(list(zip(q2, q2**-1.5))), -1.5, places=12)

    def test_cylinder_law(self) -> None:
        q2 = torch.logspace(-4, -3, 9, dtype=REAL_DTYPE)
        values = cylinder_per_length(q2, PowerLawSpec(m=6.0, k_m=-1e-7), DefaultSectionPairGeometry)
        self.assertAlmostEqual(
            loglog_slope_fit(list(zip(q2.tolist(), values.tolist()))), -1.5, delta=1e-9
        )

    @parametrize("m", (6.0, 12.0))
    def test_section_law_at_zero_offset(self, m: float) -> None:
        q2 = torch.logspace(-4, -3, 9, dtype=REAL_DTYPE)
        values = issip_value(
            SectionKinematics.from_offset_and_gap(0.0, q2),
            PowerLawSpec(m=m, k_m=1.0),
            DefaultSectionPairGeometry,
        )
        self.assertAlmostEqual(
            loglog_slope_fit(list(zip(q2.tolist(), values.tolist()))), 3.5 - m, delta=1e-6
        )

    def test_too_few_samples(self) -> None:
        self.assertRaisesRegex(
            ValueError,
            re.escape("Invalid samples value: 2 samples. Must be >= 3."),
            loglog_slope_fit,
            [(1.0, 1.0), (2.0, 0.5)],
        )

    def test_zero_value(self) -> None:
        self.assertRaisesRegex(
            ValueError,
            re.escape("Must be finite and non-zero."),
            loglog_slope_fit,
            [(1.0, 1.0), (2.0, 0.0), (3.0, 0.1)],
        )

    def test_non_positive_gap(self) -> None:
        self.assertRaisesRegex(
            ValueError,
            re.escape("Invalid q2 values: [0.0, 1.0, 2.0]. Must be > 0.0."),
            loglog_slope_fit,
            [(0.0, 1.0), (1.0, 1.0), (2.0, 0.5)],
        )

    def test_coinciding_gaps(self) -> None:
        self.assertRaisesRegex(
            ValueError,
            re.escape("Must not all coincide."),
            loglog_slope_fit,
            [(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)],
        )


@instantiate_parametrized_tests
class RunVerificationSuiteTest(unittest.TestCase):
    @parametrize(
        "suite",
        (
            VerificationSuite.SPECIAL_FUNCTIONS,
            VerificationSuite.SCALING,
            VerificationSuite.INTEGRATION,
            VerificationSuite.CUTOFF,
            VerificationSuite.TANGENT,
        ),
    )
    def test_suite_passes(self, suite: VerificationSuite) -> None:
        checks = run_verification_suite(suite.value)
        self.assertTrue(checks)
        self.assertEqual([check.name for check in checks if not check.passed], [])

    def test_logs_checks(self) -> None:
        with self.assertLogs("fiber_adhesion.verify", level="INFO") as cm:
            checks = run_verification_suite("scaling")
        self.assertEqual(len(cm.records), len(checks))
        self.assertIn("[scaling] cylinder slope for m = 6", cm.output[0])

    def test_unknown_suite(self) -> None:
        self.assertRaisesRegex(
            ValueError,
            re.escape("'oracle' is not a valid VerificationSuite"),
            run_verification_suite,
            "oracle",
        )

    @unittest.skipUnless(SLOW_TESTS, "Set FIBER_ADHESION_SLOW_TESTS=1 to run the quadrature oracles.")
    def test_potential_laws_and_oracles_pass(self) -> None:
        for suite in ("potential-laws", "oracles"):
            checks = run_verification_suite(suite)
            self.assertEqual([check.name for check in checks if not check.passed], [])

    @unittest.skipUnless(SLOW_TESTS, "Set FIBER_ADHESION_SLOW_TESTS=1 to run the first peel step benchmark.")
    def test_first_peel_step_equilibrium(self) -> None:
        coarse = first_peel_step_mismatch(3200.0)
        fine = first_peel_step_mismatch(6400.0)
        self.assertLessEqual(fine, 1e-4)
        self.assertLess(fine, 0.7 * coarse)


if __name__ == "__main__":
    unittest.main()
