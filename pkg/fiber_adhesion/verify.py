"""
Copyright (c) Meta Platforms, Inc. and affiliates.
All rights reserved.

This source code is licensed under the BSD-style license found in the
LICENSE file in the root directory of this source tree.

"""

import enum
import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from itertools import pairwise, product

import numpy as np

import torch
from commons import COMPLEX_DTYPE, REAL_DTYPE
from fiber_adhesion.beam import straight_beam
from fiber_adhesion.fiber_adhesion_types import (
    CompositeLaw,
    ContinuationConfig,
    DefaultLennardJonesLaw,
    DefaultQuadratureSpec,
    DefaultSectionPairGeometry,
    InteractionConfig,
    InteractionLawType,
    PowerLawSpec,
    QuadratureMethod,
    QuadratureSpec,
    QuadratureToleranceError,
    SectionKinematics,
    SectionPairGeometry,
)
from fiber_adhesion.interaction import cutoff_error_estimate, integration_rule_error
from fiber_adhesion.potential_laws import (
    cylinder_per_length,
    cylinder_per_length_force,
    equilibrium_gap,
    issip_derivatives,
    issip_value,
    law_terms,
    lssip_derivatives,
    PotentialDerivatives,
)
from fiber_adhesion.solver import (
    equilibrium_check,
    FiberSystem,
    newton_solve,
    peel_system,
    PeelSetup,
)
from scipy import integrate, optimize, special
from special_functions import gamma_fn, hyp2f1, pochhammer
from special_functions_types import Hyp2F1Params

from torch import Tensor

logger: logging.Logger = logging.getLogger(__name__)

# Arguments of arccos beyond 1 by more than this are treated as an empty integration domain rather than roundoff.
ARCCOS_GUARD: float = 1e-14

# Multiples of the gap at which the reduced domain is split towards the closest points.
_GRADING: tuple[float, ...] = (1.0, 10.0, 100.0)

# Desk-scale interaction grid of the tangent checks.
CoarseInteractionConfig = InteractionConfig(density=400.0)

# Short stiff fibers whose first peel step stays close to the straight configuration.
DeskPeelSetup = PeelSetup(youngs_modulus=1e7, length=0.25, num_control_points=29)

# The Newton residual of the equilibrium benchmark stays far below the integration error.
TightContinuationConfig = ContinuationConfig(tolerance=1e-9)


###### ENUM CLASSES ######
@enum.unique
class VerificationSuite(enum.Enum):
    SPECIAL_FUNCTIONS = "special-functions"
    POTENTIAL_LAWS = "potential-laws"
    ORACLES = "oracles"
    SCALING = "scaling"
    INTEGRATION = "integration"
    CUTOFF = "cutoff"
    TANGENT = "tangent"
    EQUILIBRIUM = "equilibrium"
    ALL = "all"


###### DATACLASSES ######
@dataclass
class QuadratureResult:
    """Reference integral of a section-section potential.

    Attributes:
        value (float): Integral estimate.
        error (float): Error estimate reported by the cubature, summed over sub-domains.
        domain_truncated (bool): Part of the nominal domain was empty and has been dropped.

    """

    value: float
    error: float
    domain_truncated: bool = False


@dataclass
class VerificationCheck:
    name: str
    value: float
    threshold: float
    passed: bool


@dataclass
class TangentColumnError:
    """Deviation of one assembled tangent column from its complex-step column.

    Attributes:
        dof (int): Column index.
        max_abs_difference (float): Largest entry of |assembled - complex step|.
        relative_error (float): max_abs_difference over the largest complex-step entry.
        difference_error (float): Same measure for the central-difference column.

    """

    dof: int
    max_abs_difference: float
    relative_error: float
    difference_error: float


def _check_oracle_arguments(q2: float, m: float) -> None:
    if not q2 > 0.0:
        raise ValueError(f"Invalid q2 value: {q2}. Must be > 0.0.")
    if not m > 0.0:
        raise ValueError(f"Invalid m value: {m}. Must be > 0.0.")


def _graded_breaks(upper: float, to_angle: Callable[[float], float], q2: float) -> list[float]:
    inner = [to_angle(scale * q2) for scale in _GRADING]
    return [0.0, *(angle for angle in inner if 0.0 < angle < upper), upper]


def _cubature(
    integrand: Callable[[np.ndarray], np.ndarray],
    boxes: Sequence[tuple[Sequence[float], Sequence[float]]],
    rule: str,
    spec: QuadratureSpec,
    label: str,
) -> tuple[float, float]:
    value, error = 0.0, 0.0
    for lower, upper in boxes:
        result = integrate.cubature(
            integrand,
            np.asarray(lower, dtype=np.float64),
            np.asarray(upper, dtype=np.float64),
            rule=rule,
            rtol=spec.relative_tolerance,
            atol=spec.absolute_tolerance,
            max_subdivisions=spec.max_subdivisions,
        )
        if result.status != "converged":
            raise QuadratureToleranceError(
                f"{label} did not converge on [{lower}, {upper}]: estimate {result.estimate}, error {result.error}, {result.subdivisions} subdivisions."
            )
        value += float(result.estimate)
        error += float(result.error)
    return value, error


def quad_oracle_reduced(
    q1: float,
    q2: float,
    m: float,
    geometry: SectionPairGeometry = DefaultSectionPairGeometry,
    spec: QuadratureSpec = DefaultQuadratureSpec,
) -> QuadratureResult:
    """Integral of r^-m over two parallel disks in the reduced distance coordinates.

    Point y lies at distance t from the centroid of disk x and at distance p from a point of disk x; the in-plane
    angles are integrated out through arccos kernels. The integral

        4 * int int (p^2 + q1^2)^(-m/2) t p phi_bar psi_bar dp dt,  t in [q2 + R_x, q2 + R_x + 2 R_y], p in [t - R_x, t + R_x]

    is evaluated after the substitutions t = q2_hat - R_y cos(alpha), p = t - R_x cos(beta), which remove the square
    root behavior of the kernels at the limits, on sub-domains graded towards the closest points.

    Args:
        q1 (float): Offset along the beam tangent (distance between the disk planes).
        q2 (float): Surface gap.
        m (float): Exponent of the point-pair law.
        geometry (SectionPairGeometry): Radii; the particle densities are ignored. (Default: DefaultSectionPairGeometry)
        spec (QuadratureSpec): Tolerances. (Default: DefaultQuadratureSpec)

    Returns:
        result (QuadratureResult): The bare geometric integral, without law coefficient and particle densities.

    Raises:
        ValueError: If q2 <= 0 or m <= 0.
        QuadratureToleranceError: If the cubature does not meet the tolerances.

    """
    _check_oracle_arguments(q2, m)
    radius_x, radius_y = geometry.radius_x, geometry.radius_y
    q2_hat = q2 + geometry.radius_sum
    clamp_excess = 0.0

    def clamped_arccos(argument: np.ndarray) -> np.ndarray:
        nonlocal clamp_excess
        clamp_excess = max(clamp_excess, float((np.abs(argument) - 1.0).max(initial=0.0)))
        return np.arccos(np.clip(argument, -1.0, 1.0))

    def integrand(x: np.ndarray) -> np.ndarray:
        alpha, beta = x[:, 0], x[:, 1]
        t = q2_hat - radius_y * np.cos(alpha)
        p = t - radius_x * np.cos(beta)
        phi_bar = clamped_arccos((t**2 + p**2 - radius_x**2) / (2 * t * p))
        psi_bar = clamped_arccos((t**2 + q2_hat**2 - radius_y**2) / (2 * t * q2_hat))
        jacobian = radius_x * radius_y * np.sin(alpha) * np.sin(beta)
        return 4 * (p**2 + q1**2) ** (-m / 2) * t * p * phi_bar * psi_bar * jacobian

    def angle(radius: float) -> Callable[[float], float]:
        # radius (1 - cos(angle)) = distance from the limit.
        return lambda distance: 2 * math.asin(math.sqrt(min(distance / (2 * radius), 1.0)))

    alpha_breaks = _graded_breaks(math.pi, angle(radius_y), q2)
    beta_breaks = _graded_breaks(math.pi, angle(radius_x), q2)
    boxes = [
        ((alpha_low, beta_low), (alpha_high, beta_high))
        for (alpha_low, alpha_high), (beta_low, beta_high) in product(
            pairwise(alpha_breaks), pairwise(beta_breaks)
        )
    ]
    value, error = _cubature(integrand, boxes, "gk21", spec, "Reduced oracle")

    domain_truncated = clamp_excess > ARCCOS_GUARD
    if domain_truncated:
        logger.warning(
            f"Reduced oracle at {q1=}, {q2=} clamped arccos arguments by up to {clamp_excess:.3e}; the integral covers the non-empty part of the domain only."
        )
    return QuadratureResult(value=value, error=error, domain_truncated=domain_truncated)


def quad_oracle_cartesian(
    q1: float,
    q2: float,
    m: float,
    geometry: SectionPairGeometry = DefaultSectionPairGeometry,
    spec: QuadratureSpec = DefaultQuadratureSpec,
) -> QuadratureResult:
    """Integral of r^-m over two parallel disks as a 4D integral, both disks in polar coordinates.

    Disk x is centered at the origin and disk y at distance q2_hat in the same plane; r^2 is the squared in-plane
    distance plus q1^2. The integrand is even under reflecting both polar angles, so half of the angle domain is
    integrated. The rule loses efficiency at small gaps; q2 >= 0.1 R is the useful range.

    Raises:
        ValueError: If q2 <= 0 or m <= 0.
        QuadratureToleranceError: If the cubature does not meet the tolerances.

    """
    _check_oracle_arguments(q2, m)
    radius_x, radius_y = geometry.radius_x, geometry.radius_y
    if q2 < 0.1 * min(radius_x, radius_y):
        logger.warning(
            f"Cartesian oracle at {q2=} below 0.1 R; expect slow convergence of the cubature."
        )
    q2_hat = q2 + geometry.radius_sum

    def integrand(x: np.ndarray) -> np.ndarray:
        rho_x, theta, rho_y, eta = x[:, 0], x[:, 1], x[:, 2], x[:, 3]
        # Angles are measured from the closest points of the two disks.
        horizontal = rho_x * np.cos(theta) - q2_hat + rho_y * np.cos(eta)
        vertical = rho_x * np.sin(theta) - rho_y * np.sin(eta)
        squared = horizontal**2 + vertical**2 + q1**2
        return 2 * rho_x * rho_y * squared ** (-m / 2)

    boxes = [
        ((0.0, 0.0, 0.0, -math.pi), (radius_x, math.pi, radius_y, 0.0)),
        ((0.0, 0.0, 0.0, 0.0), (radius_x, math.pi, radius_y, math.pi)),
    ]
    value, error = _cubature(integrand, boxes, "genz-malik", spec, "Cartesian oracle")
    return QuadratureResult(value=value, error=error)


def oracle_potential(
    q1: float,
    q2: float,
    law: PowerLawSpec | CompositeLaw,
    geometry: SectionPairGeometry = DefaultSectionPairGeometry,
    spec: QuadratureSpec = DefaultQuadratureSpec,
) -> QuadratureResult:
    """Section-section potential sum_m k_m beta_x beta_y I_m with each integral I_m from the oracle of spec.method."""
    match spec.method:
        case QuadratureMethod.REDUCED_2D:
            oracle = quad_oracle_reduced
        case QuadratureMethod.CARTESIAN_4D:
            oracle = quad_oracle_cartesian
        case _:
            raise NotImplementedError(f"{spec.method=} is not supported.")

    scale = geometry.beta_x * geometry.beta_y
    results = [
        (term.k_m * scale, oracle(q1, q2, term.m, geometry, spec))
        for term in law_terms(law)
    ]
    return QuadratureResult(
        value=sum(factor * result.value for factor, result in results),
        error=sum(abs(factor) * result.error for factor, result in results),
        domain_truncated=any(result.domain_truncated for _, result in results),
    )


def complex_step_tangent(
    residual: Callable[[Tensor], Tensor],
    state: Tensor,
    dof: int,
    epsilon: float = 1e-30,
) -> Tensor:
    """Column dof of the Jacobian of residual at state, Im[residual(state + i epsilon e_dof)] / epsilon.

    The residual must accept complex states and take every branch decision on the real part.
    """
    perturbed = state.to(COMPLEX_DTYPE)
    perturbed[dof] += 1j * epsilon
    return residual(perturbed).imag / epsilon


def finite_difference_tangent(
    residual: Callable[[Tensor], Tensor],
    state: Tensor,
    dof: int,
    h: float = 1e-6,
) -> Tensor:
    """Central-difference approximation of column dof of the Jacobian of residual at state."""
    if not h > 0.0:
        raise ValueError(f"Invalid h value: {h}. Must be > 0.0.")
    step = torch.zeros_like(state)
    step[dof] = h
    return (residual(state + step) - residual(state - step)) / (2 * h)


def loglog_slope_fit(samples: Sequence[tuple[float, float]]) -> float:
    """Least-squares slope of log|value| against log q2.

    Raises:
        ValueError: If there are fewer than 3 samples, a q2 is not positive, a value is zero or not finite, or all q2
            coincide.

    """
    if len(samples) < 3:
        raise ValueError(f"Invalid samples value: {len(samples)} samples. Must be >= 3.")
    q2, values = np.asarray(samples, dtype=np.float64).T
    magnitudes = np.abs(values)
    if not (q2 > 0.0).all():
        raise ValueError(f"Invalid q2 values: {q2.tolist()}. Must be > 0.0.")
    if not ((magnitudes > 0.0) & np.isfinite(magnitudes)).all():
        raise ValueError(
            f"Invalid values: {values.tolist()}. Must be finite and non-zero."
        )
    if np.ptp(q2) == 0.0:
        raise ValueError(f"Invalid q2 values: {q2.tolist()}. Must not all coincide.")
    slope, _ = np.polyfit(np.log(q2), np.log(magnitudes), 1)
    return float(slope)


def _at_most(name: str, value: float, threshold: float) -> VerificationCheck:
    return VerificationCheck(
        name=name, value=value, threshold=threshold, passed=bool(value <= threshold)
    )


def _at_least(name: str, value: float, threshold: float) -> VerificationCheck:
    return VerificationCheck(
        name=name, value=value, threshold=threshold, passed=bool(value >= threshold)
    )


def _max_relative(actual: np.ndarray | Tensor, expected: np.ndarray | Tensor) -> float:
    actual, expected = np.asarray(actual), np.asarray(expected)
    return float((np.abs(actual - expected) / np.abs(expected)).max())


def _special_function_checks() -> list[VerificationCheck]:
    x = np.linspace(0.1, 50.0, 53)
    gamma_error = _max_relative(np.array([gamma_fn(v) for v in x]), special.gamma(x))

    rising = [(a, k) for a in (0.5, 1.25, 4.75) for k in range(11)]
    pochhammer_error = _max_relative(
        np.array([pochhammer(a, k) for a, k in rising]),
        np.array([special.poch(a, k) for a, k in rising]),
    )

    # Kernels of the section-section law and its first two derivatives over the offsets met inside a cutoff.
    z = -np.logspace(-3.0, 4.0, 57)
    hyp2f1_error = 0.0
    for m, shift in product((6.0, 12.0), range(3)):
        a, b, c = (2 * m - 7) / 4 + shift, (2 * m - 5) / 4 + shift, m / 2 + shift
        actual = hyp2f1(Hyp2F1Params(a=a, b=b, c=c, z=torch.from_numpy(z)))
        hyp2f1_error = max(hyp2f1_error, _max_relative(actual, special.hyp2f1(a, b, c, z)))

    return [
        _at_most("gamma_fn relative error", gamma_error, 1e-13),
        _at_most("pochhammer relative error", pochhammer_error, 1e-13),
        _at_most("hyp2f1 relative error", hyp2f1_error, 1e-10),
    ]


def _potential_law_checks() -> list[VerificationCheck]:
    generator = np.random.default_rng(0)

    reduction_error = 0.0
    for m, q2, radius in zip(
        generator.uniform(3.6, 13.0, 1000),
        10.0 ** generator.uniform(-4.0, -1.0, 1000),
        generator.uniform(1e-3, 1e-1, 1000),
        strict=True,
    ):
        law = PowerLawSpec(m=float(m), k_m=1.0)
        geometry = SectionPairGeometry(radius_x=float(radius), radius_y=float(radius))
        issip = issip_value(SectionKinematics.from_offset_and_gap(0.0, float(q2), geometry), law, geometry)
        lssip = lssip_derivatives(float(q2), law, geometry).value
        reduction_error = max(reduction_error, _max_relative(issip, lssip))

    q1 = torch.from_numpy(generator.uniform(-0.05, 0.05, 1000))
    q2 = torch.from_numpy(generator.uniform(2e-4, 5e-3, 1000))
    identity_error, first_error, second_error = 0.0, 0.0, 0.0
    h = 1e-4 * q2

    def relative_to_peak(difference: Tensor, analytic: Tensor) -> float:
        # Offset derivatives change sign; errors are measured against the largest magnitude.
        return ((difference - analytic).abs().max() / analytic.abs().max()).item()

    for m in (6.0, 12.0):
        law = PowerLawSpec(m=m, k_m=-1.0)

        def derivatives(q1_: Tensor, q2_: Tensor, order: int = 2) -> PotentialDerivatives:
            return issip_derivatives(
                SectionKinematics.from_offset_and_gap(q1_, q2_), law, DefaultSectionPairGeometry, order
            )

        exact = derivatives(q1, q2)
        identity = (7 - 2 * m) * exact.value / (2 * q2) - q1 / q2 * exact.d_q1
        identity_error = max(identity_error, _max_relative(identity, exact.d_q2))

        plus_1, minus_1 = derivatives(q1 + h, q2, 1), derivatives(q1 - h, q2, 1)
        plus_2, minus_2 = derivatives(q1, q2 + h, 1), derivatives(q1, q2 - h, 1)
        first_error = max(
            first_error,
            relative_to_peak((plus_1.value - minus_1.value) / (2 * h), exact.d_q1),
            relative_to_peak((plus_2.value - minus_2.value) / (2 * h), exact.d_q2),
        )
        second_error = max(
            second_error,
            relative_to_peak((plus_1.d_q1 - minus_1.d_q1) / (2 * h), exact.d_q1q1),
            relative_to_peak((plus_2.d_q1 - minus_2.d_q1) / (2 * h), exact.d_q1q2),
            relative_to_peak((plus_1.d_q2 - minus_1.d_q2) / (2 * h), exact.d_q1q2),
            relative_to_peak((plus_2.d_q2 - minus_2.d_q2) / (2 * h), exact.d_q2q2),
        )

    geometry = DefaultSectionPairGeometry
    gap = equilibrium_gap(DefaultLennardJonesLaw, geometry)
    bracketed = optimize.brentq(
        lambda q2_: cylinder_per_length_force(q2_, DefaultLennardJonesLaw, geometry).item(),
        0.5 * gap,
        2.0 * gap,
        xtol=1e-18,
        rtol=1e-15,
    )
    minimized = optimize.minimize_scalar(
        lambda q2_: cylinder_per_length(q2_, DefaultLennardJonesLaw, geometry).item(),
        bracket=(0.5 * gap, gap * (1 + 1e-3), 2.0 * gap),
        method="golden",
        tol=1e-12,
    ).x

    return [
        _at_most("ISSIP-LSSIP reduction at zero offset", reduction_error, 1e-12),
        _at_most("gap derivative identity", identity_error, 1e-10),
        _at_most("first derivatives against central differences", first_error, 1e-5),
        _at_most("second derivatives against central differences", second_error, 1e-4),
        _at_most("equilibrium gap against root bracketing", abs(bracketed - gap) / gap, 1e-10),
        _at_most("equilibrium gap against golden-section search", abs(minimized - gap) / gap, 1e-8),
        _at_most("equilibrium gap against 0.00085", abs(gap - 0.00085) / 0.00085, 0.015),
    ]


def _oracle_checks() -> list[VerificationCheck]:
    geometry = DefaultSectionPairGeometry
    law = DefaultLennardJonesLaw
    q2 = np.geomspace(0.0006, 0.005, 8)

    def l2_error(q1: float, law_type: InteractionLawType) -> float:
        reference = np.array([oracle_potential(q1, gap, law, geometry).value for gap in q2])
        match law_type:
            case InteractionLawType.ISSIP:
                kinematics = SectionKinematics.from_offset_and_gap(q1, torch.from_numpy(q2), geometry)
                approximation = issip_value(kinematics, law, geometry).numpy()
            case InteractionLawType.LSSIP:
                approximation = lssip_derivatives(torch.from_numpy(q2), law, geometry).value.numpy()
            case _:
                raise NotImplementedError(f"{law_type=} is not supported.")
        return float(np.linalg.norm(approximation - reference) / np.linalg.norm(reference))

    checks = [
        _at_most(f"ISSIP against reduced oracle at q1 = {q1}", l2_error(q1, InteractionLawType.ISSIP), 5e-2)
        for q1 in (0.0, 0.01, 0.02, 0.04)
    ]
    checks.append(
        _at_least(
            "LSSIP to ISSIP error ratio at q1 = 0.02",
            l2_error(0.02, InteractionLawType.LSSIP) / checks[2].value,
            10.0,
        )
    )

    cartesian = QuadratureSpec(method=QuadratureMethod.CARTESIAN_4D, relative_tolerance=1e-8)
    cross_error = max(
        abs(
            quad_oracle_reduced(q1, geometry.radius_x, 6.0, geometry).value
            / quad_oracle_cartesian(q1, geometry.radius_x, 6.0, geometry, cartesian).value
            - 1.0
        )
        for q1 in (0.0, 0.02)
    )
    checks.append(_at_most("reduced against Cartesian oracle at q2 = R", cross_error, 1e-5))
    return checks


def _scaling_checks() -> list[VerificationCheck]:
    geometry = DefaultSectionPairGeometry
    q2 = np.geomspace(1e-4, 1e-3, 10)
    checks = []
    for m in (6.0, 12.0):
        law = PowerLawSpec(m=m, k_m=-1.0 if m == 6.0 else 1.0)
        cylinder = cylinder_per_length(torch.from_numpy(q2), law, geometry).numpy()
        section = issip_value(
            SectionKinematics.from_offset_and_gap(0.0, torch.from_numpy(q2), geometry), law, geometry
        ).numpy()
        checks += [
            _at_most(
                f"cylinder slope for m = {m:g}",
                abs(loglog_slope_fit(list(zip(q2, cylinder))) + (m - 4.5)),
                1e-6,
            ),
            _at_most(
                f"section slope for m = {m:g}",
                abs(loglog_slope_fit(list(zip(q2, section))) + (m - 3.5)),
                1e-6,
            ),
        ]
    return checks


def _integration_checks() -> list[VerificationCheck]:
    errors = {
        order: integration_rule_error(
            0.0009, 0.03, 3200.0, order, DefaultLennardJonesLaw, DefaultSectionPairGeometry
        )
        for order in (1, 2)
    }
    return [
        _at_least("mid-point rule error lower bound", errors[1], 1e-5),
        _at_most("mid-point rule error upper bound", errors[1], 1e-4),
        _at_most("two-point Gauss to mid-point error ratio", errors[2] / errors[1], 1.0),
    ]


def _cutoff_checks() -> list[VerificationCheck]:
    def error(cutoff: float) -> float:
        return cutoff_error_estimate(
            0.0009, DefaultLennardJonesLaw, DefaultSectionPairGeometry, cutoff
        )

    reference = error(0.05)
    errors = [error(cutoff) for cutoff in (0.045, 0.05, 0.06, 0.07)]
    return [
        _at_most("cutoff error over 4e-4", max(reference / 4e-4, 4e-4 / reference), 3.0),
        _at_most(
            "largest error ratio of successive cutoffs",
            max(later / earlier for earlier, later in pairwise(errors)),
            1.0,
        ),
    ]


def perturbed_fiber_pair(
    length: float = 0.5,
    degree: int = 3,
    num_control_points: int = 20,
    geometry: SectionPairGeometry = DefaultSectionPairGeometry,
    law: PowerLawSpec | CompositeLaw = DefaultLennardJonesLaw,
    youngs_modulus: float = 1e5,
    gap: float = 0.0008,
    amplitude: float = 2e-4,
    interaction_config: InteractionConfig = CoarseInteractionConfig,
    seed: int = 0,
) -> tuple[FiberSystem, Tensor]:
    """Two vertical fibers a gap apart whose control points are displaced by uniform random amounts up to amplitude."""
    offset = geometry.radius_sum + gap
    beam_x = straight_beam(
        (0.0, 0.0), (0.0, length), degree, num_control_points, geometry.radius_x, youngs_modulus
    )
    beam_y = straight_beam(
        (offset, 0.0),
        (offset, length),
        degree,
        num_control_points,
        geometry.radius_y,
        youngs_modulus,
        dof_offset=beam_x.num_dofs,
    )
    system = FiberSystem(
        beams=(beam_x, beam_y),
        geometry=geometry,
        law=law,
        interaction_config=interaction_config,
    )
    generator = torch.Generator().manual_seed(seed)
    displacements = amplitude * (
        2 * torch.rand(system.num_dofs, generator=generator, dtype=REAL_DTYPE) - 1
    )
    return system, displacements


def tangent_column_errors(
    system: FiberSystem, displacements: Tensor, dofs: Sequence[int]
) -> list[TangentColumnError]:
    """Compares the assembled tangent of system at displacements with complex-step and central-difference columns.

    The pair list is frozen at the unperturbed state.
    """
    evaluation = system.evaluate(displacements)

    def residual(state: Tensor) -> Tensor:
        return system.evaluate(state, with_tangent=False, pairs=evaluation.pairs).residual

    errors = []
    for dof in dofs:
        column = complex_step_tangent(residual, displacements, dof)
        scale = column.abs().max().item()
        difference = (evaluation.tangent[:, dof] - column).abs().max().item()
        errors.append(
            TangentColumnError(
                dof=dof,
                max_abs_difference=difference,
                relative_error=difference / scale,
                difference_error=(
                    finite_difference_tangent(residual, displacements, dof) - column
                ).abs().max().item()
                / scale,
            )
        )
    return errors


def _tangent_checks() -> list[VerificationCheck]:
    system, displacements = perturbed_fiber_pair()
    generator = torch.Generator().manual_seed(1)
    dofs = torch.randperm(system.num_dofs, generator=generator)[:20].tolist()
    errors = tangent_column_errors(system, displacements, dofs)

    pairs = system.evaluate(displacements, with_tangent=False).pairs

    def residual(state: Tensor) -> Tensor:
        return system.evaluate(state, with_tangent=False, pairs=pairs).residual

    columns = [
        complex_step_tangent(residual, displacements, dofs[0], epsilon)
        for epsilon in (1e-20, 1e-30, 1e-40)
    ]
    step_error = max(
        (column - columns[1]).abs().max().item() / columns[1].abs().max().item()
        for column in columns
    )
    return [
        _at_most(
            "assembled tangent against complex step",
            max(error.relative_error for error in errors),
            1e-6,
        ),
        _at_most(
            "central differences against complex step",
            max(error.difference_error for error in errors),
            1e-4,
        ),
        _at_most("complex step dependence on epsilon", step_error, 1e-12),
    ]


def first_peel_step_mismatch(
    density: float,
    setup: PeelSetup = DeskPeelSetup,
    refinement: float = 2.0,
) -> float:
    """Solves the first peel step, where the support gap equals the initial gap, on a grid of the given density and
    returns the equilibrium_check mismatch against a grid refined by the given factor."""
    system, boundary_conditions = peel_system(setup, interaction_config=InteractionConfig(density=density))
    result = newton_solve(
        system,
        torch.zeros(system.num_dofs, dtype=REAL_DTYPE),
        boundary_conditions,
        setup.initial_gap / setup.length,
        TightContinuationConfig,
    )
    return equilibrium_check(system, result.displacements, boundary_conditions, refinement)


def _equilibrium_checks() -> list[VerificationCheck]:
    coarse, fine = (first_peel_step_mismatch(density) for density in (3200.0, 6400.0))
    return [
        _at_most("first peel step mismatch at density 6400", fine, 1e-4),
        _at_most("mismatch ratio when the density doubles from 3200", fine / coarse, 0.7),
    ]


def run_verification_suite(name: str | VerificationSuite) -> list[VerificationCheck]:
    """Run a named group of checks against independent oracles.

    Args:
        name (str | VerificationSuite): One of special-functions, potential-laws, oracles, scaling, integration,
            cutoff, tangent, equilibrium or all.

    Returns:
        checks (list[VerificationCheck]): Measured value, threshold and outcome of every check.

    Raises:
        ValueError: If name is not a suite.

    """
    suite = VerificationSuite(name)
    match suite:
        case VerificationSuite.SPECIAL_FUNCTIONS:
            checks = _special_function_checks()
        case VerificationSuite.POTENTIAL_LAWS:
            checks = _potential_law_checks()
        case VerificationSuite.ORACLES:
            checks = _oracle_checks()
        case VerificationSuite.SCALING:
            checks = _scaling_checks()
        case VerificationSuite.INTEGRATION:
            checks = _integration_checks()
        case VerificationSuite.CUTOFF:
            checks = _cutoff_checks()
        case VerificationSuite.TANGENT:
            checks = _tangent_checks()
        case VerificationSuite.EQUILIBRIUM:
            checks = _equilibrium_checks()
        case VerificationSuite.ALL:
            return [
                check
                for member in VerificationSuite
                if member != VerificationSuite.ALL
                for check in run_verification_suite(member)
            ]
        case _:
            raise NotImplementedError(f"{suite=} is not supported.")

    for check in checks:
        logger.info(
            f"[{suite.value}] {check.name}: {check.value:.3e} (threshold {check.threshold:.1e}) {'passed' if check.passed else 'FAILED'}"
        )
    return checks
