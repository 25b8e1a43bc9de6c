"""
Copyright (c) Meta Platforms, Inc. and affiliates.
All rights reserved.

This source code is licensed under the BSD-style license found in the
LICENSE file in the root directory of this source tree.

"""

import logging
import math
from dataclasses import dataclass, fields
from functools import reduce
from operator import add

import torch
from commons import as_real_tensor, real_part, vector_norm
from fiber_adhesion.fiber_adhesion_types import (
    CompositeLaw,
    InterpenetrationError,
    NoEquilibriumError,
    PowerLawSpec,
    SectionKinematics,
    SectionPairGeometry,
)
from special_functions import gamma_fn, hyp2f1
from special_functions_types import Hyp2F1Params

from torch import Tensor

logger: logging.Logger = logging.getLogger(__name__)

ISSIP_MIN_EXPONENT: float = 3.5
CYLINDER_MIN_EXPONENT: float = 4.5


###### DATACLASSES ######
@dataclass
class PotentialDerivatives:
    """Section-section potential and its partial derivatives with respect to the offset q1 and the gap q2.

    Derivatives above the requested order are None.

    """

    value: Tensor
    d_q1: Tensor | None = None
    d_q2: Tensor | None = None
    d_q1q1: Tensor | None = None
    d_q1q2: Tensor | None = None
    d_q2q2: Tensor | None = None

    def __add__(self, other: "PotentialDerivatives") -> "PotentialDerivatives":
        def combine(a: Tensor | None, b: Tensor | None) -> Tensor | None:
            return None if a is None or b is None else a + b

        return PotentialDerivatives(
            **{
                f.name: combine(getattr(self, f.name), getattr(other, f.name))
                for f in fields(self)
            }
        )


def law_terms(law: PowerLawSpec | CompositeLaw) -> tuple[PowerLawSpec, ...]:
    match law:
        case PowerLawSpec():
            return (law,)
        case CompositeLaw():
            return law.terms
        case _:
            raise NotImplementedError(f"{type(law)=} is not supported.")


def _check_exponent(law: PowerLawSpec, lower_bound: float) -> None:
    if not law.m > lower_bound:
        raise ValueError(f"Invalid m value: {law.m}. Must be > {lower_bound}.")


def _check_gap(q2: Tensor) -> None:
    if bool((real_part(q2) <= 0).any()):
        raise InterpenetrationError(
            f"Cross sections interpenetrate: min q2 = {real_part(q2).min().item()} <= 0."
        )


def _reduced_radius(geometry: SectionPairGeometry) -> float:
    return math.sqrt(geometry.radius_x * geometry.radius_y / geometry.radius_sum)


def section_constant(law: PowerLawSpec, geometry: SectionPairGeometry) -> float:
    """Prefactor c_m of the section-section law, c_m * q2^(7/2 - m) at zero offset.

    Raises:
        ValueError: If m <= 7/2.

    """
    _check_exponent(law, ISSIP_MIN_EXPONENT)
    m = law.m
    return (
        law.k_m
        * geometry.beta_x
        * geometry.beta_y
        * 2.0 ** (2.5 - m)
        * math.pi**1.5
        * _reduced_radius(geometry)
        * gamma_fn(m - 3.5)
        / gamma_fn(m / 2) ** 2
    )


def _issip_term(
    kinematics: SectionKinematics,
    law: PowerLawSpec,
    geometry: SectionPairGeometry,
    order: int,
) -> PotentialDerivatives:
    m = law.m
    exponent = 3.5 - m
    a, b, c = (2 * m - 7) / 4, (2 * m - 5) / 4, m / 2
    q1, q2 = kinematics.q1, kinematics.q2
    z = -((q1 / q2) ** 2)
    prefactor = section_constant(law, geometry) * q2**exponent

    f0 = hyp2f1(Hyp2F1Params(a=a, b=b, c=c, z=z))
    if order == 0:
        return PotentialDerivatives(value=prefactor * f0)

    # d/dz 2F1(a, b; c; z) = (ab / c) 2F1(a + 1, b + 1; c + 1; z).
    alpha = a * b / c
    f1 = hyp2f1(Hyp2F1Params(a=a + 1, b=b + 1, c=c + 1, z=z))
    g = exponent * f0 - 2 * z * alpha * f1
    first = PotentialDerivatives(
        value=prefactor * f0,
        d_q1=-2 * alpha * prefactor * q1 / q2**2 * f1,
        d_q2=prefactor / q2 * g,
    )
    if order == 1:
        return first

    beta = (a + 1) * (b + 1) / (c + 1)
    f2 = hyp2f1(Hyp2F1Params(a=a + 2, b=b + 2, c=c + 2, z=z))
    first.d_q1q1 = -2 * alpha * prefactor / q2**2 * (f1 + 2 * beta * z * f2)
    first.d_q1q2 = (
        -2
        * alpha
        * prefactor
        * q1
        / q2**3
        * ((exponent - 2) * f1 - 2 * z * beta * f2)
    )
    first.d_q2q2 = (
        prefactor
        / q2**2
        * (
            (exponent - 1) * g
            + 2 * alpha * z * ((2 - exponent) * f1 + 2 * beta * z * f2)
        )
    )
    return first


def issip_derivatives(
    kinematics: SectionKinematics,
    law: PowerLawSpec | CompositeLaw,
    geometry: SectionPairGeometry,
    order: int = 2,
) -> PotentialDerivatives:
    """Section-section potential in offset q1 and gap q2 with its partial derivatives up to order.

    phi = c_m q2^(7/2 - m) 2F1((2m - 7)/4, (2m - 5)/4; m/2; -(q1/q2)^2), summed over the terms of a composite law.
    The derivatives follow from differentiating the hypergeometric kernel analytically.

    Args:
        kinematics (SectionKinematics): Offsets and gaps (batched, real or complex).
        law (PowerLawSpec | CompositeLaw): Point-pair law.
        geometry (SectionPairGeometry): Radii and particle densities.
        order (int): Highest derivative order, 0, 1 or 2. (Default: 2)

    Returns:
        derivatives (PotentialDerivatives): Value and partials up to order.

    Raises:
        ValueError: If any exponent m <= 7/2 or order is out of range.
        InterpenetrationError: If any gap is not positive.

    """
    if order not in (0, 1, 2):
        raise ValueError(f"Invalid order value: {order}. Must be 0, 1 or 2.")
    _check_gap(kinematics.q2)
    return reduce(
        add,
        (_issip_term(kinematics, term, geometry, order) for term in law_terms(law)),
    )


def issip_value(
    kinematics: SectionKinematics,
    law: PowerLawSpec | CompositeLaw,
    geometry: SectionPairGeometry,
) -> Tensor:
    return issip_derivatives(kinematics, law, geometry, order=0).value


def issip_first_derivs(
    kinematics: SectionKinematics,
    law: PowerLawSpec | CompositeLaw,
    geometry: SectionPairGeometry,
) -> tuple[Tensor, Tensor, Tensor]:
    derivatives = issip_derivatives(kinematics, law, geometry, order=1)
    return derivatives.value, derivatives.d_q1, derivatives.d_q2


def issip_second_derivs(
    kinematics: SectionKinematics,
    law: PowerLawSpec | CompositeLaw,
    geometry: SectionPairGeometry,
) -> tuple[Tensor, Tensor, Tensor]:
    derivatives = issip_derivatives(kinematics, law, geometry, order=2)
    return derivatives.d_q1q1, derivatives.d_q1q2, derivatives.d_q2q2


def lssip_derivatives(
    q2: float | Tensor,
    law: PowerLawSpec | CompositeLaw,
    geometry: SectionPairGeometry,
) -> PotentialDerivatives:
    """Gap-only section-section law c_m q2^(7/2 - m) with its first two gap derivatives.

    The offset derivatives are zero.
    """
    q2 = as_real_tensor(q2)
    _check_gap(q2)

    def term(law_term: PowerLawSpec) -> PotentialDerivatives:
        exponent = 3.5 - law_term.m
        value = section_constant(law_term, geometry) * q2**exponent
        zeros = torch.zeros_like(value)
        return PotentialDerivatives(
            value=value,
            d_q1=zeros,
            d_q2=exponent * value / q2,
            d_q1q1=zeros,
            d_q1q2=zeros,
            d_q2q2=exponent * (exponent - 1) * value / q2**2,
        )

    return reduce(add, map(term, law_terms(law)))


def lssip_value_and_force(
    d: Tensor, law: PowerLawSpec | CompositeLaw, geometry: SectionPairGeometry
) -> tuple[Tensor, Tensor]:
    """Gap-only law evaluated from the centroid distance d = x - y.

    Returns:
        phi_bar (Tensor): Potential, shape d.shape[:-1].
        force (Tensor): Force on section x, -grad_x phi_bar = (m - 7/2) c_m q2^(5/2 - m) d / |d|; section y
            receives the opposite force.

    Raises:
        InterpenetrationError: If |d| <= R_x + R_y.

    """
    distance = vector_norm(d)
    derivatives = lssip_derivatives(distance - geometry.radius_sum, law, geometry)
    direction = d / distance.unsqueeze(-1)
    return derivatives.value, -derivatives.d_q2.unsqueeze(-1) * direction


def per_length_coefficient(law: PowerLawSpec, geometry: SectionPairGeometry) -> float:
    """Coefficient A_m of the potential between a cross section and a parallel infinite cylinder, A_m q2^(9/2 - m).

    Raises:
        ValueError: If m <= 9/2.

    """
    _check_exponent(law, CYLINDER_MIN_EXPONENT)
    m = law.m
    return (
        law.k_m
        * geometry.beta_x
        * geometry.beta_y
        * 2.0**1.5
        * math.pi**1.5
        * _reduced_radius(geometry)
        * gamma_fn(m - 4.5)
        / gamma_fn(m - 1)
    )


def cylinder_per_length(
    q2: float | Tensor,
    law: PowerLawSpec | CompositeLaw,
    geometry: SectionPairGeometry,
) -> Tensor:
    q2 = as_real_tensor(q2)
    _check_gap(q2)
    return reduce(
        add,
        (
            per_length_coefficient(term, geometry) * q2 ** (4.5 - term.m)
            for term in law_terms(law)
        ),
    )


def cylinder_per_length_force(
    q2: float | Tensor,
    law: PowerLawSpec | CompositeLaw,
    geometry: SectionPairGeometry,
) -> Tensor:
    """Gap derivative of cylinder_per_length."""
    q2 = as_real_tensor(q2)
    _check_gap(q2)
    return reduce(
        add,
        (
            (4.5 - term.m) * per_length_coefficient(term, geometry) * q2 ** (3.5 - term.m)
            for term in law_terms(law)
        ),
    )


def equilibrium_gap(law: CompositeLaw, geometry: SectionPairGeometry) -> float:
    """Gap at which a section rests on a parallel infinite cylinder, the stationary point of cylinder_per_length.

    Raises:
        ValueError: If the law does not have exactly two terms, or an exponent is <= 9/2.
        NoEquilibriumError: If both terms have the same sign.

    """
    if len(law.terms) != 2:
        raise ValueError(
            f"Invalid terms value: {len(law.terms)} terms. Must be exactly 2 (one attractive, one repulsive)."
        )
    low, high = sorted(law.terms, key=lambda term: term.m)
    if (low.k_m < 0) == (high.k_m < 0):
        raise NoEquilibriumError(
            f"No equilibrium gap: coefficients {low.k_m} and {high.k_m} share a sign."
        )
    ratio = -(
        (high.m - 4.5)
        * per_length_coefficient(high, geometry)
        / ((low.m - 4.5) * per_length_coefficient(low, geometry))
    )
    gap = ratio ** (1.0 / (high.m - low.m))
    logger.debug(f"Equilibrium gap for exponents ({low.m}, {high.m}): {gap:.6e}.")
    return gap
