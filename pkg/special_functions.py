"""
Copyright (c) Meta Platforms, Inc. and affiliates.
All rights reserved.

This source code is licensed under the BSD-style license found in the
LICENSE file in the root directory of this source tree.

"""

import enum
import logging
import math

import torch
from commons import as_real_tensor, real_part
from special_functions_types import (
    DefaultHypergeometricSeriesConfig,
    Hyp2F1Params,
    HypergeometricSeriesConfig,
)

from torch import Tensor

logger: logging.Logger = logging.getLogger(__name__)


###### ERROR CLASSES ######
class HypergeometricConvergenceError(ArithmeticError):
    """The truncated hypergeometric series failed its tail bound; signals a parameter-range bug."""


@enum.unique
class HypergeometricRegime(enum.Enum):
    """
    Enum class for the evaluation path of 2F1(a, b; c; z) on z <= 0.

    DIRECT: Defining series in z.
    PFAFF: Series in z / (z - 1) after the Pfaff transformation.
    INVERSION: Connection formula with two series in 1 / z.
    """

    DIRECT = enum.auto()
    PFAFF = enum.auto()
    INVERSION = enum.auto()


def gamma_fn(x: float) -> float:
    """Gamma function for positive arguments.

    Args:
        x (float): Argument, x > 0.

    Returns:
        value (float): Gamma(x).

    Raises:
        ValueError: If x <= 0.

    """
    if not x > 0.0:
        raise ValueError(f"Invalid argument value: {x}. Must be > 0.")
    return math.gamma(x)


def _reciprocal_gamma(x: float) -> float:
    """1 / Gamma(x), extended by zero at the poles x = 0, -1, -2, ..."""
    if x <= 0.0 and float(x).is_integer():
        return 0.0
    return 1.0 / math.gamma(x)


def pochhammer(a: float, k: int) -> float:
    """Rising factorial (a)_k = a (a + 1) ... (a + k - 1) = Gamma(a + k) / Gamma(a), with (a)_0 = 1.

    Args:
        a (float): Base.
        k (int): Number of factors, k >= 0.

    Returns:
        value (float): The rising factorial.

    Raises:
        ValueError: If k is negative.

    """
    if k < 0:
        raise ValueError(f"Invalid k value: {k}. Must be >= 0.")
    return float(math.prod(a + i for i in range(k)))


def _gauss_series(
    a: float,
    b: float,
    c: float,
    z: Tensor,
    series_config: HypergeometricSeriesConfig,
) -> Tensor:
    term = torch.ones_like(z)
    partial_sum = torch.ones_like(z)
    for k in range(series_config.max_terms):
        term = term * z * ((a + k) * (b + k) / ((c + k) * (k + 1)))
        partial_sum = partial_sum + term
        if bool(
            (
                term.abs() <= series_config.relative_tolerance * partial_sum.abs()
            ).all()
        ):
            return partial_sum

    raise HypergeometricConvergenceError(
        f"Series 2F1({a}, {b}; {c}; z) did not converge within {series_config.max_terms} terms "
        f"for z in [{real_part(z).min().item()}, {real_part(z).max().item()}]."
    )


def _pfaff_transform(
    a: float,
    b: float,
    c: float,
    z: Tensor,
    series_config: HypergeometricSeriesConfig,
) -> Tensor:
    # 2F1(a, b; c; z) = (1 - z)^(-a) 2F1(a, c - b; c; z / (z - 1))
    return (1 - z) ** (-a) * _gauss_series(a, c - b, c, z / (z - 1), series_config)


def _inversion_formula(
    a: float,
    b: float,
    c: float,
    z: Tensor,
    series_config: HypergeometricSeriesConfig,
) -> Tensor:
    gamma_c = math.gamma(c)
    first_coefficient = (
        gamma_c * math.gamma(b - a) * _reciprocal_gamma(b) * _reciprocal_gamma(c - a)
    )
    second_coefficient = (
        gamma_c * math.gamma(a - b) * _reciprocal_gamma(a) * _reciprocal_gamma(c - b)
    )
    inverse_z = 1 / z
    return first_coefficient * (-z) ** (-a) * _gauss_series(
        a, a - c + 1, a - b + 1, inverse_z, series_config
    ) + second_coefficient * (-z) ** (-b) * _gauss_series(
        b, b - c + 1, b - a + 1, inverse_z, series_config
    )


def _classify_regimes(
    z: Tensor, a: float, b: float, series_config: HypergeometricSeriesConfig
) -> dict[HypergeometricRegime, Tensor]:
    real_z = real_part(z)
    direct = real_z > series_config.pfaff_threshold
    inversion = (real_z < series_config.inversion_threshold) & (
        not float(b - a).is_integer()
    )
    return {
        HypergeometricRegime.DIRECT: direct,
        HypergeometricRegime.PFAFF: ~direct & ~inversion,
        HypergeometricRegime.INVERSION: inversion,
    }


def hyp2f1(
    params: Hyp2F1Params,
    series_config: HypergeometricSeriesConfig = DefaultHypergeometricSeriesConfig,
) -> Tensor:
    """Gauss hypergeometric function 2F1(a, b; c; z) for z <= 0.

    Evaluation is vectorised over z. Each entry is routed to the direct series, the Pfaff transformation or the 1/z
    connection formula according to series_config; for complex z the routing uses the real part.

    Args:
        params (Hyp2F1Params): Parameters a, b, c and argument(s) z.
        series_config (HypergeometricSeriesConfig): Truncation and regime thresholds.
            (Default: DefaultHypergeometricSeriesConfig)

    Returns:
        value (Tensor): 2F1(a, b; c; z) with the shape (and real or complex dtype) of z.

    Raises:
        HypergeometricConvergenceError: If a series does not meet its tail bound within series_config.max_terms terms.

    """
    a, b, c = params.a, params.b, params.c
    z = as_real_tensor(params.z)
    z_flat = z.reshape(-1)
    result = torch.empty_like(z_flat)

    for regime, mask in _classify_regimes(z_flat, a, b, series_config).items():
        if not bool(mask.any()):
            continue
        match regime:
            case HypergeometricRegime.DIRECT:
                values = _gauss_series(a, b, c, z_flat[mask], series_config)
            case HypergeometricRegime.PFAFF:
                values = _pfaff_transform(a, b, c, z_flat[mask], series_config)
            case HypergeometricRegime.INVERSION:
                values = _inversion_formula(a, b, c, z_flat[mask], series_config)
            case _:
                raise NotImplementedError(f"{regime=} is not supported.")
        result[mask] = values

    return result.reshape(z.shape)
