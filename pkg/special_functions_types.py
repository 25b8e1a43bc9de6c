"""
Copyright (c) Meta Platforms, Inc. and affiliates.
All rights reserved.

This source code is licensed under the BSD-style license found in the
LICENSE file in the root directory of this source tree.

"""

from dataclasses import dataclass

import torch

from commons import AbstractDataclass, real_part


@dataclass(init=False)
class SpecialFunctionConfig(AbstractDataclass):
    """Base dataclass for special function evaluation configurations."""


@dataclass(kw_only=True)
class HypergeometricSeriesConfig(SpecialFunctionConfig):
    """Configuration for the Gauss hypergeometric series and its transformations.

    The argument range z <= 0 is split into three regimes:
        - z > pfaff_threshold: the defining series is summed directly.
        - inversion_threshold <= z <= pfaff_threshold: the Pfaff transformation maps z to z / (z - 1) in [1/3, 1).
        - z < inversion_threshold: the 1/z connection formula is used (requires b - a not to be an integer;
          otherwise the Pfaff transformation is used instead).

    Attributes:
        relative_tolerance (float): The series is truncated once |term| < relative_tolerance * |partial sum| for every
            entry. (Default: 1e-16)
        max_terms (int): Maximum number of terms before a HypergeometricConvergenceError is raised. (Default: 10000)
        pfaff_threshold (float): Upper end of the Pfaff regime. (Default: -0.5)
        inversion_threshold (float): Lower end of the Pfaff regime. (Default: -9.0)

    """

    relative_tolerance: float = 1e-16
    max_terms: int = 10000
    pfaff_threshold: float = -0.5
    inversion_threshold: float = -9.0

    def __post_init__(self) -> None:
        if not (0.0 < self.relative_tolerance < 1.0):
            raise ValueError(
                f"Invalid relative_tolerance value: {self.relative_tolerance}. Must be in the interval (0.0, 1.0)."
            )
        if self.max_terms < 1:
            raise ValueError(
                f"Invalid max_terms value: {self.max_terms}. Must be >= 1."
            )
        if not (self.inversion_threshold <= self.pfaff_threshold <= 0.0):
            raise ValueError(
                f"Invalid thresholds: {self.inversion_threshold=}, {self.pfaff_threshold=}. Must satisfy inversion_threshold <= pfaff_threshold <= 0.0."
            )


DefaultHypergeometricSeriesConfig = HypergeometricSeriesConfig()


@dataclass(kw_only=True)
class Hyp2F1Params:
    """Parameters and argument of the Gauss hypergeometric function 2F1(a, b; c; z).

    Attributes:
        a (float): First numerator parameter.
        b (float): Second numerator parameter.
        c (float): Denominator parameter; never a non-positive integer.
        z (float | torch.Tensor): Argument(s), z <= 0. Complex tensors are accepted for complex-step differentiation;
            the sign condition applies to their real part.

    """

    a: float
    b: float
    c: float
    z: float | torch.Tensor

    def __post_init__(self) -> None:
        if self.c <= 0 and float(self.c).is_integer():
            raise ValueError(
                f"Invalid c value: {self.c}. Must not be a non-positive integer."
            )
        z = self.z if isinstance(self.z, torch.Tensor) else torch.tensor(self.z)
        if (real_part(z) > 0).any():
            raise ValueError(
                f"Invalid z value: {self.z}. Must be <= 0."
            )
