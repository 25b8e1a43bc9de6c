"""
Copyright (c) Meta Platforms, Inc. and affiliates.
All rights reserved.

This source code is licensed under the BSD-style license found in the
LICENSE file in the root directory of this source tree.

"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import reduce
from operator import methodcaller, or_
from typing import Any, TypeVar

import torch


# Every kernel of the package works in double precision; complex-step
# perturbations promote to the matching complex type.
REAL_DTYPE: torch.dtype = torch.float64
COMPLEX_DTYPE: torch.dtype = torch.complex128


@dataclass(init=False)
class AbstractDataclass(ABC):
    """
    Abstract base for configuration dataclasses.

    No `__init__` is generated here so that intermediate bases decorated with
    `@dataclass(init=False)` stay abstract; a concrete subclass becomes
    instantiable as soon as it is decorated with a plain `@dataclass(...)`.

    Example:
    ```
    @dataclass(init=False)
    class LawConfig(AbstractDataclass):
    # Still abstract.

    @dataclass(kw_only=True)
    class IssipLawConfig(LawConfig):
    # Concrete.
    ```

    """

    @abstractmethod
    def __init__(self, *args: Any, **kwargs: Any) -> None:
        """An abstract method that must be implemented by all subclasses."""


_SubclassesType = TypeVar("_SubclassesType")


def get_all_subclasses(
    cls: _SubclassesType, include_cls_self: bool = True
) -> list[_SubclassesType]:
    """
    Retrieves all subclasses of a given class, optionally including the class itself.

    Args:
        cls (SubclassesType): The class for which to find subclasses.
        include_cls_self (bool): Whether to include the class itself in the result. (Default: True)

    Returns:
        list[SubclassesType]: A list of all unique subclasses of the given class.
    """

    def get_all_unique_subclasses(cls: _SubclassesType) -> set[_SubclassesType]:
        return reduce(
            or_,
            map(get_all_unique_subclasses, methodcaller("__subclasses__")(cls)),
            {cls},
        )

    return list(get_all_unique_subclasses(cls) - (set() if include_cls_self else {cls}))


def as_real_tensor(value: float | torch.Tensor) -> torch.Tensor:
    """Converts a scalar or tensor to a tensor in the package's real dtype.

    Complex tensors are passed through unchanged so that complex-step perturbations
    survive every entry point.
    """
    if isinstance(value, torch.Tensor):
        return value if value.is_complex() else value.to(REAL_DTYPE)
    return torch.tensor(value, dtype=REAL_DTYPE)


def real_part(value: torch.Tensor) -> torch.Tensor:
    """Returns the real part of a (possibly complex) tensor.

    Branch decisions (signs, flips, regimes, contact checks) are always taken on this
    value so that complex-step derivatives follow the primal branch.
    """
    return value.real if value.is_complex() else value


def dot(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Contracts the trailing axis of two stacks of vectors, without conjugation."""
    return (a * b).sum(dim=-1)


def vector_norm(a: torch.Tensor) -> torch.Tensor:
    """Euclidean norm over the trailing axis, analytic in complex-step perturbations."""
    return torch.sqrt(dot(a, a))
