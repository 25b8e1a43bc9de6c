"""
Copyright (c) Meta Platforms, Inc. and affiliates.
All rights reserved.

This source code is licensed under the BSD-style license found in the
LICENSE file in the root directory of this source tree.

"""

import re
import unittest

from dataclasses import dataclass

import torch

from commons import (
    AbstractDataclass,
    as_real_tensor,
    COMPLEX_DTYPE,
    dot,
    get_all_subclasses,
    real_part,
    REAL_DTYPE,
    vector_norm,
)
from torch.testing._internal.common_utils import (
    instantiate_parametrized_tests,
    parametrize,
)


@instantiate_parametrized_tests
class InvalidAbstractDataclassInitTest(unittest.TestCase):
    @dataclass(init=False)
    class DummyLawConfig(AbstractDataclass):
        """Dummy abstract dataclass for testing. Instantiation should fail."""

    @parametrize("abstract_cls", (AbstractDataclass, DummyLawConfig))
    def test_invalid_init(self, abstract_cls: type[AbstractDataclass]) -> None:
        self.assertRaisesRegex(
            TypeError,
            re.escape(f"Can't instantiate abstract class {abstract_cls.__name__} "),
            abstract_cls,
        )


class DummyRootClass:
    """Dummy root class for GetAllSubclassesTest."""


class DummyFirstSubclass(DummyRootClass):
    """First dummy subclass for GetAllSubclassesTest."""


class DummySecondSubclass(DummyFirstSubclass):
    """Second dummy subclass for GetAllSubclassesTest."""


class DummySecondRootClass:
    """Second dummy root class for GetAllSubclassesTest."""


class DummyMixedSubclass(DummySecondRootClass, DummySecondSubclass):
    """Dummy subclass with mixed inheritance for GetAllSubclassesTest."""


@instantiate_parametrized_tests
class GetAllSubclassesTest(unittest.TestCase):
    @parametrize("include_cls_self", (True, False))
    def test_class_hierarchy_and_multiple_inheritance(
        self, include_cls_self: bool
    ) -> None:
        self.assertCountEqual(
            get_all_subclasses(DummyRootClass, include_cls_self=include_cls_self),
            [DummyFirstSubclass, DummySecondSubclass, DummyMixedSubclass]
            + [DummyRootClass] * include_cls_self,
        )

    @parametrize("include_cls_self", (True, False))
    def test_leaf_class(self, include_cls_self: bool) -> None:
        self.assertCountEqual(
            get_all_subclasses(DummyMixedSubclass, include_cls_self=include_cls_self),
            [DummyMixedSubclass] * include_cls_self,
        )


class TensorHelpersTest(unittest.TestCase):
    def test_as_real_tensor_from_float(self) -> None:
        value = as_real_tensor(0.5)
        self.assertEqual(value.dtype, REAL_DTYPE)
        self.assertEqual(value.item(), 0.5)

    def test_as_real_tensor_keeps_complex(self) -> None:
        value = torch.tensor([1.0 + 1e-30j], dtype=COMPLEX_DTYPE)
        self.assertIs(as_real_tensor(value), value)

    def test_as_real_tensor_promotes_float32(self) -> None:
        self.assertEqual(
            as_real_tensor(torch.ones(2, dtype=torch.float32)).dtype, REAL_DTYPE
        )

    def test_real_part(self) -> None:
        torch.testing.assert_close(
            real_part(torch.tensor([2.0 - 3.0j], dtype=COMPLEX_DTYPE)),
            torch.tensor([2.0], dtype=REAL_DTYPE),
        )

    def test_dot_and_norm(self) -> None:
        a = torch.tensor([[3.0, 4.0], [1.0, 0.0]], dtype=REAL_DTYPE)
        b = torch.tensor([[1.0, 1.0], [0.0, 2.0]], dtype=REAL_DTYPE)
        torch.testing.assert_close(dot(a, b), torch.tensor([7.0, 0.0], dtype=REAL_DTYPE))
        torch.testing.assert_close(
            vector_norm(a), torch.tensor([5.0, 1.0], dtype=REAL_DTYPE)
        )

    def test_vector_norm_complex_step(self) -> None:
        # The imaginary part carries the directional derivative a . e / |a|.
        h = 1e-30
        a = torch.tensor([3.0 + h * 1j, 4.0], dtype=COMPLEX_DTYPE)
        self.assertAlmostEqual(vector_norm(a).imag.item() / h, 0.6, places=14)
