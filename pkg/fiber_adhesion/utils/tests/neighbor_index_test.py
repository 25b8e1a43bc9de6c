"""
Copyright (c) Meta Platforms, Inc. and affiliates.
All rights reserved.

This source code is licensed under the BSD-style license found in the
LICENSE file in the root directory of this source tree.

"""

import re
import unittest

import torch
from commons import COMPLEX_DTYPE, REAL_DTYPE
from fiber_adhesion.utils.neighbor_index import NeighborIndex
from scipy.spatial import cKDTree
from torch import Tensor
from torch.testing._internal.common_utils import (
    instantiate_parametrized_tests,
    parametrize,
)


def _brute_force_pairs(
    queries: Tensor, points: Tensor, radius: float
) -> tuple[Tensor, Tensor]:
    distance_squared = (queries[:, None, :] - points[None, :, :]).square().sum(dim=-1)
    return torch.nonzero(distance_squared <= radius * radius, as_tuple=True)


@instantiate_parametrized_tests
class NeighborIndexTest(unittest.TestCase):
    @parametrize("radius", (0.02, 0.05, 0.2))
    def test_matches_brute_force(self, radius: float) -> None:
        generator = torch.Generator().manual_seed(7)
        points = torch.rand(500, 2, dtype=REAL_DTYPE, generator=generator) - 0.3
        queries = torch.rand(300, 2, dtype=REAL_DTYPE, generator=generator) - 0.3
        actual = NeighborIndex(points, cell_size=radius).query_radius(queries, radius)
        expected = _brute_force_pairs(queries, points, radius)
        torch.testing.assert_close(actual[0], expected[0])
        torch.testing.assert_close(actual[1], expected[1])

    def test_matches_kd_tree_pair_count(self) -> None:
        generator = torch.Generator().manual_seed(11)
        points = torch.rand(400, 2, dtype=REAL_DTYPE, generator=generator)
        queries = torch.rand(400, 2, dtype=REAL_DTYPE, generator=generator)
        radius = 0.07
        query_index, _ = NeighborIndex(points, cell_size=0.1).query_radius(
            queries, radius
        )
        expected = cKDTree(queries.numpy()).count_neighbors(cKDTree(points.numpy()), radius)
        self.assertEqual(query_index.numel(), expected)

    def test_radius_is_inclusive_and_strict(self) -> None:
        cutoff = 0.05
        points = torch.tensor([[0.0, 0.0]], dtype=REAL_DTYPE)
        queries = torch.tensor(
            [[0.0, cutoff * (1 + 1e-9)], [cutoff * (1 - 1e-9), 0.0]], dtype=REAL_DTYPE
        )
        query_index, point_index = NeighborIndex(points, cell_size=cutoff).query_radius(
            queries, cutoff
        )
        self.assertEqual(query_index.tolist(), [1])
        self.assertEqual(point_index.tolist(), [0])

    def test_separated_sets(self) -> None:
        points = torch.zeros(10, 2, dtype=REAL_DTYPE)
        queries = torch.full((10, 2), 1.0, dtype=REAL_DTYPE)
        query_index, point_index = NeighborIndex(points, cell_size=0.05).query_radius(
            queries, 0.05
        )
        self.assertEqual(query_index.numel(), 0)
        self.assertEqual(point_index.numel(), 0)

    def test_complex_points_use_real_part(self) -> None:
        points = torch.tensor([[0.0, 0.0]], dtype=REAL_DTYPE).to(COMPLEX_DTYPE) + 1j
        queries = torch.tensor([[0.01, 0.0]], dtype=COMPLEX_DTYPE)
        query_index, _ = NeighborIndex(points, cell_size=0.05).query_radius(queries, 0.05)
        self.assertEqual(query_index.numel(), 1)

    def test_radius_larger_than_cell(self) -> None:
        index = NeighborIndex(torch.zeros(1, 2, dtype=REAL_DTYPE), cell_size=0.05)
        self.assertRaisesRegex(
            ValueError,
            re.escape("Invalid radius value: 0.1. Must be <= cell_size = 0.05."),
            index.query_radius,
            torch.zeros(1, 2, dtype=REAL_DTYPE),
            0.1,
        )

    def test_invalid_cell_size(self) -> None:
        self.assertRaisesRegex(
            ValueError,
            re.escape("Invalid cell_size value: 0.0. Must be > 0.0."),
            NeighborIndex,
            torch.zeros(1, 2, dtype=REAL_DTYPE),
            0.0,
        )
