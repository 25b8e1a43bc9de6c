"""
Copyright (c) Meta Platforms, Inc. and affiliates.
All rights reserved.

This source code is licensed under the BSD-style license found in the
LICENSE file in the root directory of this source tree.

"""

import logging
import time

import torch

from torch import Tensor

logger: logging.Logger = logging.getLogger(__name__)

# Cell coordinates are shifted into [0, 2^31) before being packed into one int64 key.
_CELL_OFFSET: int = 1 << 30
_NEIGHBOR_CELLS: tuple[tuple[int, int], ...] = tuple(
    (dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1)
)


class NeighborIndex:
    """Uniform spatial hash over 2D points for fixed-radius queries.

    Every query radius up to cell_size is answered exactly by looking at the 3 x 3 block of cells around the query.

    Args:
        points (Tensor): Indexed points, shape (N, 2). Only the real part is used.
        cell_size (float): Edge length of the hash cells.

    """

    def __init__(self, points: Tensor, cell_size: float) -> None:
        if not cell_size > 0.0:
            raise ValueError(f"Invalid cell_size value: {cell_size}. Must be > 0.0.")
        self._cell_size = cell_size
        self._points = (points.real if points.is_complex() else points).detach()
        self._sorted_keys, self._order = torch.sort(self._cell_keys(self._points))

    @property
    def cell_size(self) -> float:
        return self._cell_size

    def _cell_coordinates(self, points: Tensor) -> Tensor:
        return torch.floor(points / self._cell_size).to(torch.int64)

    @staticmethod
    def _pack(cells: Tensor) -> Tensor:
        return (cells[..., 0] + _CELL_OFFSET) * (1 << 32) + (cells[..., 1] + _CELL_OFFSET)

    def _cell_keys(self, points: Tensor) -> Tensor:
        return self._pack(self._cell_coordinates(points))

    def query_radius(self, queries: Tensor, radius: float) -> tuple[Tensor, Tensor]:
        """All (query, point) index pairs with distance <= radius.

        Args:
            queries (Tensor): Query points, shape (M, 2). Only the real part is used.
            radius (float): Search radius, at most cell_size.

        Returns:
            query_index (Tensor): Query indices, sorted lexicographically together with point_index.
            point_index (Tensor): Indices into the indexed points.

        """
        if radius > self._cell_size:
            raise ValueError(
                f"Invalid radius value: {radius}. Must be <= cell_size = {self._cell_size}."
            )
        start_time = time.perf_counter()
        queries = (queries.real if queries.is_complex() else queries).detach()
        query_cells = self._cell_coordinates(queries)

        candidate_queries, candidate_points = [], []
        for dx, dy in _NEIGHBOR_CELLS:
            keys = self._pack(query_cells + torch.tensor([dx, dy]))
            first = torch.searchsorted(self._sorted_keys, keys, right=False)
            counts = torch.searchsorted(self._sorted_keys, keys, right=True) - first
            query_index = torch.repeat_interleave(torch.arange(keys.numel()), counts)
            group_start = torch.cumsum(counts, 0) - counts
            within_group = torch.arange(query_index.numel()) - torch.repeat_interleave(
                group_start, counts
            )
            sorted_position = torch.repeat_interleave(first, counts) + within_group
            candidate_queries.append(query_index)
            candidate_points.append(self._order[sorted_position])

        query_index = torch.cat(candidate_queries)
        point_index = torch.cat(candidate_points)
        distance_squared = (
            (queries[query_index] - self._points[point_index]).square().sum(dim=-1)
        )
        keep = distance_squared <= radius * radius
        query_index, point_index = query_index[keep], point_index[keep]

        # Lexicographic (query, point) order.
        order = torch.argsort(
            query_index * max(self._points.shape[0], 1) + point_index, stable=True
        )
        query_index, point_index = query_index[order], point_index[order]
        logger.debug(
            f"Neighbor search: {queries.shape[0]} queries, {self._points.shape[0]} points, "
            f"{keep.numel()} candidates, {query_index.numel()} pairs within {radius} "
            f"in {time.perf_counter() - start_time:.3e} s."
        )
        return query_index, point_index

