"""
Copyright (c) Meta Platforms, Inc. and affiliates.
All rights reserved.

This source code is licensed under the BSD-style license found in the
LICENSE file in the root directory of this source tree.

"""

import json
import logging
import math
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np

logger: logging.Logger = logging.getLogger(__name__)

# Column contracts of the result files; the order is fixed.
PATH_COLUMNS: tuple[str, ...] = ("t", "reaction_x", "reaction_y", "iterations", "post_snap")
SNAPSHOT_COLUMNS: tuple[str, ...] = ("beam", "s", "x", "y", "N", "M", "f1", "f2")
POTENTIAL_TABLE_COLUMNS: tuple[str, ...] = ("q1", "q2", "issip", "lssip", "oracle")
CYLINDER_TABLE_COLUMNS: tuple[str, ...] = ("q2", "potential", "force")
CUTOFF_STUDY_COLUMNS: tuple[str, ...] = ("q2", "cutoff", "relative_error")
INTEGRATION_STUDY_COLUMNS: tuple[str, ...] = ("order", "points_per_length", "relative_error")
TANGENT_TEST_COLUMNS: tuple[str, ...] = ("dof", "max_abs_difference", "relative_error")

# 17 significant digits read back to the same double.
FLOAT_FORMAT: str = "%.17g"
INTEGER_FORMAT: str = "%d"


def _json_ready(value: Any) -> Any:
    match value:
        case dict():
            return {str(key): _json_ready(item) for key, item in value.items()}
        case list() | tuple():
            return [_json_ready(item) for item in value]
        case float() if not math.isfinite(value):
            return None
        case np.generic():
            return _json_ready(value.item())
        case _:
            return value


class ResultWriter:
    """Writes the CSV tables and summary.json of one run below output_dir.

    Directories are created on the first write.

    Args:
        output_dir (str | Path): Root directory of the run's files.

    """

    def __init__(self, output_dir: str | Path) -> None:
        self._output_dir = Path(output_dir)
        self.written: list[Path] = []

    @property
    def output_dir(self) -> Path:
        return self._output_dir

    def _target(self, relative_path: str) -> Path:
        target = self._output_dir / relative_path
        target.parent.mkdir(parents=True, exist_ok=True)
        self.written.append(target)
        return target

    def write_table(
        self,
        relative_path: str,
        columns: Sequence[str],
        rows: np.ndarray | Sequence[Sequence[float]],
        integer_columns: Sequence[str] = (),
    ) -> Path:
        """UTF-8 CSV with a header row; floats carry 17 significant digits, integer_columns are written as integers.

        Non-finite values are written as nan or inf.
        """
        data = np.asarray(rows, dtype=np.float64).reshape(-1, len(columns))
        unknown = set(integer_columns) - set(columns)
        if unknown:
            raise ValueError(f"Invalid integer_columns value: {sorted(unknown)}. Must be table columns.")
        target = self._target(relative_path)
        np.savetxt(
            target,
            data,
            fmt=[INTEGER_FORMAT if column in integer_columns else FLOAT_FORMAT for column in columns],
            delimiter=",",
            header=",".join(columns),
            comments="",
            encoding="utf-8",
        )
        logger.debug(f"Wrote {len(data)} rows to {target}.")
        return target

    def write_summary(self, summary: dict[str, Any], relative_path: str = "summary.json") -> Path:
        """Sorted-key JSON; non-finite floats become null."""
        target = self._target(relative_path)
        target.write_text(
            json.dumps(_json_ready(summary), indent=2, sort_keys=True, allow_nan=False) + "\n",
            encoding="utf-8",
        )
        logger.info(f"Wrote summary to {target}.")
        return target
