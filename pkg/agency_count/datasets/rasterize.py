# agency_count/datasets/rasterize.py
from __future__ import annotations

import math
from typing import Tuple

import numpy as np
from scipy.ndimage import maximum_filter

from agency_count.core.errors import ContractViolationError
from agency_count.datasets.models import CellGrid


def grid_shape(image_size: Tuple[int, int], stride: int) -> Tuple[int, int]:
    if stride < 1:
        raise ContractViolationError(f"stride must be >= 1, got {stride}")
    height, width = image_size
    return math.ceil(height / stride), math.ceil(width / stride)


def cell_indices(points: np.ndarray, stride: int) -> Tuple[np.ndarray, np.ndarray]:
    """(row, col) of the cell holding each ``(x, y)`` point."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    cols = np.floor(points[:, 0] / stride).astype(np.int64)
    rows = np.floor(points[:, 1] / stride).astype(np.int64)
    return rows, cols


def cell_centers(image_size: Tuple[int, int], stride: int) -> np.ndarray:
    """``(N, 2)`` pixel ``(x, y)`` centers of all cells, row-major."""
    rows, cols = grid_shape(image_size, stride)
    ys = (np.arange(rows) + 0.5) * stride
    xs = (np.arange(cols) + 0.5) * stride
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    return np.stack([xx.ravel(), yy.ravel()], axis=1)


def rasterize_density(
    points: np.ndarray, stride: int, image_size: Tuple[int, int]
) -> CellGrid:
    """Hard-binned head counts per cell; the grid sums to the number of points."""
    values = np.zeros(grid_shape(image_size, stride), dtype=np.float32)
    rows, cols = cell_indices(points, stride)
    np.add.at(values, (rows, cols), 1.0)
    return CellGrid(stride=stride, values=values)


def rasterize_mask(
    points: np.ndarray, stride: int, image_size: Tuple[int, int], dilation: int
) -> CellGrid:
    """Occupied cells dilated by ``dilation`` cells (Chebyshev), as a 0/1 grid."""
    if dilation < 0:
        raise ContractViolationError(f"dilation must be >= 0, got {dilation}")
    occupied = (rasterize_density(points, stride, image_size).values > 0).astype(np.uint8)
    if dilation > 0:
        occupied = maximum_filter(
            occupied, size=2 * dilation + 1, mode="constant", cval=0
        )
    return CellGrid(stride=stride, values=occupied.astype(np.float32))
