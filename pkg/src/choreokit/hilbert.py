"""Hilbert-curve position codes for the ground plane.

A dancer's (x, z) position is quantized onto a 2^p x 2^p grid over a square
extent and mapped to a single integer in [0, 4^p) by the Hilbert curve, so
that nearby cells get nearby ids. The orientation is fixed: at order 1 the
curve visits (0,0) -> (0,1) -> (1,1) -> (1,0), and every deeper order refines
that U shape recursively. Both directions (cell -> id, id -> cell) are
implemented with the iterative bit-twiddling form and accept scalars or
numpy arrays.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PositionGrid",
    "hilbert_index",
    "hilbert_inverse",
    "position_token",
    "token_cell_center",
]

MAX_ORDER = 15


def _check_order(order: int) -> int:
    order = int(order)
    if not 1 <= order <= MAX_ORDER:
        raise ValueError(f"Hilbert order must be in [1, {MAX_ORDER}], got {order}")
    return order


def hilbert_index(order, cx, cz):
    """Map grid cell (cx, cz) to its Hilbert index in [0, 4^order).

    Accepts scalars or integer arrays (broadcast together). Cells outside
    [0, 2^order) raise ValueError.
    """
    order = _check_order(order)
    x = np.asarray(cx, dtype=np.int64)
    z = np.asarray(cz, dtype=np.int64)
    scalar = x.ndim == 0 and z.ndim == 0
    x, z = np.broadcast_arrays(x, z)
    x = x.copy()
    z = z.copy()
    n = np.int64(1) << order
    if np.any(x < 0) or np.any(z < 0) or np.any(x >= n) or np.any(z >= n):
        raise ValueError(f"cell out of range for order {order}")

    d = np.zeros_like(x)
    s = n >> 1
    while s > 0:
        rx = ((x & s) > 0).astype(np.int64)
        rz = ((z & s) > 0).astype(np.int64)
        d += s * s * ((3 * rx) ^ rz)
        # rotate/reflect the quadrant so the sub-curve is in canonical pose
        flip = (rz == 0) & (rx == 1)
        x = np.where(flip, n - 1 - x, x)
        z = np.where(flip, n - 1 - z, z)
        swap = rz == 0
        x, z = np.where(swap, z, x), np.where(swap, x, z)
        s >>= 1
    return int(d) if scalar else d


def hilbert_inverse(order, index):
    """Invert :func:`hilbert_index`: map an id in [0, 4^order) to (cx, cz)."""
    order = _check_order(order)
    t = np.asarray(index, dtype=np.int64)
    scalar = t.ndim == 0
    t = np.atleast_1d(t).copy()
    n = np.int64(1) << order
    if np.any(t < 0) or np.any(t >= n * n):
        raise ValueError(f"Hilbert id out of range for order {order}")

    x = np.zeros_like(t)
    z = np.zeros_like(t)
    s = np.int64(1)
    while s < n:
        rx = 1 & (t >> 1)
        rz = 1 & (t ^ rx)
        flip = (rz == 0) & (rx == 1)
        x = np.where(flip, s - 1 - x, x)
        z = np.where(flip, s - 1 - z, z)
        swap = rz == 0
        x, z = np.where(swap, z, x), np.where(swap, x, z)
        x += s * rx
        z += s * rz
        t >>= 2
        s <<= 1
    if scalar:
        return int(x[0]), int(z[0])
    return x, z


@dataclass(frozen=True)
class PositionGrid:
    """Uniform 2^order x 2^order quantization grid over a square XZ extent."""

    order: int = 6
    extent: tuple[float, float] = (-10.0, 10.0)

    def __post_init__(self):
        _check_order(self.order)
        lo, hi = self.extent
        if not hi > lo:
            raise ValueError(f"extent max must exceed min, got {self.extent}")

    @property
    def cells_per_side(self) -> int:
        return 1 << self.order

    @property
    def cell_size(self) -> float:
        lo, hi = self.extent
        return (hi - lo) / self.cells_per_side

    @property
    def token_count(self) -> int:
        return self.cells_per_side ** 2

    def cell_of(self, x: float, z: float) -> tuple[int, int]:
        """Quantize a (possibly out-of-extent) point; out-of-range clamps."""
        if not (np.isfinite(x) and np.isfinite(z)):
            raise ValueError(f"non-finite position ({x}, {z})")
        lo, hi = self.extent
        last = self.cells_per_side - 1
        cx = int((min(max(x, lo), hi) - lo) / self.cell_size)
        cz = int((min(max(z, lo), hi) - lo) / self.cell_size)
        return min(cx, last), min(cz, last)

    def cell_bounds(self, cx: int, cz: int) -> tuple[float, float, float, float]:
        """(x_lo, x_hi, z_lo, z_hi) of a cell."""
        lo = self.extent[0]
        cs = self.cell_size
        return lo + cx * cs, lo + (cx + 1) * cs, lo + cz * cs, lo + (cz + 1) * cs


def position_token(grid: PositionGrid, x: float, z: float) -> int:
    """Quantize an XZ position to its Hilbert position-token id."""
    cx, cz = grid.cell_of(x, z)
    return hilbert_index(grid.order, cx, cz)


def token_cell_center(grid: PositionGrid, token_id: int) -> tuple[float, float]:
    """De-quantize a position token to the center of its grid cell."""
    cx, cz = hilbert_inverse(grid.order, token_id)
    lo = grid.extent[0]
    cs = grid.cell_size
    return lo + (cx + 0.5) * cs, lo + (cz + 0.5) * cs
