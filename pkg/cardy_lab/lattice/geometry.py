import numpy as np

from cardy_lab.models.structures import NEIGHBOR_STEPS, SQRT3


# 6-neighborhood of the triangular lattice on an (i, j) array, axis 0 = i, axis 1 = j
HEX_STRUCTURE = np.array([[0, 1, 1], [1, 1, 1], [1, 1, 0]], dtype=bool)
NEIGHBOR_OFFSETS = np.array(NEIGHBOR_STEPS, dtype=np.int64)


def positions(i: np.ndarray, j: np.ndarray, mesh: float) -> np.ndarray:
    """Embedded positions δ(i + j/2, j√3/2) as complex numbers."""
    i = np.asarray(i, dtype=float)
    j = np.asarray(j, dtype=float)
    return mesh * (i + j / 2) + 1j * mesh * j * SQRT3 / 2


def axial_bounds(
    box: tuple[float, float, float, float], mesh: float, pad: float
) -> tuple[int, int, int, int]:
    """Axial index ranges (i_min, i_max, j_min, j_max) covering a padded bounding box."""
    xmin, xmax, ymin, ymax = box
    row = mesh * SQRT3 / 2
    j_min = int(np.floor((ymin - pad) / row))
    j_max = int(np.ceil((ymax + pad) / row))
    i_min = int(np.floor((xmin - pad) / mesh - j_max / 2))
    i_max = int(np.ceil((xmax + pad) / mesh - j_min / 2))
    return i_min, i_max, j_min, j_max


def shifted(grid: np.ndarray, di: int, dj: int, fill=0) -> np.ndarray:
    """out[a, b] = grid[a + di, b + dj], `fill` where the index leaves the array."""
    out = np.full_like(grid, fill)
    x, y = grid.shape
    src_a = slice(max(di, 0), x + min(di, 0))
    dst_a = slice(max(-di, 0), x - max(di, 0))
    src_b = slice(max(dj, 0), y + min(dj, 0))
    dst_b = slice(max(-dj, 0), y - max(dj, 0))
    out[dst_a, dst_b] = grid[src_a, src_b]
    return out
