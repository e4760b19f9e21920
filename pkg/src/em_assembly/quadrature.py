from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


@dataclass(frozen=True)
class TetRule:
    """Barycentric points (q, 4) and weights (q,) summing to one."""

    barycentric: np.ndarray
    weights: np.ndarray

    def points(self, vertices: np.ndarray) -> np.ndarray:
        """(..., 4, 3) vertices -> (..., q, 3) physical points."""
        return np.einsum("qa,...ai->...qi", self.barycentric, vertices)

    def __len__(self) -> int:
        return len(self.weights)


@lru_cache(maxsize=None)
def gauss4() -> TetRule:
    a, b = 0.5854101966249685, 0.1381966011250105
    bary = np.full((4, 4), b)
    np.fill_diagonal(bary, a)
    return TetRule(bary, np.full(4, 0.25))


@lru_cache(maxsize=None)
def conical(n: int) -> TetRule:
    """Collapsed-coordinate Gauss-Jacobi product rule with n**3 points."""
    tu, wu = roots_jacobi(n, 2.0, 0.0)
    tv, wv = roots_jacobi(n, 1.0, 0.0)
    tw, ww = roots_legendre(n)
    u, v, w = (tu + 1.0) / 2.0, (tv + 1.0) / 2.0, (tw + 1.0) / 2.0
    U, V, W = np.meshgrid(u, v, w, indexing="ij")
    weights = np.einsum("i,j,k->ijk", wu / 8.0, wv / 4.0, ww / 2.0).ravel() * 6.0
    x = U.ravel()
    y = ((1.0 - U) * V).ravel()
    z = ((1.0 - U) * (1.0 - V) * W).ravel()
    bary = np.stack([1.0 - x - y - z, x, y, z], axis=1)
    return TetRule(bary, weights)


def _red_children() -> np.ndarray:
    """(8, 4, 4) barycentric vertex coordinates of the red-refinement children."""
    corner = np.eye(4)

    def mid(i: int, j: int) -> np.ndarray:
        return 0.5 * (corner[i] + corner[j])

    m01, m02, m03, m12, m13, m23 = mid(0, 1), mid(0, 2), mid(0, 3), mid(1, 2), mid(1, 3), mid(2, 3)
    children = [
        [corner[0], m01, m02, m03],
        [m01, corner[1], m12, m13],
        [m02, m12, corner[2], m23],
        [m03, m13, m23, corner[3]],
        # octahedron split along the m02-m13 diagonal
        [m02, m13, m01, m12],
        [m02, m13, m12, m23],
        [m02, m13, m23, m03],
        [m02, m13, m03, m01],
    ]
    return np.array(children)


@lru_cache(maxsize=None)
def subdivided(depth: int, order: int = 0) -> TetRule:
    """Base rule (gauss4, or conical(order) when order > 0) on 8**depth red-refined children."""
    base = conical(order) if order > 0 else gauss4()
    maps = np.eye(4)[None]
    children = _red_children()
    for _ in range(depth):
        maps = np.einsum("cab,pbj->pcaj", children, maps).reshape(-1, 4, 4)
    bary = np.einsum("qa,paj->pqj", base.barycentric, maps).reshape(-1, 4)
    weights = np.tile(base.weights, len(maps)) / len(maps)
    return TetRule(bary, weights)
