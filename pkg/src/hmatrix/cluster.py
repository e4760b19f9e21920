import numpy as np

from errors import ConfigError
from hmatrix.base import Cluster, ClusterTree


def build_cluster_tree(points: np.ndarray, n_min: int = 32) -> ClusterTree:
    """
    Geometric bisection along the longest bounding-box axis at the median.

    Ties in the split coordinate are broken by original index, so the tree is
    a pure function of the input order.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or len(points) == 0:
        raise ConfigError(f"cluster tree needs a non-empty (n, d) point array, got {points.shape}")
    if n_min < 1:
        raise ConfigError(f"n_min must be >= 1, got {n_min}")
    perm = np.arange(len(points))

    def split(start: int, stop: int) -> Cluster:
        idx = perm[start:stop]
        pts = points[idx]
        node = Cluster(start, stop, pts.min(axis=0), pts.max(axis=0))
        if stop - start > n_min:
            axis = int(np.argmax(node.upper - node.lower))
            perm[start:stop] = idx[np.lexsort((idx, pts[:, axis]))]
            mid = start + (stop - start) // 2
            node.children = [split(start, mid), split(mid, stop)]
        return node

    root = split(0, len(points))
    return ClusterTree(root=root, perm=perm, n_min=n_min)


def box_distance(sigma: Cluster, tau: Cluster) -> float:
    gap = np.maximum(0.0, np.maximum(tau.lower - sigma.upper, sigma.lower - tau.upper))
    return float(np.linalg.norm(gap))


def admissible(sigma: Cluster, tau: Cluster, eta_adm: float) -> bool:
    dist = box_distance(sigma, tau)
    return dist > 0.0 and min(sigma.diameter, tau.diameter) <= eta_adm * dist


def block_partition(
    row_tree: ClusterTree, col_tree: ClusterTree, eta_adm: float
) -> list[tuple[Cluster, Cluster, bool]]:
    """Leaves of the block-cluster tree as (sigma, tau, admissible)."""
    leaves: list[tuple[Cluster, Cluster, bool]] = []
    stack = [(row_tree.root, col_tree.root)]
    while stack:
        sigma, tau = stack.pop()
        if admissible(sigma, tau, eta_adm):
            leaves.append((sigma, tau, True))
        elif sigma.is_leaf or tau.is_leaf:
            leaves.append((sigma, tau, False))
        else:
            stack.extend((s, t) for s in reversed(sigma.children) for t in reversed(tau.children))
    return leaves
