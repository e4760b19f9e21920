from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator

# oracle(rows, cols) -> dense sub-block in original (unpermuted) indices
BlockOracle = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass
class Cluster:
    start: int
    stop: int
    lower: np.ndarray
    upper: np.ndarray
    children: list["Cluster"] = field(default_factory=list)

    @property
    def size(self) -> int:
        return self.stop - self.start

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.upper - self.lower))


@dataclass
class ClusterTree:
    root: Cluster
    perm: np.ndarray  # tree position -> original index
    n_min: int

    def indices(self, cluster: Cluster) -> np.ndarray:
        return self.perm[cluster.start : cluster.stop]

    def leaves(self) -> list[Cluster]:
        out, stack = [], [self.root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                out.append(node)
            else:
                stack.extend(reversed(node.children))
        return out

    def depth(self) -> int:
        def walk(node: Cluster) -> int:
            return 0 if node.is_leaf else 1 + max(walk(c) for c in node.children)

        return walk(self.root)

    @property
    def size(self) -> int:
        return self.root.size


@dataclass
class FullBlock:
    rows: slice
    cols: slice
    data: np.ndarray

    @property
    def storage(self) -> int:
        return int(self.data.size)


@dataclass
class LowRankBlock:
    rows: slice
    cols: slice
    U: np.ndarray
    V: np.ndarray

    @property
    def rank(self) -> int:
        return int(self.U.shape[1])

    @property
    def storage(self) -> int:
        return int(self.U.size + self.V.size)

    def to_dense(self) -> np.ndarray:
        return self.U @ self.V.T


Block = Union[FullBlock, LowRankBlock]


@dataclass
class HMatrix:
    """
    Leaf blocks of a block-cluster tree in permuted coordinates.

    Row block slices index row_perm, column slices index col_perm; products
    are taken in permuted coordinates and scattered back.
    """

    shape: tuple[int, int]
    row_perm: np.ndarray
    col_perm: np.ndarray
    blocks: list[Block]
    eps: float
    eta_adm: float

    @property
    def full_blocks(self) -> list[FullBlock]:
        return [b for b in self.blocks if isinstance(b, FullBlock)]

    @property
    def low_rank_blocks(self) -> list[LowRankBlock]:
        return [b for b in self.blocks if isinstance(b, LowRankBlock)]

    @property
    def storage(self) -> int:
        """Stored float count, the sum over leaves."""
        return sum(b.storage for b in self.blocks)

    @property
    def compression_ratio(self) -> float:
        return self.storage / float(self.shape[0] * self.shape[1])

    @cached_property
    def _near_permuted(self) -> sp.csr_matrix:
        rows, cols, vals = [], [], []
        for b in self.full_blocks:
            r = np.arange(b.rows.start, b.rows.stop)
            c = np.arange(b.cols.start, b.cols.stop)
            rr, cc = np.meshgrid(r, c, indexing="ij")
            rows.append(rr.ravel())
            cols.append(cc.ravel())
            vals.append(b.data.ravel())
        if not rows:
            return sp.csr_matrix(self.shape)
        return sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=self.shape
        )

    def near_field(self) -> sp.csr_matrix:
        """Dense leaves as a sparse matrix in original indices."""
        near = self._near_permuted.tocoo()
        return sp.csr_matrix(
            (near.data, (self.row_perm[near.row], self.col_perm[near.col])), shape=self.shape
        )

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if x.shape[0] != self.shape[1]:
            raise ValueError(f"dimension mismatch: H is {self.shape}, x has {x.shape[0]} rows")
        xp = x[self.col_perm]
        yp = self._near_permuted @ xp
        yp = np.asarray(yp, dtype=np.result_type(xp, np.float64))
        for b in self.low_rank_blocks:
            yp[b.rows] += b.U @ (b.V.T @ xp[b.cols])
        y = np.empty_like(yp)
        y[self.row_perm] = yp
        return y

    def matmat(self, X: np.ndarray) -> np.ndarray:
        return self.matvec(X)

    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y)
        if y.shape[0] != self.shape[0]:
            raise ValueError(f"dimension mismatch: H is {self.shape}, y has {y.shape[0]} rows")
        yp = y[self.row_perm]
        xp = self._near_permuted.T @ yp
        xp = np.asarray(xp, dtype=np.result_type(yp, np.float64))
        for b in self.low_rank_blocks:
            xp[b.cols] += b.V @ (b.U.T @ yp[b.rows])
        x = np.empty_like(xp)
        x[self.col_perm] = xp
        return x

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.shape)
        for b in self.blocks:
            rows = self.row_perm[b.rows]
            cols = self.col_perm[b.cols]
            dense[np.ix_(rows, cols)] = b.data if isinstance(b, FullBlock) else b.to_dense()
        return dense

    def as_linear_operator(self) -> LinearOperator:
        return LinearOperator(self.shape, matvec=self.matvec, rmatvec=self.rmatvec, matmat=self.matmat, dtype=np.float64)


def hmatvec(H: HMatrix, x: np.ndarray) -> np.ndarray:
    return H.matvec(x)


def hmatmat(H: HMatrix, X: np.ndarray) -> np.ndarray:
    return H.matmat(X)


def transpose_matvec(H: HMatrix, y: np.ndarray) -> np.ndarray:
    """H^T y without forming the transpose."""
    return H.rmatvec(y)
