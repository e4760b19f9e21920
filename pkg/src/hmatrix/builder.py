import logging

import numpy as np

from concurrency import gather_in_threads
from hmatrix.aca import aca_factorize, recompress
from hmatrix.base import Block, BlockOracle, Cluster, ClusterTree, FullBlock, HMatrix, LowRankBlock
from hmatrix.cluster import block_partition
from hmatrix.config import settings

_logger = logging.getLogger("HMatrix")


def scalar_oracle(entry) -> BlockOracle:
    """Lift a scalar entry(i, j) into a block oracle."""

    def oracle(rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        return np.array([[entry(int(i), int(j)) for j in cols] for i in rows], dtype=np.float64).reshape(
            len(rows), len(cols)
        )

    return oracle


def hbuild(
    oracle: BlockOracle,
    row_tree: ClusterTree,
    col_tree: ClusterTree,
    eta_adm: float | None = None,
    eps: float | None = None,
    r_max: int | None = None,
    threads: int = 1,
) -> HMatrix:
    eta_adm = settings.eta_adm if eta_adm is None else eta_adm
    eps = settings.eps if eps is None else eps
    r_max = settings.aca_rank_max if r_max is None else r_max
    partition = block_partition(row_tree, col_tree, eta_adm)

    def make_block(item: tuple[Cluster, Cluster, bool]) -> tuple[Block, bool]:
        sigma, tau, is_admissible = item
        rows = row_tree.indices(sigma)
        cols = col_tree.indices(tau)
        row_slice = slice(sigma.start, sigma.stop)
        col_slice = slice(tau.start, tau.stop)
        if is_admissible:
            factors = aca_factorize(oracle, rows, cols, eps, r_max)
            if factors is not None:
                U, V = recompress(*factors, eps)
                if U.size + V.size < len(rows) * len(cols):
                    return LowRankBlock(row_slice, col_slice, U, V), False
            else:
                return FullBlock(row_slice, col_slice, np.asarray(oracle(rows, cols), dtype=np.float64)), True
        return FullBlock(row_slice, col_slice, np.asarray(oracle(rows, cols), dtype=np.float64)), False

    results = gather_in_threads(make_block, partition, threads)
    demoted = sum(1 for _, flag in results if flag)
    if demoted:
        _logger.warning(f"{demoted} admissible blocks hit the ACA rank cap {r_max} and were stored densely")

    H = HMatrix(
        shape=(row_tree.size, col_tree.size),
        row_perm=row_tree.perm.copy(),
        col_perm=col_tree.perm.copy(),
        blocks=[block for block, _ in results],
        eps=eps,
        eta_adm=eta_adm,
    )
    _logger.info(
        f"H-matrix {H.shape[0]}x{H.shape[1]}: {len(H.full_blocks)} full, {len(H.low_rank_blocks)} low-rank, "
        f"compression {H.compression_ratio:.3f}"
    )
    return H
