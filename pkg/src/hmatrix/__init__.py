from hmatrix.aca import aca_factorize, recompress
from hmatrix.base import Cluster, ClusterTree, FullBlock, HMatrix, LowRankBlock, hmatmat, hmatvec, transpose_matvec
from hmatrix.builder import hbuild, scalar_oracle
from hmatrix.cluster import admissible, block_partition, build_cluster_tree
from hmatrix.storage import load_hmatrix, save_hmatrix, stats

__all__ = [
    "aca_factorize",
    "recompress",
    "Cluster",
    "ClusterTree",
    "FullBlock",
    "HMatrix",
    "LowRankBlock",
    "hmatvec",
    "hmatmat",
    "transpose_matvec",
    "hbuild",
    "scalar_oracle",
    "admissible",
    "block_partition",
    "build_cluster_tree",
    "load_hmatrix",
    "save_hmatrix",
    "stats",
]
