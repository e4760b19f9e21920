import json
from collections import Counter
from pathlib import Path

import numpy as np

from errors import BundleMismatchError, ConfigError
from hmatrix.base import FullBlock, HMatrix, LowRankBlock

FORMAT_VERSION = 1


def stats(H: HMatrix) -> dict:
    ranks = Counter(b.rank for b in H.low_rank_blocks)
    return {
        "shape": list(H.shape),
        "full_blocks": len(H.full_blocks),
        "low_rank_blocks": len(H.low_rank_blocks),
        "rank_histogram": {str(r): ranks[r] for r in sorted(ranks)},
        "max_rank": max(ranks) if ranks else 0,
        "stored_bytes": 8 * H.storage,
        "dense_bytes": 8 * H.shape[0] * H.shape[1],
        "compression_ratio": H.compression_ratio,
        "eps": H.eps,
        "eta_adm": H.eta_adm,
    }


def stats_json(H: HMatrix) -> str:
    return json.dumps(stats(H), indent=2)


def hmatrix_arrays(H: HMatrix, prefix: str = "") -> dict[str, np.ndarray]:
    """Flatten H into named arrays: header, tree topology, block payloads."""
    kinds, ranges, ranks = [], [], []
    payload = []
    for b in H.blocks:
        ranges.append([b.rows.start, b.rows.stop, b.cols.start, b.cols.stop])
        if isinstance(b, FullBlock):
            kinds.append(0)
            ranks.append(0)
            payload.append(b.data.ravel())
        else:
            kinds.append(1)
            ranks.append(b.rank)
            payload.extend([b.U.ravel(), b.V.ravel()])
    return {
        f"{prefix}version": np.array(FORMAT_VERSION),
        f"{prefix}shape": np.array(H.shape, dtype=np.int64),
        f"{prefix}tolerances": np.array([H.eps, H.eta_adm]),
        f"{prefix}row_perm": H.row_perm,
        f"{prefix}col_perm": H.col_perm,
        f"{prefix}kinds": np.array(kinds, dtype=np.int8),
        f"{prefix}ranges": np.array(ranges, dtype=np.int64).reshape(-1, 4),
        f"{prefix}ranks": np.array(ranks, dtype=np.int64),
        f"{prefix}payload": np.concatenate(payload) if payload else np.zeros(0),
    }


def hmatrix_from_arrays(arrays, prefix: str = "") -> HMatrix:
    version = int(arrays[f"{prefix}version"])
    if version != FORMAT_VERSION:
        raise BundleMismatchError(f"H-matrix format version {version}, expected {FORMAT_VERSION}")
    payload = arrays[f"{prefix}payload"]
    blocks = []
    offset = 0
    for kind, (r0, r1, c0, c1), rank in zip(arrays[f"{prefix}kinds"], arrays[f"{prefix}ranges"], arrays[f"{prefix}ranks"]):
        rows, cols = slice(int(r0), int(r1)), slice(int(c0), int(c1))
        m, n = int(r1 - r0), int(c1 - c0)
        if kind == 0:
            blocks.append(FullBlock(rows, cols, payload[offset : offset + m * n].reshape(m, n)))
            offset += m * n
        else:
            r = int(rank)
            U = payload[offset : offset + m * r].reshape(m, r)
            offset += m * r
            V = payload[offset : offset + n * r].reshape(n, r)
            offset += n * r
            blocks.append(LowRankBlock(rows, cols, U, V))
    if offset != len(payload):
        raise ConfigError(f"corrupt H-matrix payload: consumed {offset} of {len(payload)} values")
    eps, eta_adm = arrays[f"{prefix}tolerances"]
    shape = arrays[f"{prefix}shape"]
    return HMatrix(
        shape=(int(shape[0]), int(shape[1])),
        row_perm=np.asarray(arrays[f"{prefix}row_perm"]),
        col_perm=np.asarray(arrays[f"{prefix}col_perm"]),
        blocks=blocks,
        eps=float(eps),
        eta_adm=float(eta_adm),
    )


def save_hmatrix(H: HMatrix, path: str | Path) -> Path:
    path = Path(path)
    np.savez(path, **hmatrix_arrays(H))
    return path if path.suffix == ".npz" else path.with_suffix(path.suffix + ".npz")


def load_hmatrix(path: str | Path) -> HMatrix:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"H-matrix file not found: {path}")
    with np.load(path) as data:
        return hmatrix_from_arrays({k: data[k] for k in data.files})
