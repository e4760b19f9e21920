import logging

import numpy as np

from hmatrix.base import BlockOracle

_logger = logging.getLogger("ACA")


def aca_factorize(
    oracle: BlockOracle, rows: np.ndarray, cols: np.ndarray, eps: float, r_max: int
) -> tuple[np.ndarray, np.ndarray] | None:
    """
    Partially pivoted adaptive cross approximation of oracle(rows, cols).

    Returns (U, V) with block ~ U @ V.T, or None when r_max is reached before
    ||u_k|| ||v_k|| <= eps ||U V^T||_F; the caller stores such blocks densely.
    """
    m, n = len(rows), len(cols)
    r_max = min(r_max, m, n)
    us: list[np.ndarray] = []
    vs: list[np.ndarray] = []
    norm2 = 0.0
    used = np.zeros(m, dtype=bool)
    i = 0
    misses = 0
    while len(us) < r_max:
        used[i] = True
        row = np.asarray(oracle(rows[i : i + 1], cols), dtype=np.float64)[0].copy()
        magnitude = float(np.abs(row).max()) if n else 0.0
        if us:
            row -= np.array([u[i] for u in us]) @ np.array(vs)
        j = int(np.argmax(np.abs(row)))
        pivot = row[j]
        scale = max(magnitude, np.sqrt(norm2 / (m * n))) if us else 0.0
        if pivot == 0.0 or abs(pivot) <= 16.0 * np.finfo(np.float64).eps * scale:
            misses += 1
            remaining = np.flatnonzero(~used)
            if len(remaining) == 0 or (us and misses >= 3):
                break
            i = int(remaining[0])
            continue
        misses = 0

        v = row / pivot
        u = np.asarray(oracle(rows, cols[j : j + 1]), dtype=np.float64)[:, 0].copy()
        if us:
            u -= np.array(us).T @ np.array([w[j] for w in vs])

        uu = float(u @ u)
        vv = float(v @ v)
        if us:
            norm2 += 2.0 * float((np.array(us) @ u) @ (np.array(vs) @ v))
        norm2 += uu * vv
        us.append(u)
        vs.append(v)
        if np.sqrt(uu * vv) <= eps * np.sqrt(max(norm2, 0.0)):
            break

        candidates = np.abs(u)
        candidates[used] = -1.0
        i = int(np.argmax(candidates))
        if candidates[i] < 0.0:
            break
    else:
        if r_max < min(m, n) or r_max == 0:
            return None

    if not us:
        return np.zeros((m, 0)), np.zeros((n, 0))
    return np.array(us).T, np.array(vs).T


def recompress(U: np.ndarray, V: np.ndarray, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Truncate U V^T to the smallest rank with Frobenius tail <= eps * norm."""
    if U.shape[1] == 0:
        return U, V
    qu, ru = np.linalg.qr(U)
    qv, rv = np.linalg.qr(V)
    w, sigma, zt = np.linalg.svd(ru @ rv.T)
    total = float(np.sqrt(np.sum(sigma**2)))
    if total == 0.0:
        return np.zeros((U.shape[0], 0)), np.zeros((V.shape[0], 0))
    tail = np.sqrt(np.maximum(np.cumsum((sigma**2)[::-1])[::-1], 0.0))
    # tail[r] is the norm of the discarded part when keeping r terms
    keep = len(sigma)
    for r in range(1, len(sigma)):
        if tail[r] <= eps * total:
            keep = r
            break
    return qu @ (w[:, :keep] * sigma[:keep]), qv @ zt[:keep].T
