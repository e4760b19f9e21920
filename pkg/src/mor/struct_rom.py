import logging

import numpy as np

from elasticity.base import StructFom
from elasticity.strain import strain_operator
from elasticity.supports import node_dofs
from errors import ConfigError, RomConvergenceError
from mor.base import StructRom
from mor.config import settings

_logger = logging.getLogger("StructRom")


def holdout_split(n: int, stride: int) -> tuple[np.ndarray, np.ndarray]:
    """Every stride-th snapshot is held out; none when there are fewer than stride."""
    index = np.arange(n)
    held = index[stride - 1 :: stride] if n >= stride else index[:0]
    return np.setdiff1d(index, held), held


def truncation_errors(basis: np.ndarray, sigma: np.ndarray, held: np.ndarray) -> np.ndarray:
    """Relative reconstruction error of the held-out set for every truncation 1..rank."""
    if held.shape[1] == 0:
        energy = sigma**2
        tail = np.concatenate([np.cumsum(energy[::-1])[::-1][1:], [0.0]])
        return np.sqrt(tail / energy.sum())
    total = np.linalg.norm(held) ** 2
    if total == 0.0:
        return np.zeros(len(sigma))
    captured = np.cumsum(np.sum((basis.T @ held) ** 2, axis=1))
    return np.sqrt(np.maximum(total - captured, 0.0) / total)


def build_struct_rom(
    fom: StructFom,
    f_snapshots: np.ndarray,
    eta: float | None = None,
    probe_nodes: np.ndarray | None = None,
    probe_elements: np.ndarray | None = None,
    holdout_stride: int | None = None,
) -> StructRom:
    """
    POD of the displacement snapshots S^{-1} f, truncated at the smallest
    size whose held-out reconstruction error is below eta.
    """
    eta = settings.eta_rom if eta is None else eta
    holdout_stride = settings.holdout_stride if holdout_stride is None else holdout_stride
    f_snapshots = np.asarray(f_snapshots, dtype=np.float64)
    if f_snapshots.ndim != 2 or not np.any(f_snapshots):
        raise ConfigError("structural reduction needs a nonzero load snapshot matrix")
    U = fom.solve(f_snapshots)
    train, held = holdout_split(U.shape[1], holdout_stride)
    basis, sigma, _ = np.linalg.svd(U[:, train], full_matrices=False)
    keep = sigma > 1.0e-12 * sigma[0]
    basis, sigma = basis[:, keep], sigma[keep]
    errors = truncation_errors(basis, sigma, U[:, held])
    below = np.flatnonzero(errors < eta)
    if len(below) == 0:
        raise RomConvergenceError(
            f"structural POD: best held-out error {errors.min():.3e} with {len(sigma)} modes is not below {eta:.1e}",
            float(errors.min()),
        )
    n_m = int(below[0]) + 1
    V = basis[:, :n_m]
    S_hat = V.T @ (fom.S @ V)
    S_hat = 0.5 * (S_hat + S_hat.T)
    probe_nodes = np.zeros(0, dtype=np.int64) if probe_nodes is None else np.asarray(probe_nodes, dtype=np.int64)
    probe_elements = (
        np.zeros(0, dtype=np.int64) if probe_elements is None else np.asarray(probe_elements, dtype=np.int64)
    )
    _logger.info(
        f"Structural ROM: {n_m} of {len(sigma)} modes, held-out error {errors[n_m - 1]:.3e} "
        f"({len(train)} training / {len(held)} held-out snapshots)"
    )
    return StructRom(
        V=V,
        S_hat=S_hat,
        singular_values=sigma,
        holdout_error=float(errors[n_m - 1]),
        probe_nodes=probe_nodes,
        probe_elements=probe_elements,
        probe_displacement=V[node_dofs(probe_nodes)],
        probe_strain=strain_operator(fom.mesh, probe_elements) @ V,
    )
