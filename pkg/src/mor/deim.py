import logging

import numpy as np

from coupling.base import CouplingMaps
from coupling.maps import total_force_operator
from errors import ConfigError, NumericalError
from mor.base import DeimOperator, EmRom, StructRom, stack_composites
from mor.config import settings

_logger = logging.getLogger("Deim")


def deim_points(Z: np.ndarray) -> np.ndarray:
    """Greedy interpolation indices: largest residual entry of each new basis vector."""
    points = [int(np.argmax(np.abs(Z[:, 0])))]
    for l in range(1, Z.shape[1]):
        c = np.linalg.solve(Z[points, :l], Z[points, l])
        residual = Z[:, l] - Z[:, :l] @ c
        points.append(int(np.argmax(np.abs(residual))))
    return np.array(points, dtype=np.int64)


def _lift(left: np.ndarray, SZ: np.ndarray) -> np.ndarray:
    """left @ SZ^{-1}."""
    return np.linalg.solve(SZ.T, left.T).T


def build_deim(
    F_snapshots: np.ndarray,
    roms: list[EmRom],
    maps: CouplingMaps,
    struct_rom: StructRom,
    k_tol: float | None = None,
) -> DeimOperator:
    """TSVD of the stacked force densities, greedy point selection and the k-sized online operators."""
    k_tol = settings.deim_cutoff if k_tol is None else k_tol
    F_snapshots = np.asarray(F_snapshots, dtype=np.float64)
    U, sigma, _ = np.linalg.svd(F_snapshots, full_matrices=False)
    if len(sigma) == 0 or sigma[0] == 0.0:
        raise ConfigError("DEIM needs force snapshots of rank >= 1")
    k = int(np.count_nonzero(sigma > k_tol * sigma[0]))
    Z = U[:, :k]
    points = deim_points(Z)
    SZ = Z[points]
    if len(np.unique(points)) < k or np.linalg.cond(SZ) > 1.0e12:
        raise NumericalError(f"DEIM selection matrix is rank deficient (k={k}, cond={np.linalg.cond(SZ):.3e})")

    mesh = maps.mesh
    n_v = mesh.n_elements
    component, element = np.divmod(points, n_v)
    a, b = (component + 1) % 3, (component + 2) % 3
    WV, KV = stack_composites(roms)
    fields = maps.coil_fields
    operator = DeimOperator(
        Z=Z,
        points=points,
        singular_values=sigma,
        SZ=SZ,
        load_lift=_lift(struct_rom.V.T @ (maps.P @ Z), SZ),
        force_lift=_lift(total_force_operator(mesh) @ Z, SZ),
        J_a=WV[a, element],
        J_b=WV[b, element],
        K_a=KV[a, element],
        K_b=KV[b, element],
        B_a=fields[:, element, a].T,
        B_b=fields[:, element, b].T,
    )
    _logger.info(f"DEIM: k={k} of {len(sigma)} singular values above {k_tol:.1e}")
    return operator
