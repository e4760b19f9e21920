import logging

import numpy as np
import scipy.sparse as sp

from elasticity.base import StructFom
from errors import ConfigError
from mesh import Mesh
from models import Material

_logger = logging.getLogger("Elasticity")

LOCKING_POISSON = 0.49


def elasticity_matrix(material: Material) -> np.ndarray:
    """Isotropic 6x6 C in Voigt order xx, yy, zz, xy, yz, xz with engineering shears."""
    E, nu = material.young_modulus, material.poisson_ratio
    lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    mu = E / (2.0 * (1.0 + nu))
    C = np.zeros((6, 6))
    C[:3, :3] = lam
    C[np.arange(3), np.arange(3)] += 2.0 * mu
    C[np.arange(3, 6), np.arange(3, 6)] = mu
    return C


def strain_displacement(mesh: Mesh, elements: np.ndarray | None = None) -> np.ndarray:
    """(n, 6, 12) engineering-strain B matrices of linear tetrahedra."""
    grads = mesh.shape_gradients if elements is None else mesh.shape_gradients[elements]
    B = np.zeros((len(grads), 6, 12))
    gx, gy, gz = grads[..., 0], grads[..., 1], grads[..., 2]
    B[:, 0, 0::3] = gx
    B[:, 1, 1::3] = gy
    B[:, 2, 2::3] = gz
    B[:, 3, 0::3] = gy
    B[:, 3, 1::3] = gx
    B[:, 4, 1::3] = gz
    B[:, 4, 2::3] = gy
    B[:, 5, 0::3] = gz
    B[:, 5, 2::3] = gx
    return B


def element_dofs(mesh: Mesh) -> np.ndarray:
    return (3 * mesh.elements[:, :, None] + np.arange(3)).reshape(-1, 12)


def assemble_stiffness(mesh: Mesh, material: Material | None = None, dirichlet_dofs=None) -> StructFom:
    material = material or Material()
    if material.poisson_ratio >= LOCKING_POISSON:
        _logger.warning(f"Poisson ratio {material.poisson_ratio} invites volumetric locking on linear tetrahedra")
        raise ConfigError(f"Poisson ratio {material.poisson_ratio} >= {LOCKING_POISSON} is not supported")
    C = elasticity_matrix(material)
    B = strain_displacement(mesh)
    Ke = np.einsum("eki,kl,elj->eij", B, C, B) * mesh.volumes[:, None, None]
    dofs = element_dofs(mesh)
    rows = np.broadcast_to(dofs[:, :, None], Ke.shape).ravel()
    cols = np.broadcast_to(dofs[:, None, :], Ke.shape).ravel()
    n = 3 * mesh.n_nodes
    S = sp.coo_matrix((Ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    S = ((S + S.T) * 0.5).tocsr()
    dirichlet = np.unique(np.asarray([] if dirichlet_dofs is None else dirichlet_dofs, dtype=np.int64))
    if len(dirichlet) and (dirichlet.min() < 0 or dirichlet.max() >= n):
        raise ConfigError(f"Dirichlet DOF outside [0, {n})")
    _logger.info(f"Stiffness: {n} DOFs, {len(dirichlet)} constrained, nnz={S.nnz}")
    return StructFom(mesh=mesh, S=S, material=material, dirichlet_dofs=dirichlet)
