import numpy as np
import scipy.sparse as sp

from elasticity.stiffness import element_dofs, elasticity_matrix, strain_displacement
from mesh import Mesh
from models import Material

STRAIN_COMPONENTS = ("exx", "eyy", "ezz", "exy", "eyz", "exz")

# engineering shear -> tensor shear
_TENSOR_SCALE = np.array([1.0, 1.0, 1.0, 0.5, 0.5, 0.5])


def recover_strain(mesh: Mesh, u: np.ndarray, e: int) -> np.ndarray:
    """Constant small-strain tensor (3x3) of element e."""
    u = np.asarray(u, dtype=np.float64)
    if u.shape[0] != 3 * mesh.n_nodes:
        raise ValueError(f"displacement has {u.shape[0]} entries, expected {3 * mesh.n_nodes}")
    grad = mesh.shape_gradients[e]  # (4, 3)
    local = u.reshape(-1, 3)[mesh.elements[e]]  # (4, 3)
    G = local.T @ grad
    return 0.5 * (G + G.T)


def strain_operator(mesh: Mesh, elements: np.ndarray) -> sp.csr_matrix:
    """Sparse (6 n, 3N_n) map u -> [exx, eyy, ezz, exy, eyz, exz] per listed element."""
    elements = np.asarray(elements, dtype=np.int64)
    B = strain_displacement(mesh, elements) * _TENSOR_SCALE[None, :, None]
    dofs = element_dofs(mesh)[elements]
    rows = np.broadcast_to((6 * np.arange(len(elements)))[:, None, None] + np.arange(6)[None, :, None], B.shape)
    cols = np.broadcast_to(dofs[:, None, :], B.shape)
    return sp.coo_matrix((B.ravel(), (rows.ravel(), cols.ravel())), shape=(6 * len(elements), 3 * mesh.n_nodes)).tocsr()


def von_mises(strain: np.ndarray, material: Material) -> np.ndarray:
    """Equivalent stress from tensor strains (..., 6) ordered as STRAIN_COMPONENTS."""
    strain = np.asarray(strain, dtype=np.float64)
    s = (strain / _TENSOR_SCALE) @ elasticity_matrix(material).T
    sxx, syy, szz, sxy, syz, sxz = np.moveaxis(s, -1, 0)
    return np.sqrt(
        0.5 * ((sxx - syy) ** 2 + (syy - szz) ** 2 + (szz - sxx) ** 2) + 3.0 * (sxy**2 + syz**2 + sxz**2)
    )
