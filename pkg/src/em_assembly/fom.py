import logging

import numpy as np
import scipy.sparse as sp

from concurrency import gather_in_threads
from em_assembly.base import EmFom
from em_assembly.coils import coil_vector_potential
from em_assembly.config import settings
from em_assembly.inductance import InductanceKernel, QuadratureTiers
from em_assembly.quadrature import conical
from errors import ConfigError
from hmatrix import build_cluster_tree, hbuild
from hmatrix.config import settings as hmatrix_settings
from mesh import Mesh, build_incidence, connected_components
from models import CircularLoop

_logger = logging.getLogger("EmAssembly")


def assemble_resistance(mesh: Mesh, resistivity: float) -> sp.csr_matrix:
    """R_ij = rho int w_i . w_j, nonzero only for faces sharing an element."""
    if resistivity <= 0.0:
        raise ConfigError(f"resistivity must be positive, got {resistivity}")
    vertices = mesh.nodes[mesh.elements]
    offsets = mesh.centroids[:, None, :] - vertices  # c - x_a
    spread = np.sum(offsets**2, axis=(1, 2)) / 20.0
    signs = mesh.element_signs.astype(np.float64)
    local = np.einsum("eai,ebi->eab", offsets, offsets) + spread[:, None, None]
    local *= signs[:, :, None] * signs[:, None, :] / (9.0 * mesh.volumes[:, None, None])
    local *= resistivity

    faces = mesh.element_faces
    rows = np.broadcast_to(faces[:, :, None], local.shape)
    cols = np.broadcast_to(faces[:, None, :], local.shape)
    keep = (rows >= 0) & (cols >= 0)
    R = sp.coo_matrix((local[keep], (rows[keep], cols[keep])), shape=(mesh.n_faces, mesh.n_faces)).tocsr()
    R.sum_duplicates()
    return R


def assemble_input_map(mesh: Mesh, coils: list[CircularLoop], order: int | None = None) -> np.ndarray:
    """B_i[k, c] = int A_c . w_k for unit current in coil c."""
    rule = conical(order or settings.near_order)
    points = rule.points(mesh.nodes[mesh.elements])  # (N_v, q, 3)
    weights = rule.weights[None, :] * mesh.volumes[:, None]
    rel = points - mesh.centroids[:, None, :]
    signs = mesh.element_signs.astype(np.float64)
    alpha = signs / (3.0 * mesh.volumes[:, None])
    beta = signs[:, :, None] * (mesh.centroids[:, None, :] - mesh.nodes[mesh.elements]) / (3.0 * mesh.volumes[:, None, None])
    faces = mesh.element_faces
    internal = faces >= 0

    B = np.zeros((mesh.n_faces, len(coils)))
    for c, loop in enumerate(coils):
        A = coil_vector_potential(loop, points.reshape(-1, 3)).reshape(points.shape)
        moment_r = np.einsum("eq,eqi,eqi->e", weights, A, rel)  # int A . (r - c)
        moment_1 = np.einsum("eq,eqi->ei", weights, A)  # int A
        slot = alpha * moment_r[:, None] + np.einsum("eai,ei->ea", beta, moment_1)
        np.add.at(B[:, c], faces[internal], slot[internal])
    return B


def ground_components(mesh: Mesh) -> np.ndarray:
    """Lowest element index of every connected component."""
    count, labels = connected_components(mesh)
    grounded = np.array([int(np.flatnonzero(labels == c)[0]) for c in range(count)], dtype=np.int64)
    if count > 1:
        _logger.info(f"Mesh has {count} conductor components, grounding elements {grounded.tolist()}")
    return grounded


def assemble_em_fom(
    mesh: Mesh,
    resistivity: float | None = None,
    coils: list[CircularLoop] | None = None,
    eps: float | None = None,
    eta_adm: float | None = None,
    n_min: int | None = None,
    threads: int | None = None,
    tiers: QuadratureTiers | None = None,
) -> EmFom:
    if mesh.n_faces == 0:
        raise ConfigError("mesh has no internal faces; nothing to assemble")
    resistivity = settings.resistivity if resistivity is None else resistivity
    coils = coils or []
    threads = settings.threads if threads is None else threads
    n_min = hmatrix_settings.n_min if n_min is None else n_min

    kernel = InductanceKernel(mesh, tiers)
    tree = build_cluster_tree(mesh.face_centroids, n_min)
    L = hbuild(kernel.oracle, tree, tree, eta_adm=eta_adm, eps=eps, threads=threads)
    R = assemble_resistance(mesh, resistivity)
    D = build_incidence(mesh)
    columns = gather_in_threads(lambda loop: assemble_input_map(mesh, [loop])[:, 0], coils, threads)
    B_i = np.stack(columns, axis=1) if columns else np.zeros((mesh.n_faces, 0))

    fom = EmFom(
        mesh=mesh,
        L=L,
        R=R,
        D=D,
        B_i=B_i,
        coil_names=[loop.name for loop in coils],
        grounded=ground_components(mesh),
        resistivity=resistivity,
    )
    _logger.info(
        f"EM FOM: N_f={mesh.n_faces} states={fom.n_states} coils={fom.n_coils} "
        f"L compression {L.compression_ratio:.3f}"
    )
    return fom
