import logging
import threading

import numpy as np
import scipy.sparse as sp

from concurrency import gather_in_threads
from coupling.base import CouplingMaps
from coupling.facet import GUARD, biot_savart_matrix, edge_distance, skew
from em_assembly.coils import loop_field
from em_assembly.potentials import tet_face_vertices, tet_field_factors
from hmatrix import HMatrix, build_cluster_tree, hbuild
from hmatrix.config import settings as hmatrix_settings
from mesh import Mesh, face_moments
from models import MU0, CircularLoop

_logger = logging.getLogger("Coupling")


def build_W(mesh: Mesh) -> tuple[sp.csr_matrix, sp.csr_matrix, sp.csr_matrix]:
    """W_c[e, k] = (int_e w_k)_c / V_e."""
    density = face_moments(mesh) / mesh.volumes[:, None, None]
    internal = mesh.element_faces >= 0
    rows = np.broadcast_to(np.arange(mesh.n_elements)[:, None], internal.shape)[internal]
    cols = mesh.element_faces[internal]
    shape = (mesh.n_elements, mesh.n_faces)
    Wx, Wy, Wz = (sp.csr_matrix((density[..., c][internal], (rows, cols)), shape=shape) for c in range(3))
    return Wx, Wy, Wz


class FieldKernel:
    """K_c[e, k]: component c of B at the centroid of element e from unit current on face k."""

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        self.vertices = mesh.nodes[mesh.elements]
        self.faces = tet_face_vertices(self.vertices)
        self.density = face_moments(mesh) / mesh.volumes[:, None, None]
        self._pending: dict[tuple[bytes, bytes], tuple[np.ndarray, set[int]]] = {}
        self._lock = threading.Lock()

    def source_matrices(self, targets: np.ndarray, sources: np.ndarray) -> np.ndarray:
        """(m, s, 3, 3) G with B(target) = G @ J for uniform J in each source element."""
        normals, S = tet_field_factors(targets[:, None, :], self.faces[sources][None])
        G = -MU0 / (4.0 * np.pi) * np.einsum("msF,sFab->msab", S, skew(normals[0]))
        close = edge_distance(self.vertices[sources][None], targets[:, None, :]) < GUARD
        for i, s in zip(*np.nonzero(close)):
            G[i, s] = biot_savart_matrix(self.vertices[sources[s]], targets[i])
        return G

    def block3(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        """(3, m, n) field blocks for all components."""
        mesh = self.mesh
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        adjacent = mesh.face_elements[cols]
        slots = mesh.face_local[cols]
        sources, inverse = np.unique(adjacent, return_inverse=True)
        inverse = inverse.reshape(adjacent.shape)
        G = self.source_matrices(mesh.centroids[rows], sources)
        J = self.density[adjacent, slots]  # (n, 2, 3)
        return np.einsum("mnsab,nsb->amn", G[:, inverse], J)

    def component(self, c: int):
        """Oracle for component c. A block computed for one component is kept until the other two have read it."""

        def oracle(rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
            key = (np.asarray(rows, dtype=np.int64).tobytes(), np.asarray(cols, dtype=np.int64).tobytes())
            with self._lock:
                entry = self._pending.get(key)
            if entry is None:
                entry = (self.block3(rows, cols), set())
                with self._lock:
                    entry = self._pending.setdefault(key, entry)
            with self._lock:
                entry[1].add(c)
                if len(entry[1]) == 3:
                    self._pending.pop(key, None)
            return entry[0][c]

        return oracle

    def clear(self) -> None:
        with self._lock:
            self._pending.clear()


def build_K(
    mesh: Mesh,
    eps: float | None = None,
    eta_adm: float | None = None,
    n_min: int | None = None,
    threads: int = 1,
) -> tuple[HMatrix, HMatrix, HMatrix]:
    n_min = hmatrix_settings.n_min if n_min is None else n_min
    kernel = FieldKernel(mesh)
    row_tree = build_cluster_tree(mesh.centroids, n_min)
    col_tree = build_cluster_tree(mesh.face_centroids, n_min)
    Kx, Ky, Kz = (
        hbuild(kernel.component(c), row_tree, col_tree, eta_adm=eta_adm, eps=eps, threads=threads) for c in range(3)
    )
    kernel.clear()
    return Kx, Ky, Kz


def dense_K(mesh: Mesh, rows_per_chunk: int = 128) -> np.ndarray:
    """(3, N_v, N_f) dense field maps."""
    kernel = FieldKernel(mesh)
    cols = np.arange(mesh.n_faces)
    out = np.empty((3, mesh.n_elements, mesh.n_faces))
    for start in range(0, mesh.n_elements, rows_per_chunk):
        rows = np.arange(start, min(start + rows_per_chunk, mesh.n_elements))
        out[:, rows] = kernel.block3(rows, cols)
    return out


def build_P(mesh: Mesh) -> sp.csr_matrix:
    """Consistent body-force lumping: V_e/4 to each node of e, per component."""
    n_v = mesh.n_elements
    rows, cols = [], []
    for c in range(3):
        rows.append(3 * mesh.elements + c)
        cols.append(np.broadcast_to((c * n_v + np.arange(n_v))[:, None], mesh.elements.shape))
    vals = np.tile(np.repeat(mesh.volumes / 4.0, 4), 3)
    return sp.csr_matrix(
        (vals, (np.concatenate([r.ravel() for r in rows]), np.concatenate([c.ravel() for c in cols]))),
        shape=(3 * mesh.n_nodes, 3 * n_v),
    )


def eval_Bext(coils: list[CircularLoop], currents: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Superposed loop fields (N, 3) for coil currents in amperes."""
    currents = np.asarray(currents, dtype=np.float64)
    if len(currents) != len(coils):
        raise ValueError(f"{len(coils)} coils but {len(currents)} currents")
    if not np.all(np.isfinite(currents)):
        raise ValueError("non-finite coil current")
    B = np.zeros((len(np.atleast_2d(points)), 3))
    for loop, current in zip(coils, currents):
        if current != 0.0:
            B += loop_field(loop, points, current)
    return B


def coil_unit_fields(mesh: Mesh, coils: list[CircularLoop], threads: int = 1) -> np.ndarray:
    fields = gather_in_threads(lambda loop: loop_field(loop, mesh.centroids), coils, threads)
    return np.stack(fields) if fields else np.zeros((0, mesh.n_elements, 3))


def build_coupling_maps(
    mesh: Mesh,
    coils: list[CircularLoop],
    eps: float | None = None,
    eta_adm: float | None = None,
    n_min: int | None = None,
    threads: int = 1,
) -> CouplingMaps:
    maps = CouplingMaps(
        mesh=mesh,
        W=build_W(mesh),
        K=build_K(mesh, eps=eps, eta_adm=eta_adm, n_min=n_min, threads=threads),
        P=build_P(mesh),
        coil_names=[loop.name for loop in coils],
        coil_fields=coil_unit_fields(mesh, coils, threads),
    )
    _logger.info(
        f"Coupling maps: N_v={mesh.n_elements} N_f={mesh.n_faces}, K compression "
        f"{np.mean([K.compression_ratio for K in maps.K]):.3f}"
    )
    return maps


def current_density(maps: CouplingMaps, j: np.ndarray) -> np.ndarray:
    return np.stack([W @ j for W in maps.W], axis=-1)


def eddy_field(maps: CouplingMaps, j: np.ndarray) -> np.ndarray:
    return np.stack([K.matvec(j) for K in maps.K], axis=-1)


def force_density(maps: CouplingMaps, j: np.ndarray, B_ext_now: np.ndarray) -> np.ndarray:
    """F = J x (B_eddy + B_ext) per element (N_v, 3)."""
    j = np.asarray(j, dtype=np.float64)
    if j.shape[0] != maps.mesh.n_faces:
        raise ValueError(f"face currents have {j.shape[0]} entries, mesh has {maps.mesh.n_faces} faces")
    B_ext_now = np.asarray(B_ext_now, dtype=np.float64)
    if B_ext_now.shape != (maps.mesh.n_elements, 3):
        raise ValueError(f"external field must be ({maps.mesh.n_elements}, 3), got {B_ext_now.shape}")
    return np.cross(current_density(maps, j), eddy_field(maps, j) + B_ext_now)


def stack_components(F: np.ndarray) -> np.ndarray:
    """(N_v, 3) -> [Fx; Fy; Fz]."""
    return np.asarray(F).T.reshape(-1)


def assemble_load(maps: CouplingMaps, j: np.ndarray, B_ext_now: np.ndarray) -> np.ndarray:
    return maps.P @ stack_components(force_density(maps, j, B_ext_now))


def total_force(F: np.ndarray, volumes: np.ndarray) -> np.ndarray:
    return np.asarray(F).T @ np.asarray(volumes)


def total_force_operator(mesh: Mesh) -> sp.csr_matrix:
    """3 x 3N_v map from stacked force densities to the total force."""
    n_v = mesh.n_elements
    rows = np.repeat(np.arange(3), n_v)
    cols = np.arange(3 * n_v)
    return sp.csr_matrix((np.tile(mesh.volumes, 3), (rows, cols)), shape=(3, 3 * n_v))
