import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from em_assembly.config import settings
from em_assembly.potentials import tet_face_vertices, tet_potentials
from em_assembly.quadrature import TetRule, conical, gauss4, subdivided
from hmatrix.base import BlockOracle
from mesh import Mesh
from models import MU0

_logger = logging.getLogger("Inductance")


@dataclass(frozen=True)
class QuadratureTiers:
    far: TetRule
    near: TetRule
    touching: TetRule
    near_ratio: float

    @classmethod
    def from_settings(cls, near_order: int | None = None, touching_depth: int | None = None) -> "QuadratureTiers":
        return cls(
            far=gauss4(),
            near=conical(settings.near_order if near_order is None else near_order),
            touching=subdivided(settings.touching_depth if touching_depth is None else touching_depth),
            near_ratio=settings.near_ratio,
        )


class ElementGeometry:
    """Per-element arrays shared by every kernel evaluation."""

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        self.elements = mesh.elements
        self.vertices = mesh.nodes[mesh.elements]
        self.faces = tet_face_vertices(self.vertices)
        self.volumes = mesh.volumes
        self.centroids = mesh.centroids
        self.diameters = mesh.diameters
        # slot basis on element e: w = alpha (r - c_e) + beta
        signs = mesh.element_signs.astype(np.float64)
        self.alpha = signs / (3.0 * self.volumes[:, None])
        self.beta = signs[:, :, None] * (self.centroids[:, None, :] - self.vertices) / (3.0 * self.volumes[:, None, None])

    def touching(self, e: np.ndarray, f: np.ndarray) -> np.ndarray:
        a = self.elements[e][:, :, None]
        b = self.elements[f][:, None, :]
        return np.any(a == b, axis=(1, 2))


def _moments_far(geo: ElementGeometry, e: np.ndarray, f: np.ndarray, rule: TetRule) -> np.ndarray:
    pe = rule.points(geo.vertices[e])
    pf = rule.points(geo.vertices[f])
    we = rule.weights[None, :] * geo.volumes[e][:, None]
    wf = rule.weights[None, :] * geo.volumes[f][:, None]
    dist = np.linalg.norm(pe[:, :, None, :] - pf[:, None, :, :], axis=-1)
    kernel = we[:, :, None] * wf[:, None, :] / dist
    de = pe - geo.centroids[e][:, None, :]
    df = pf - geo.centroids[f][:, None, :]
    out = np.empty((len(e), 8))
    out[:, 0] = kernel.sum(axis=(1, 2))
    out[:, 1:4] = np.einsum("pab,pai->pi", kernel, de)
    out[:, 4:7] = np.einsum("pab,pbi->pi", kernel, df)
    out[:, 7] = np.einsum("pab,pai,pbi->p", kernel, de, df)
    return out


def _moments_analytic(geo: ElementGeometry, e: np.ndarray, f: np.ndarray, rule: TetRule) -> np.ndarray:
    """Outer quadrature over e, exact inner integrals over f."""
    q = rule.points(geo.vertices[e])
    wq = rule.weights[None, :] * geo.volumes[e][:, None]
    phi, psi = tet_potentials(q, geo.faces[f][:, None])
    inner = psi + (q - geo.centroids[f][:, None, :]) * phi[..., None]
    de = q - geo.centroids[e][:, None, :]
    out = np.empty((len(e), 8))
    out[:, 0] = np.einsum("pq,pq->p", wq, phi)
    out[:, 1:4] = np.einsum("pq,pq,pqi->pi", wq, phi, de)
    out[:, 4:7] = np.einsum("pq,pqi->pi", wq, inner)
    out[:, 7] = np.einsum("pq,pqi,pqi->p", wq, de, inner)
    return out


def pair_moments(
    geo: ElementGeometry, e: np.ndarray, f: np.ndarray, tiers: QuadratureTiers, chunk: int | None = None
) -> np.ndarray:
    """
    Kernel moments of element pairs (e_p, f_p), columns
    [Gss, Gvs (3), Gsv (3), Gvv] with
        Gss = int_e int_f 1/R          Gvs = int_e int_f (r - c_e)/R
        Gsv = int_e int_f (r' - c_f)/R  Gvv = int_e int_f (r - c_e).(r' - c_f)/R
    """
    chunk = chunk or settings.pair_chunk
    e = np.asarray(e, dtype=np.int64)
    f = np.asarray(f, dtype=np.int64)
    out = np.empty((len(e), 8))
    touching = geo.touching(e, f)
    dist = np.linalg.norm(geo.centroids[e] - geo.centroids[f], axis=1)
    reach = tiers.near_ratio * np.maximum(geo.diameters[e], geo.diameters[f])
    near = ~touching & (dist < reach)
    far = ~touching & ~near
    _logger.debug(f"{len(e)} element pairs: {int(far.sum())} far, {int(near.sum())} near, {int(touching.sum())} touching")
    for mask, fn, rule in (
        (far, _moments_far, tiers.far),
        (near, _moments_analytic, tiers.near),
        (touching, _moments_analytic, tiers.touching),
    ):
        idx = np.flatnonzero(mask)
        step = max(1, chunk // len(rule))
        for start in range(0, len(idx), step):
            sel = idx[start : start + step]
            out[sel] = fn(geo, e[sel], f[sel], rule)
    return out


class InductanceKernel:
    """Galerkin inductance L_ij = mu0/(4 pi) int int w_i . w_j / R between face functions."""

    def __init__(self, mesh: Mesh, tiers: QuadratureTiers | None = None):
        self.mesh = mesh
        self.geo = ElementGeometry(mesh)
        self.tiers = tiers or QuadratureTiers.from_settings()

    def _element_map(self, faces: np.ndarray) -> tuple[np.ndarray, sp.csr_matrix]:
        """Elements touched by `faces` and the sparse map Q from face currents to (alpha, beta) per element."""
        adjacent = self.mesh.face_elements[faces]
        slots = self.mesh.face_local[faces]
        elements, inverse = np.unique(adjacent, return_inverse=True)
        inverse = inverse.reshape(adjacent.shape)
        cols = np.arange(len(faces))
        rows, vals, cidx = [], [], []
        for side in range(2):
            e, s = adjacent[:, side], slots[:, side]
            rows.append(4 * inverse[:, side])
            vals.append(self.geo.alpha[e, s])
            cidx.append(cols)
            for k in range(3):
                rows.append(4 * inverse[:, side] + 1 + k)
                vals.append(self.geo.beta[e, s, k])
                cidx.append(cols)
        Q = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cidx))), shape=(4 * len(elements), len(faces))
        )
        return elements, Q

    def block(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        row_elements, Qr = self._element_map(rows)
        col_elements, Qc = self._element_map(cols)
        E, F = np.meshgrid(row_elements, col_elements, indexing="ij")
        G = pair_moments(self.geo, E.ravel(), F.ravel(), self.tiers).reshape(len(row_elements), len(col_elements), 8)

        # per element pair, the bilinear form between (alpha, beta) coefficient vectors
        ne, nf = len(row_elements), len(col_elements)
        K = np.empty((ne, 4, nf, 4))
        K[:, 0, :, 0] = G[..., 7]
        K[:, 0, :, 1:] = G[..., 1:4]
        K[:, 1:, :, 0] = G[..., 4:7].transpose(0, 2, 1)
        K[:, 1:, :, 1:] = G[..., 0][:, None, :, None] * np.eye(3)[None, :, None, :]
        left = np.asarray(Qr.T @ K.reshape(4 * ne, 4 * nf))
        return MU0 / (4.0 * np.pi) * np.asarray((Qc.T @ left.T).T)

    def entry(self, i: int, j: int) -> float:
        return float(self.block(np.array([i]), np.array([j]))[0, 0])

    @property
    def oracle(self) -> BlockOracle:
        return self.block


def inductance_entry(mesh: Mesh, i: int, j: int, tiers: QuadratureTiers | None = None) -> float:
    return InductanceKernel(mesh, tiers).entry(i, j)


def dense_inductance(mesh: Mesh, tiers: QuadratureTiers | None = None, rows_per_chunk: int = 256) -> np.ndarray:
    kernel = InductanceKernel(mesh, tiers)
    cols = np.arange(mesh.n_faces)
    L = np.empty((mesh.n_faces, mesh.n_faces))
    for start in range(0, mesh.n_faces, rows_per_chunk):
        rows = cols[start : start + rows_per_chunk]
        L[rows] = kernel.block(rows, cols)
    return L
