import numpy as np

from em_assembly.potentials import tet_face_vertices, tet_field_factors
from em_assembly.quadrature import subdivided
from mesh import Mesh
from models import MU0

GUARD = 1.0e-3
_EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


def skew(v: np.ndarray) -> np.ndarray:
    """[v]_x with [v]_x a = v x a, batched over leading axes."""
    out = np.zeros(v.shape + (3,))
    out[..., 0, 1], out[..., 0, 2] = -v[..., 2], v[..., 1]
    out[..., 1, 0], out[..., 1, 2] = v[..., 2], -v[..., 0]
    out[..., 2, 0], out[..., 2, 1] = -v[..., 1], v[..., 0]
    return out


def edge_distance(vertices: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Distance from points (..., 3) to the six edges of tetrahedra (..., 4, 3), relative to edge length."""
    best = np.full(np.broadcast_shapes(points.shape[:-1], vertices.shape[:-2]), np.inf)
    for a, b in _EDGES:
        p, q = vertices[..., a, :], vertices[..., b, :]
        edge = q - p
        length_sq = np.sum(edge * edge, axis=-1)
        t = np.clip(np.sum((points - p) * edge, axis=-1) / length_sq, 0.0, 1.0)
        gap = np.linalg.norm(points - p - t[..., None] * edge, axis=-1)
        best = np.minimum(best, gap / np.sqrt(length_sq))
    return best


def facet_field_entry(mesh: Mesh, e: int, r: np.ndarray) -> np.ndarray:
    """
    Per-face contributions (4, 3, 3) so that a uniform current density J in
    element e produces B(r) = sum_F C[F] @ J. Targets within the guard
    distance of an edge fall back to subdivided Biot-Savart quadrature,
    reported as a single nonzero face slot.
    """
    vertices = mesh.nodes[mesh.elements[e]]
    r = np.asarray(r, dtype=np.float64)
    if edge_distance(vertices, r) < GUARD:
        out = np.zeros((4, 3, 3))
        out[0] = biot_savart_matrix(vertices, r)
        return out
    normals, S = tet_field_factors(r, tet_face_vertices(vertices))
    # J x n = -[n]_x J
    return -MU0 / (4.0 * np.pi) * S[:, None, None] * skew(normals)


def biot_savart_matrix(vertices: np.ndarray, r: np.ndarray, depth: int = 3) -> np.ndarray:
    """3x3 G with B(r) = G @ J for a uniform-J tetrahedron, by subdivided quadrature."""
    rule = subdivided(depth)
    q = rule.points(vertices)
    volume = abs(np.linalg.det(vertices[1:] - vertices[0])) / 6.0
    rel = r - q
    dist = np.linalg.norm(rel, axis=-1)
    keep = dist > 0.0
    kernel = (rule.weights[keep] * volume / dist[keep] ** 3)[:, None] * rel[keep]
    # J x (r - r') = -[(r - r')]_x J
    return -MU0 / (4.0 * np.pi) * np.sum(skew(kernel), axis=0)


def uniform_tet_field(mesh: Mesh, e: int, J: np.ndarray, points: np.ndarray) -> np.ndarray:
    """B (N, 3) of element e carrying uniform current density J."""
    return np.array([facet_field_entry(mesh, e, p).sum(axis=0) @ J for p in np.atleast_2d(points)])
