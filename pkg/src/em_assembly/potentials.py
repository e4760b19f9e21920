"""
Closed-form potentials of flat triangles and uniform tetrahedra.

For a point r and a triangle T with unit normal n:

    S(r) = int_T 1/|r - r'| dS'        T(r) = int_T |r - r'| dS'

The tetrahedron potentials follow from the divergence theorem over its four
outward faces:

    Phi(r) = int_V 1/|r - r'| dV' = 1/2 sum_F h_F S_F(r),   h_F = (a_F - r) . n_F
    Psi(r) = int_V (r' - r)/|r - r'| dV' = sum_F n_F T_F(r)
"""

import numpy as np

from mesh import LOCAL_FACES


def _edge_log(R: np.ndarray, l: np.ndarray, R0_sq: np.ndarray) -> np.ndarray:
    # R + l without cancellation when l < 0
    return np.where(l >= 0.0, R + l, R0_sq / np.maximum(R - l, np.finfo(np.float64).tiny))


def triangle_potentials(r: np.ndarray, tri: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    S and T for points r (..., 3) and triangles tri (..., 3, 3), broadcast together.
    """
    v0, v1, v2 = tri[..., 0, :], tri[..., 1, :], tri[..., 2, :]
    cross = np.cross(v1 - v0, v2 - v0)
    n = cross / np.linalg.norm(cross, axis=-1, keepdims=True)
    d = np.sum((r - v0) * n, axis=-1)
    rho = r - d[..., None] * n
    d_abs = np.abs(d)
    d_sq = d * d

    S = np.zeros(np.broadcast_shapes(d.shape, rho.shape[:-1]))
    edge_terms = np.zeros_like(S)
    for a, b in ((v0, v1), (v1, v2), (v2, v0)):
        edge = b - a
        length = np.linalg.norm(edge, axis=-1, keepdims=True)
        l_hat = edge / length
        m_hat = np.cross(l_hat, n)
        t0 = np.sum((a - rho) * m_hat, axis=-1)
        l_minus = np.sum((a - rho) * l_hat, axis=-1)
        l_plus = np.sum((b - rho) * l_hat, axis=-1)
        R0_sq = t0 * t0 + d_sq
        R_minus = np.sqrt(l_minus * l_minus + R0_sq)
        R_plus = np.sqrt(l_plus * l_plus + R0_sq)

        on_line = np.abs(t0) <= 1.0e-14 * np.squeeze(length, -1)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_term = np.log(_edge_log(R_plus, l_plus, R0_sq) / _edge_log(R_minus, l_minus, R0_sq))
        log_term = np.where(on_line | ~np.isfinite(log_term), 0.0, log_term)

        atan_term = np.arctan2(t0 * l_plus, R0_sq + d_abs * R_plus) - np.arctan2(t0 * l_minus, R0_sq + d_abs * R_minus)
        S += t0 * log_term - d_abs * atan_term
        edge_terms += t0 * 0.5 * (l_plus * R_plus - l_minus * R_minus + R0_sq * log_term)

    T = (d_sq * S + edge_terms) / 3.0
    return S, T


def tet_face_vertices(vertices: np.ndarray) -> np.ndarray:
    """(..., 4, 3) positively oriented vertices -> (..., 4, 3, 3) outward faces."""
    return vertices[..., LOCAL_FACES, :]


def tet_potentials(r: np.ndarray, faces: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Newton potential Phi (...) and vector companion Psi (..., 3) of a uniform
    unit-density tetrahedron given by its outward faces (..., 4, 3, 3).
    """
    phi = 0.0
    psi = 0.0
    for k in range(4):
        tri = faces[..., k, :, :]
        v0 = tri[..., 0, :]
        cross = np.cross(tri[..., 1, :] - v0, tri[..., 2, :] - v0)
        n = cross / np.linalg.norm(cross, axis=-1, keepdims=True)
        S, T = triangle_potentials(r, tri)
        h = np.sum((v0 - r) * n, axis=-1)
        phi = phi + 0.5 * h * S
        psi = psi + n * T[..., None]
    return np.asarray(phi), np.asarray(psi)


def tet_field_factors(r: np.ndarray, faces: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Outward normals (..., 4, 3) and face potentials S_F (..., 4) so that a
    uniform current density J in the tetrahedron produces
    B(r) = mu0/(4 pi) sum_F (J x n_F) S_F(r).
    """
    normals = []
    potentials = []
    for k in range(4):
        tri = faces[..., k, :, :]
        v0 = tri[..., 0, :]
        cross = np.cross(tri[..., 1, :] - v0, tri[..., 2, :] - v0)
        normals.append(cross / np.linalg.norm(cross, axis=-1, keepdims=True))
        potentials.append(triangle_potentials(r, tri)[0])
    normals_arr = np.stack(normals, axis=-2)
    S = np.stack(potentials, axis=-1)
    return normals_arr, S
