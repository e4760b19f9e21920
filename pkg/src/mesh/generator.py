import itertools
import logging

import numpy as np

from errors import MeshError
from mesh.base import Mesh

_logger = logging.getLogger("MeshGenerator")


def _kuhn_connectivity(
    n_cells: tuple[int, int, int], n_nodes: tuple[int, int, int], periodic: tuple[bool, bool, bool]
) -> np.ndarray:
    """Six-tetrahedron split of every hexahedral cell along the main diagonal."""
    grids = np.meshgrid(*(np.arange(n) for n in n_cells), indexing="ij")
    ci, cj, ck = (g.ravel() for g in grids)

    def node(di: int, dj: int, dk: int) -> np.ndarray:
        i, j, k = ci + di, cj + dj, ck + dk
        if periodic[0]:
            i = i % n_nodes[0]
        if periodic[1]:
            j = j % n_nodes[1]
        if periodic[2]:
            k = k % n_nodes[2]
        return (i * n_nodes[1] + j) * n_nodes[2] + k

    corners = [node(c & 1, (c >> 1) & 1, (c >> 2) & 1) for c in range(8)]
    tets = []
    for perm in itertools.permutations(range(3)):
        a = 1 << perm[0]
        b = a | (1 << perm[1])
        tets.append(np.stack([corners[0], corners[a], corners[b], corners[7]], axis=1))
    return np.stack(tets, axis=1).reshape(-1, 4)


def torus_counts(n_tor: int, n_pol: int, n_rad: int) -> dict[str, int]:
    cells = n_tor * n_pol * n_rad
    return {
        "nodes": n_tor * n_pol * (n_rad + 1),
        "elements": 6 * cells,
        "faces": 10 * cells + 2 * n_tor * n_pol * (n_rad - 1),
        "boundary_faces": 4 * n_tor * n_pol,
    }


def _revolved_shell(
    section, n_tor: int, n_pol: int, n_rad: int, thickness: float, r_minor: float
) -> Mesh:
    if n_tor < 3 or n_pol < 3 or n_rad < 1:
        raise MeshError(f"shell resolution needs n_tor>=3, n_pol>=3, n_rad>=1, got ({n_tor}, {n_pol}, {n_rad})")
    if not 0.0 < thickness < 2.0 * r_minor:
        raise MeshError(f"thickness {thickness} must lie in (0, 2*r_minor)")
    phi = 2.0 * np.pi * np.arange(n_tor) / n_tor
    theta = 2.0 * np.pi * np.arange(n_pol) / n_pol
    radii = r_minor - 0.5 * thickness + thickness * np.arange(n_rad + 1) / n_rad
    P, T, Rr = np.meshgrid(phi, theta, radii, indexing="ij")
    big_r, z = section(T, Rr)
    nodes = np.stack([big_r * np.cos(P), big_r * np.sin(P), z], axis=-1).reshape(-1, 3)
    elements = _kuhn_connectivity((n_tor, n_pol, n_rad), (n_tor, n_pol, n_rad + 1), (True, True, False))
    return Mesh.from_arrays(nodes, elements, np.ones(len(elements), dtype=np.int64))


def generate_torus_shell(
    r_major: float, r_minor: float, thickness: float, n_tor: int, n_pol: int, n_rad: int = 1
) -> Mesh:
    """Structured circular-section torus shell, periodic in both angles."""
    if r_minor + 0.5 * thickness >= r_major:
        raise MeshError(f"shell crosses the axis: r_minor={r_minor}, thickness={thickness}, r_major={r_major}")
    mesh = _revolved_shell(
        lambda t, r: (r_major + r * np.cos(t), r * np.sin(t)), n_tor, n_pol, n_rad, thickness, r_minor
    )
    _logger.info(
        f"Torus shell R={r_major} a={r_minor} t={thickness} ({n_tor}x{n_pol}x{n_rad}): "
        f"N_v={mesh.n_elements} N_f={mesh.n_faces}"
    )
    return mesh


def generate_d_shell(
    r_major: float,
    r_minor: float,
    thickness: float,
    n_tor: int,
    n_pol: int,
    n_rad: int = 1,
    elongation: float = 1.7,
    triangularity: float = 0.33,
) -> Mesh:
    """Revolved D-shaped shell: R = R0 + r cos(t + d sin t), Z = k r sin t."""
    if r_minor + 0.5 * thickness >= r_major:
        raise MeshError(f"shell crosses the axis: r_minor={r_minor}, thickness={thickness}, r_major={r_major}")
    if elongation <= 0.0 or not -1.0 < triangularity < 1.0:
        raise MeshError(f"invalid D shape: elongation={elongation}, triangularity={triangularity}")
    return _revolved_shell(
        lambda t, r: (r_major + r * np.cos(t + triangularity * np.sin(t)), elongation * r * np.sin(t)),
        n_tor,
        n_pol,
        n_rad,
        thickness,
        r_minor,
    )


def generate_box(
    lengths: tuple[float, float, float],
    divisions: tuple[int, int, int],
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0),
) -> Mesh:
    if min(divisions) < 1 or min(lengths) <= 0.0:
        raise MeshError(f"invalid box lengths={lengths} divisions={divisions}")
    axes = [o + l * np.arange(n + 1) / n for o, l, n in zip(origin, lengths, divisions)]
    X, Y, Z = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([X, Y, Z], axis=-1).reshape(-1, 3)
    n_nodes = tuple(n + 1 for n in divisions)
    elements = _kuhn_connectivity(tuple(divisions), n_nodes, (False, False, False))
    return Mesh.from_arrays(nodes, elements, np.ones(len(elements), dtype=np.int64))
