import dataclasses
import hashlib
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components as _graph_components

from errors import MeshError

_logger = logging.getLogger("Mesh")

MIN_VOLUME = 1.0e-18

# Face i of a positively oriented tetrahedron is opposite vertex i; listed with outward normal.
LOCAL_FACES = np.array([[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]], dtype=np.int64)


def signed_volumes(nodes: np.ndarray, elements: np.ndarray) -> np.ndarray:
    p = nodes[elements]
    edges = p[:, 1:, :] - p[:, :1, :]
    return np.linalg.det(edges) / 6.0


@dataclass(frozen=True, eq=False)
class Mesh:
    """
    Tetrahedral conductor mesh with oriented internal faces.

    Internal faces are the current degrees of freedom. They are the sorted node
    triples shared by two elements, ordered lexicographically, with the normal
    pointing from face_elements[k, 0] (e+) to face_elements[k, 1] (e-).
    Boundary faces carry no DoF and are kept separately.
    """

    nodes: np.ndarray  # (N_n, 3)
    elements: np.ndarray  # (N_v, 4), positively oriented
    volumes: np.ndarray  # (N_v,)
    faces: np.ndarray  # (N_f, 3)
    face_elements: np.ndarray  # (N_f, 2)
    face_local: np.ndarray  # (N_f, 2) local face slot in e+ and e-
    face_areas: np.ndarray
    face_normals: np.ndarray
    face_centroids: np.ndarray
    boundary_faces: np.ndarray  # (N_b, 3)
    boundary_elements: np.ndarray
    element_faces: np.ndarray  # (N_v, 4) internal face index per slot, -1 on the boundary
    element_signs: np.ndarray  # (N_v, 4) incidence sign per slot, 0 on the boundary
    tags: np.ndarray

    @classmethod
    def from_arrays(cls, nodes, elements, tags=None) -> "Mesh":
        nodes = np.ascontiguousarray(nodes, dtype=np.float64)
        elements = np.array(elements, dtype=np.int64)
        if nodes.ndim != 2 or nodes.shape[1] != 3:
            raise MeshError(f"nodes must have shape (N_n, 3), got {nodes.shape}")
        if elements.ndim != 2 or elements.shape[1] != 4 or len(elements) == 0:
            raise MeshError(f"need at least one 4-node element, got shape {elements.shape}")
        if not np.all(np.isfinite(nodes)):
            raise MeshError("non-finite node coordinates")
        if elements.min() < 0 or elements.max() >= len(nodes):
            raise MeshError(f"element references node outside [0, {len(nodes)})")
        tags = np.zeros(len(elements), dtype=np.int64) if tags is None else np.asarray(tags, dtype=np.int64)
        if tags.shape != (len(elements),):
            raise MeshError(f"tags must have one entry per element, got {tags.shape}")

        volumes = signed_volumes(nodes, elements)
        degenerate = np.abs(volumes) < MIN_VOLUME
        if degenerate.any():
            e = int(np.flatnonzero(degenerate)[0])
            raise MeshError(f"degenerate element {e}: volume {volumes[e]:.3e} m^3")
        negative = volumes < 0.0
        if negative.any():
            _logger.info(f"Reoriented {int(negative.sum())} negatively oriented elements")
            elements[negative] = elements[negative][:, [0, 1, 3, 2]]
        volumes = np.abs(volumes)

        n_elements = len(elements)
        triples = np.sort(elements[:, LOCAL_FACES].reshape(-1, 3), axis=1)
        unique, inverse, counts = np.unique(triples, axis=0, return_inverse=True, return_counts=True)
        inverse = inverse.reshape(-1)
        if (counts > 2).any():
            k = int(np.flatnonzero(counts > 2)[0])
            raise MeshError(f"non-manifold face {unique[k].tolist()} shared by {counts[k]} elements")

        # slots are flat indices into (N_v, 4); a stable sort keeps element order within a face
        order = np.argsort(inverse, kind="stable")
        starts = np.searchsorted(inverse[order], np.arange(len(unique)))
        internal_ids = np.flatnonzero(counts == 2)
        boundary_ids = np.flatnonzero(counts == 1)
        first = order[starts[internal_ids]]
        second = order[starts[internal_ids] + 1]
        boundary_slots = order[starts[boundary_ids]]

        faces = unique[internal_ids]
        face_elements = np.stack([first // 4, second // 4], axis=1)
        face_local = np.stack([first % 4, second % 4], axis=1)

        face_index = np.full(len(unique), -1, dtype=np.int64)
        face_index[internal_ids] = np.arange(len(internal_ids))
        element_faces = face_index[inverse].reshape(n_elements, 4)
        element_signs = np.zeros(n_elements * 4, dtype=np.int64)
        element_signs[first] = 1
        element_signs[second] = -1

        p = nodes[faces]
        cross = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        doubled = np.linalg.norm(cross, axis=1)
        normals = cross / doubled[:, None] if len(faces) else np.zeros((0, 3))
        centroids = p.mean(axis=1) if len(faces) else np.zeros((0, 3))
        element_centroids = nodes[elements].mean(axis=1)
        inward = np.einsum("ij,ij->i", normals, centroids - element_centroids[face_elements[:, 0]]) < 0.0
        normals[inward] *= -1.0

        mesh = cls(
            nodes=nodes,
            elements=elements,
            volumes=volumes,
            faces=faces,
            face_elements=face_elements,
            face_local=face_local,
            face_areas=0.5 * doubled,
            face_normals=normals,
            face_centroids=centroids,
            boundary_faces=unique[boundary_ids],
            boundary_elements=boundary_slots // 4,
            element_faces=element_faces,
            element_signs=element_signs.reshape(n_elements, 4),
            tags=tags,
        )
        _logger.debug(f"Mesh N_n={mesh.n_nodes} N_v={mesh.n_elements} N_f={mesh.n_faces} N_b={len(boundary_ids)}")
        return mesh

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.nodes[self.elements].mean(axis=1)

    @cached_property
    def diameters(self) -> np.ndarray:
        """Longest edge of every element."""
        p = self.nodes[self.elements]
        pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
        lengths = np.stack([np.linalg.norm(p[:, a] - p[:, b], axis=1) for a, b in pairs], axis=1)
        return lengths.max(axis=1)

    @cached_property
    def shape_gradients(self) -> np.ndarray:
        """(N_v, 4, 3) gradients of the linear shape functions."""
        m = np.ones((self.n_elements, 4, 4))
        m[:, :, 1:] = self.nodes[self.elements]
        return np.transpose(np.linalg.inv(m)[:, 1:, :], (0, 2, 1))

    @property
    def total_volume(self) -> float:
        return float(self.volumes.sum())


def build_incidence(mesh: Mesh) -> sp.csr_matrix:
    """Discrete divergence D (N_v x N_f): +1 at e+, -1 at e-."""
    n_f = mesh.n_faces
    rows = np.concatenate([mesh.face_elements[:, 0], mesh.face_elements[:, 1]])
    cols = np.concatenate([np.arange(n_f), np.arange(n_f)])
    data = np.concatenate([np.ones(n_f), -np.ones(n_f)])
    return sp.csr_matrix((data, (rows, cols)), shape=(mesh.n_elements, n_f))


def face_basis_moment(mesh: Mesh, k: int, e: int) -> np.ndarray:
    """Integral over element e of the unit-flux face function of face k."""
    if not 0 <= k < mesh.n_faces:
        raise MeshError(f"face {k} out of range [0, {mesh.n_faces})")
    adjacent = mesh.face_elements[k]
    if e == adjacent[0]:
        side, sign = 0, 1.0
    elif e == adjacent[1]:
        side, sign = 1, -1.0
    else:
        raise MeshError(f"face {k} is not adjacent to element {e} (adjacent: {adjacent.tolist()})")
    opposite = mesh.nodes[mesh.elements[e, mesh.face_local[k, side]]]
    return sign * (mesh.centroids[e] - opposite) / 3.0


def face_moments(mesh: Mesh) -> np.ndarray:
    """(N_v, 4, 3) moments of every element slot; zero on boundary slots."""
    opposite = mesh.nodes[mesh.elements]
    return mesh.element_signs[:, :, None] * (mesh.centroids[:, None, :] - opposite) / 3.0


def flip_faces(mesh: Mesh, indices: Iterable[int]) -> Mesh:
    """Same mesh with the orientation of the given internal faces reversed."""
    idx = np.unique(np.asarray(list(indices), dtype=np.int64))
    face_elements = mesh.face_elements.copy()
    face_local = mesh.face_local.copy()
    normals = mesh.face_normals.copy()
    signs = mesh.element_signs.copy()
    face_elements[idx] = face_elements[idx][:, ::-1]
    face_local[idx] = face_local[idx][:, ::-1]
    normals[idx] *= -1.0
    flipped = np.isin(mesh.element_faces, idx)
    signs[flipped] *= -1
    return dataclasses.replace(
        mesh, face_elements=face_elements, face_local=face_local, face_normals=normals, element_signs=signs
    )


def connected_components(mesh: Mesh) -> tuple[int, np.ndarray]:
    """Number of face-connected conductor components and the element labels."""
    n_v = mesh.n_elements
    a, b = mesh.face_elements[:, 0], mesh.face_elements[:, 1]
    adjacency = sp.csr_matrix((np.ones(len(a)), (a, b)), shape=(n_v, n_v))
    count, labels = _graph_components(adjacency, directed=False)
    return int(count), labels


def mesh_hash(mesh: Mesh) -> str:
    digest = hashlib.sha256()
    digest.update(np.ascontiguousarray(mesh.nodes, dtype=np.float64).tobytes())
    digest.update(np.ascontiguousarray(mesh.elements, dtype=np.int64).tobytes())
    return digest.hexdigest()
