from mesh.base import (
    LOCAL_FACES,
    Mesh,
    build_incidence,
    connected_components,
    face_basis_moment,
    face_moments,
    flip_faces,
    mesh_hash,
)
from mesh.generator import generate_box, generate_d_shell, generate_torus_shell, torus_counts
from mesh.reader import load_mesh, save_mesh

__all__ = [
    "LOCAL_FACES",
    "Mesh",
    "build_incidence",
    "connected_components",
    "face_basis_moment",
    "face_moments",
    "flip_faces",
    "mesh_hash",
    "generate_box",
    "generate_d_shell",
    "generate_torus_shell",
    "torus_counts",
    "load_mesh",
    "save_mesh",
]
