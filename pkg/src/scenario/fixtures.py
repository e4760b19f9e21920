import numpy as np

from elasticity.supports import clamp_plane, dirichlet_band
from errors import ConfigError
from mesh import Mesh, generate_box, generate_d_shell, generate_torus_shell, load_mesh
from scenario.base import MeshSpec, ProbeSet, SupportSpec


def build_mesh(spec: MeshSpec) -> Mesh:
    match spec.kind:
        case "torus":
            return generate_torus_shell(spec.r_major, spec.r_minor, spec.thickness, spec.n_tor, spec.n_pol, spec.n_rad)
        case "d-shape":
            return generate_d_shell(
                spec.r_major,
                spec.r_minor,
                spec.thickness,
                spec.n_tor,
                spec.n_pol,
                spec.n_rad,
                elongation=spec.elongation,
                triangularity=spec.triangularity,
            )
        case "box":
            return generate_box(spec.lengths, spec.divisions)
        case "file":
            if spec.path is None:
                raise ConfigError("mesh kind 'file' needs a path")
            return load_mesh(spec.path)


def support_dofs(mesh: Mesh, spec: SupportSpec) -> np.ndarray:
    if spec.kind == "plane":
        return clamp_plane(mesh, spec.axis, spec.value)
    return dirichlet_band(mesh, spec.r_center, spec.z_center, spec.theta_min_deg, spec.theta_max_deg)


def resolve_probes(mesh: Mesh, probes: ProbeSet) -> tuple[np.ndarray, np.ndarray]:
    """Probe node and element indices; points snap to the nearest node and element centroid."""
    nodes = list(probes.nodes)
    elements = list(probes.elements)
    for point in probes.points:
        p = np.asarray(point, dtype=np.float64)
        nodes.append(int(np.argmin(np.sum((mesh.nodes - p) ** 2, axis=1))))
        elements.append(int(np.argmin(np.sum((mesh.centroids - p) ** 2, axis=1))))
    nodes = np.asarray(nodes, dtype=np.int64)
    elements = np.asarray(elements, dtype=np.int64)
    if np.any((nodes < 0) | (nodes >= mesh.n_nodes)) or np.any((elements < 0) | (elements >= mesh.n_elements)):
        raise ConfigError("probe index out of range for the mesh")
    return nodes, elements
