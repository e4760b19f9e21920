import numpy as np

from errors import ConfigError
from mesh import Mesh


def node_dofs(nodes: np.ndarray) -> np.ndarray:
    nodes = np.asarray(nodes, dtype=np.int64)
    return (3 * nodes[:, None] + np.arange(3)).ravel()


def clamp_plane(mesh: Mesh, axis: int, value: float, tol: float = 1.0e-9) -> np.ndarray:
    """All DOFs of nodes with coordinate[axis] == value."""
    nodes = np.flatnonzero(np.abs(mesh.nodes[:, axis] - value) <= tol)
    if len(nodes) == 0:
        raise ConfigError(f"no nodes on plane x[{axis}] = {value}")
    return node_dofs(nodes)


def dirichlet_band(
    mesh: Mesh,
    r_center: float,
    z_center: float,
    theta_min_deg: float,
    theta_max_deg: float,
) -> np.ndarray:
    """
    Axisymmetric support band: all DOFs of nodes whose poloidal angle about
    (r_center, z_center) lies in [theta_min, theta_max] (degrees, 0 = outboard
    midplane, negative below).
    """
    radius = np.hypot(mesh.nodes[:, 0], mesh.nodes[:, 1])
    theta = np.degrees(np.arctan2(mesh.nodes[:, 2] - z_center, radius - r_center))
    nodes = np.flatnonzero((theta >= theta_min_deg) & (theta <= theta_max_deg))
    if len(nodes) == 0:
        raise ConfigError(f"support band [{theta_min_deg}, {theta_max_deg}] deg selects no nodes")
    return node_dofs(nodes)
