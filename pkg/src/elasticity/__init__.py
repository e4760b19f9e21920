from elasticity.base import StructFom, solve_struct
from elasticity.stiffness import assemble_stiffness, elasticity_matrix, strain_displacement
from elasticity.strain import STRAIN_COMPONENTS, recover_strain, strain_operator, von_mises
from elasticity.supports import clamp_plane, dirichlet_band, node_dofs

__all__ = [
    "StructFom",
    "solve_struct",
    "assemble_stiffness",
    "elasticity_matrix",
    "strain_displacement",
    "STRAIN_COMPONENTS",
    "recover_strain",
    "strain_operator",
    "von_mises",
    "clamp_plane",
    "dirichlet_band",
    "node_dofs",
]
