from coupling.base import CouplingMaps
from coupling.facet import biot_savart_matrix, facet_field_entry, uniform_tet_field
from coupling.maps import (
    FieldKernel,
    assemble_load,
    build_coupling_maps,
    build_K,
    build_P,
    build_W,
    coil_unit_fields,
    current_density,
    dense_K,
    eddy_field,
    eval_Bext,
    force_density,
    stack_components,
    total_force,
    total_force_operator,
)

__all__ = [
    "CouplingMaps",
    "biot_savart_matrix",
    "facet_field_entry",
    "uniform_tet_field",
    "FieldKernel",
    "assemble_load",
    "build_coupling_maps",
    "build_K",
    "build_P",
    "build_W",
    "coil_unit_fields",
    "current_density",
    "dense_K",
    "eddy_field",
    "eval_Bext",
    "force_density",
    "stack_components",
    "total_force",
    "total_force_operator",
]
