from mor.base import (
    DeimOperator,
    DenseDescriptor,
    DescriptorSystem,
    EmRom,
    ForceSnapshots,
    StructRom,
    stack_composites,
)
from mor.deim import build_deim, deim_points
from mor.em_rom import (
    EmDescriptor,
    attach_composites,
    build_em_rom,
    build_em_roms,
    decay_rate_range,
    orthonormal_basis,
    residual_errors,
)
from mor.snapshots import generate_force_snapshots, random_traces, trace_forces
from mor.struct_rom import build_struct_rom, holdout_split, truncation_errors

__all__ = [
    "DeimOperator",
    "DenseDescriptor",
    "DescriptorSystem",
    "EmRom",
    "ForceSnapshots",
    "StructRom",
    "stack_composites",
    "build_deim",
    "deim_points",
    "EmDescriptor",
    "attach_composites",
    "build_em_rom",
    "build_em_roms",
    "decay_rate_range",
    "orthonormal_basis",
    "residual_errors",
    "generate_force_snapshots",
    "random_traces",
    "trace_forces",
    "build_struct_rom",
    "holdout_split",
    "truncation_errors",
]
