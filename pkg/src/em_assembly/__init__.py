from em_assembly.base import EmFom
from em_assembly.coils import coil_vector_potential, green, loop_field, neumann_mutual_inductance
from em_assembly.fom import assemble_em_fom, assemble_input_map, assemble_resistance, ground_components
from em_assembly.inductance import InductanceKernel, QuadratureTiers, dense_inductance, inductance_entry, pair_moments
from em_assembly.solver import (
    FomTrajectory,
    RingResponse,
    SaddlePointSolver,
    ring_coupling,
    ring_response,
    simulate_em_fom,
    solve_laplace,
    toroidal_drive,
)

__all__ = [
    "EmFom",
    "coil_vector_potential",
    "green",
    "loop_field",
    "neumann_mutual_inductance",
    "assemble_em_fom",
    "assemble_input_map",
    "assemble_resistance",
    "ground_components",
    "InductanceKernel",
    "QuadratureTiers",
    "dense_inductance",
    "inductance_entry",
    "pair_moments",
    "FomTrajectory",
    "RingResponse",
    "SaddlePointSolver",
    "ring_coupling",
    "ring_response",
    "simulate_em_fom",
    "solve_laplace",
    "toroidal_drive",
]
