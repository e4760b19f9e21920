import logging
import time
from dataclasses import asdict, dataclass

import numpy as np
import pandas as pd

from coupling.base import CouplingMaps
from coupling.maps import total_force_operator
from elasticity.base import StructFom
from elasticity.strain import strain_operator
from elasticity.supports import node_dofs
from em_assembly.base import EmFom
from em_assembly.solver import simulate_em_fom
from errors import ConfigError
from online.base import ResultTable, result_columns
from online.runner import resolve_stepper
from scenario.base import Scenario
from scenario.equivalent import sample_currents

_logger = logging.getLogger("Validation")


def run_fom_chain(
    em_fom: EmFom,
    maps: CouplingMaps,
    struct_fom: StructFom,
    scenario: Scenario,
    probe_nodes: np.ndarray,
    probe_elements: np.ndarray,
    theta: float | None = None,
    tau: float | None = None,
) -> ResultTable:
    """Full-order reference: FOM eddy currents, J x B on every element, stiffness solves for all steps."""
    theta, tau = resolve_stepper(scenario, theta, tau)
    names = [loop.name for loop in scenario.all_coils()]
    if names != maps.coil_names:
        raise ConfigError(f"scenario coils {names} do not match the coupling maps {maps.coil_names}")
    columns = result_columns(maps.coil_names, probe_nodes, probe_elements)
    n_steps = int(round(scenario.horizon / tau))
    if n_steps == 0:
        return ResultTable(frame=pd.DataFrame(columns=columns), horizon=scenario.horizon)

    start = time.perf_counter()
    times = tau * np.arange(n_steps + 1)
    currents = sample_currents(scenario, times)
    driven = [maps.coil_index(name) for name in em_fom.coil_names]
    trajectory = simulate_em_fom(em_fom, currents[:, driven], theta, tau)
    j = trajectory.currents[1:].T
    J = np.stack([W @ j for W in maps.W])  # (3, N_v, n_steps)
    B = np.stack([K.matmat(j) for K in maps.K])
    B += np.einsum("dec,kd->cek", maps.coil_fields, currents[1:])
    F = np.cross(J, B, axis=0).reshape(-1, n_steps)
    u = struct_fom.solve(maps.P @ F)
    mesh = maps.mesh
    rows = np.hstack(
        [
            times[1:, None],
            currents[1:],
            (total_force_operator(mesh) @ F).T,
            u[node_dofs(probe_nodes)].T,
            (strain_operator(mesh, probe_elements) @ u).T,
        ]
    )
    wall_clock = time.perf_counter() - start
    _logger.info(f"FOM chain: {n_steps} steps in {wall_clock:.1f} s")
    return ResultTable(frame=pd.DataFrame(rows, columns=columns), horizon=scenario.horizon, wall_clock=wall_clock)


@dataclass
class ValidationReport:
    """
    Force deviations are relative to the FOM peak |F|. peak_force_deviation is
    |F_rom(t*) - F_fom(t*)| at the FOM peak time t*, so a delayed trace fails.
    """

    peak_force_deviation: float
    time_of_peak_force: float | None
    max_force_deviation: float
    rms_force_deviation: float
    time_of_max_force_deviation: float | None
    final_displacement_deviation: float
    max_displacement_deviation: float
    threshold: float

    @property
    def passed(self) -> bool:
        return (
            self.peak_force_deviation <= self.threshold
            and self.max_force_deviation <= self.threshold
            and self.final_displacement_deviation <= self.threshold
        )

    def to_dict(self) -> dict:
        return asdict(self) | {"passed": self.passed}


def _relative(deviation: float, reference: float) -> float:
    return deviation / reference if reference > 0.0 else deviation


def compare_results(rom: ResultTable, fom: ResultTable, threshold: float = 1.0e-2) -> ValidationReport:
    """Force-trace and probe-displacement deviations of a ROM run against the FOM chain."""
    if rom.n_steps != fom.n_steps:
        raise ConfigError(f"ROM run has {rom.n_steps} steps, FOM run {fom.n_steps}")
    if rom.n_steps == 0:
        return ValidationReport(0.0, None, 0.0, 0.0, None, 0.0, 0.0, threshold)
    force_rom = rom.frame[["Fx", "Fy", "Fz"]].to_numpy()
    force_fom = fom.frame[["Fx", "Fy", "Fz"]].to_numpy()
    magnitude = np.linalg.norm(force_fom, axis=1)
    t_star = int(np.argmax(magnitude))
    peak = float(magnitude[t_star])
    difference = np.linalg.norm(force_rom - force_fom, axis=1)
    worst = int(np.argmax(difference))

    columns = fom.displacement_columns()
    u_rom = rom.frame[columns].to_numpy()
    u_fom = fom.frame[columns].to_numpy()
    u_scale = float(np.max(np.abs(u_fom))) if u_fom.size else 0.0
    final = float(np.linalg.norm(u_rom[-1] - u_fom[-1])) if u_fom.size else 0.0

    return ValidationReport(
        peak_force_deviation=_relative(float(difference[t_star]), peak),
        time_of_peak_force=float(fom.frame["t"].iloc[t_star]),
        max_force_deviation=_relative(float(difference[worst]), peak),
        rms_force_deviation=_relative(float(np.sqrt(np.mean(difference**2))), peak),
        time_of_max_force_deviation=float(fom.frame["t"].iloc[worst]),
        final_displacement_deviation=_relative(final, float(np.linalg.norm(u_fom[-1])) if u_fom.size else 0.0),
        max_displacement_deviation=_relative(float(np.max(np.abs(u_rom - u_fom))) if u_fom.size else 0.0, u_scale),
        threshold=threshold,
    )
