import logging
import time

import numpy as np
import pandas as pd

from errors import ConfigError, NumericalError
from online.base import OnlineModel, OnlineState, ResultTable, StepOutput, result_columns
from online.config import settings
from online.stepper import em_rom_stepper
from scenario.base import Scenario
from scenario.equivalent import sample_currents

_logger = logging.getLogger("Online")


def resolve_stepper(scenario: Scenario, theta: float | None = None, tau: float | None = None) -> tuple[float, float]:
    """Explicit arguments, then the scenario's stepper section, then VV_THETA / VV_TAU."""
    for value in (theta, scenario.stepper.theta, settings.theta):
        if value is not None:
            theta = value
            break
    for value in (tau, scenario.stepper.tau, settings.tau):
        if value is not None:
            tau = value
            break
    return theta, tau


def init_state(model: OnlineModel, theta: float | None = None, tau: float | None = None) -> OnlineState:
    theta = settings.theta if theta is None else theta
    tau = settings.tau if tau is None else tau
    n_v = model.n_elements
    return OnlineState(
        steppers=[em_rom_stepper(rom, theta, tau) for rom in model.roms],
        x=np.zeros(model.n_reduced),
        slices=model.slices,
        theta=theta,
        tau=tau,
        J=np.zeros((3, n_v)),
        B=np.zeros((3, n_v)),
        B_ext=np.zeros((3, n_v)),
        F=np.zeros((3, n_v)),
        scratch=np.zeros(n_v),
    )


def step_em(state: OnlineState, i: int, u_k: float, u_km1: float) -> np.ndarray:
    """Advance coil i's reduced state by one theta step."""
    x = state.steppers[i].step(state.coil_state(i), u_k, u_km1)
    state.x[state.slices[i]] = x
    return x


def _direct_force(model: OnlineModel, state: OnlineState, currents: np.ndarray) -> np.ndarray:
    """Stacked force density [Fx; Fy; Fz] written into the state's buffers."""
    J, B, F, tmp = state.J, state.B, state.F, state.scratch
    np.matmul(model.WV, state.x, out=J)
    np.matmul(model.KV, state.x, out=B)
    np.matmul(model.fields, currents, out=state.B_ext)
    B += state.B_ext
    for c in range(3):
        a, b = (c + 1) % 3, (c + 2) % 3
        np.multiply(J[a], B[b], out=F[c])
        np.multiply(J[b], B[a], out=tmp)
        F[c] -= tmp
    return F.reshape(-1)


def step_force_and_struct(
    model: OnlineModel, state: OnlineState, currents: np.ndarray, use_deim: bool = False
) -> StepOutput:
    """Force reconstruction from the advanced EM states, reduced structural solve and probe outputs."""
    if use_deim:
        if model.deim is None:
            raise ConfigError("the ROM bundle carries no DEIM operator")
        f_hat, total = model.deim.evaluate(state.x, currents)
    else:
        F = _direct_force(model, state, currents)
        f_hat = model.load_projection @ F
        total = model.force_operator @ F
    u_hat = model.struct.solve(f_hat)
    if not np.all(np.isfinite(u_hat)):
        raise NumericalError(f"non-finite reduced displacement at step {state.k}")
    return StepOutput(
        f_hat=f_hat,
        u_hat=u_hat,
        total_force=total,
        displacement=model.struct.probe_displacement @ u_hat,
        strain=model.struct.probe_strain @ u_hat,
    )


def run_scenario(
    model: OnlineModel,
    scenario: Scenario,
    theta: float | None = None,
    tau: float | None = None,
    use_deim: bool = False,
) -> ResultTable:
    """Step every EM-ROM, the force path and the structural ROM over [0, T]."""
    theta, tau = resolve_stepper(scenario, theta, tau)
    names = [loop.name for loop in scenario.all_coils()]
    if names != model.coil_names:
        raise ConfigError(f"scenario coils {names} do not match the ROM bundle coils {model.coil_names}")
    struct = model.struct
    columns = result_columns(model.coil_names, struct.probe_nodes, struct.probe_elements)
    n_steps = int(round(scenario.horizon / tau))
    if n_steps == 0:
        return ResultTable(frame=pd.DataFrame(columns=columns), horizon=scenario.horizon)

    times = tau * np.arange(n_steps + 1)
    currents = sample_currents(scenario, times)
    dynamic = currents[:, model.dynamic]
    state = init_state(model, theta, tau)
    rows = np.zeros((n_steps, len(columns)))
    n_c = len(model.coil_names)
    n_u = len(struct.probe_displacement)
    step_times = np.zeros(n_steps)

    start = time.perf_counter()
    for k in range(1, n_steps + 1):
        tick = time.perf_counter()
        state.k = k
        try:
            for i in range(len(model.roms)):
                step_em(state, i, dynamic[k, i], dynamic[k - 1, i])
        except NumericalError as e:
            raise NumericalError(f"{e} at step {k}") from e
        out = step_force_and_struct(model, state, currents[k], use_deim)
        row = rows[k - 1]
        row[0] = times[k]
        row[1 : 1 + n_c] = currents[k]
        row[1 + n_c : 4 + n_c] = out.total_force
        row[4 + n_c : 4 + n_c + n_u] = out.displacement
        row[4 + n_c + n_u :] = out.strain
        step_times[k - 1] = time.perf_counter() - tick
    wall_clock = time.perf_counter() - start

    table = ResultTable(
        frame=pd.DataFrame(rows, columns=columns),
        horizon=scenario.horizon,
        wall_clock=wall_clock,
        step_times=step_times,
    )
    _logger.info(
        f"Scenario {scenario.name}: {n_steps} steps in {wall_clock:.3f} s "
        f"(real-time factor {table.real_time_factor:.3f}, {'DEIM' if use_deim else 'direct'} force path)"
    )
    return table
