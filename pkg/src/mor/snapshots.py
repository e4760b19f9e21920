import logging

import numpy as np

from concurrency import gather_in_threads
from coupling.base import CouplingMaps
from errors import ConfigError
from mor.base import EmRom, ForceSnapshots, stack_composites
from mor.config import settings
from online.stepper import simulate_em_rom

_logger = logging.getLogger("Snapshots")


def random_traces(
    bounds: np.ndarray,
    times: np.ndarray,
    n_traces: int,
    n_knots: int | None = None,
    seed: int | None = None,
) -> list[np.ndarray]:
    """Seeded piecewise-linear currents (n_times, n_coils) with knot values uniform in [-bound, bound]."""
    n_knots = settings.training_knots if n_knots is None else n_knots
    seed = settings.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    bounds = np.asarray(bounds, dtype=np.float64)
    knots = np.linspace(times[0], times[-1], n_knots) if len(times) else np.zeros(0)
    traces = []
    for _ in range(n_traces):
        values = rng.uniform(-1.0, 1.0, size=(n_knots, len(bounds))) * bounds
        traces.append(np.column_stack([np.interp(times, knots, values[:, c]) for c in range(len(bounds))]))
    return traces


def trace_forces(
    roms: list[EmRom],
    maps: CouplingMaps,
    trace: np.ndarray,
    static_field: np.ndarray,
    theta: float,
    tau: float,
) -> np.ndarray:
    """Force densities (n_steps, N_v, 3) along one dynamic-current trace, steps 1..n."""
    if trace.shape[1] != len(roms):
        raise ConfigError(f"trace has {trace.shape[1]} coil columns for {len(roms)} EM-ROMs")
    WV, KV = stack_composites(roms)
    states = np.hstack([simulate_em_rom(rom, trace[:, d], theta, tau) for d, rom in enumerate(roms)])[1:]
    dynamic_fields = maps.coil_fields[[maps.coil_index(rom.coil) for rom in roms]]
    J = np.einsum("cer,kr->kec", WV, states)
    B = np.einsum("cer,kr->kec", KV, states) + static_field + np.einsum("kd,dec->kec", trace[1:], dynamic_fields)
    return np.cross(J, B)


def generate_force_snapshots(
    roms: list[EmRom],
    maps: CouplingMaps,
    traces: list[np.ndarray],
    static_currents: dict[str, float],
    theta: float,
    tau: float,
    threads: int | None = None,
) -> ForceSnapshots:
    """
    Column-wise force snapshots from reduced simulations of every training
    trace. Each trace holds the dynamic coil currents (n_steps + 1, n_roms)
    sampled from t = 0; static coils keep their currents.
    """
    if not traces:
        raise ConfigError("at least one training trace is needed")
    threads = settings.threads if threads is None else threads
    static_field = maps.external_field(static_currents)
    blocks = gather_in_threads(
        lambda trace: trace_forces(roms, maps, np.asarray(trace, dtype=np.float64), static_field, theta, tau),
        traces,
        threads,
    )
    F = np.hstack([block.transpose(2, 1, 0).reshape(-1, len(block)) for block in blocks])
    trace_index = np.concatenate([np.full(len(block), i) for i, block in enumerate(blocks)])
    steps = np.concatenate([np.arange(1, len(block) + 1) for block in blocks])
    _logger.info(f"Collected {F.shape[1]} force snapshots from {len(traces)} traces")
    return ForceSnapshots(F=F, f=maps.P @ F, trace=trace_index, step=steps)
