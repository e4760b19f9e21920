import logging

import numpy as np

from concurrency import gather_in_threads
from coupling.base import CouplingMaps
from em_assembly.base import EmFom
from em_assembly.solver import SaddlePointSolver
from errors import ConfigError, RomConvergenceError
from mor.base import DescriptorSystem, EmRom
from mor.config import settings

_logger = logging.getLogger("EmRom")


class EmDescriptor(DescriptorSystem):
    """Matrix-free view of an EmFom; products with L go through the H-matrix."""

    def __init__(self, fom: EmFom):
        self.fom = fom
        self.n_states = fom.n_states
        self.n_inputs = fom.n_coils

    def E_apply(self, X: np.ndarray) -> np.ndarray:
        n_f = self.fom.n_faces
        out = np.zeros_like(X)
        out[:n_f] = self.fom.L.matmat(X[:n_f])
        return out

    def A_apply(self, X: np.ndarray) -> np.ndarray:
        fom = self.fom
        J, Phi = X[: fom.n_faces], X[fom.n_faces :]
        return -np.concatenate([fom.R @ J + fom.D_free.T @ Phi, fom.D_free @ J])

    def input_column(self, i: int) -> np.ndarray:
        return self.fom.B_u[:, i]

    def shifted_solve(self, s: float, rhs: np.ndarray) -> np.ndarray:
        return SaddlePointSolver(self.fom, s).solve(rhs)


def decay_rate_range(horizon: float, tau: float) -> tuple[float, float]:
    """Real Laplace samples [1/(10 T), 100/tau] covering a scenario of length T stepped at tau."""
    if horizon <= 0.0 or tau <= 0.0:
        raise ConfigError(f"horizon and time step must be positive, got T={horizon}, tau={tau}")
    return 1.0 / (10.0 * horizon), 100.0 / tau


def orthonormal_basis(snapshots: np.ndarray, rtol: float = 1.0e-12) -> np.ndarray:
    U, sigma, _ = np.linalg.svd(snapshots, full_matrices=False)
    return U[:, sigma > rtol * sigma[0]]


def residual_errors(
    EV: np.ndarray,
    AV: np.ndarray,
    E_hat: np.ndarray,
    A_hat: np.ndarray,
    B_hat: np.ndarray,
    b: np.ndarray,
    s_grid: np.ndarray,
) -> np.ndarray:
    """eps(s) = ||(sE - A) V x_hat(s) - b|| / ||b|| with full-order products EV, AV."""
    norm_b = np.linalg.norm(b)
    errors = np.empty(len(s_grid))
    for n, s in enumerate(s_grid):
        x_hat = np.linalg.solve(s * E_hat - A_hat, B_hat)
        errors[n] = np.linalg.norm((s * EV - AV) @ x_hat - b) / norm_b
    return errors


def build_em_rom(
    system: DescriptorSystem,
    coil: int,
    name: str | None = None,
    eta: float | None = None,
    s_range: tuple[float, float] = (1.0, 1.0e5),
    basis_cap: int | None = None,
    n_points: int | None = None,
    growth: float | None = None,
) -> EmRom:
    """
    Greedy POD over real Laplace samples.

    Starts at the centre of a log-spaced validation grid, adds the FOM
    response at the worst grid point until the residual drops below eta on
    every grid point. The max residual may rise between iterations by up to
    `growth` times the best value reached; a larger rise raises
    RomConvergenceError.
    """
    eta = settings.eta_rom if eta is None else eta
    basis_cap = settings.basis_cap if basis_cap is None else basis_cap
    n_points = settings.validation_points if n_points is None else n_points
    growth = settings.greedy_growth if growth is None else growth
    name = str(coil) if name is None else name
    s_min, s_max = s_range
    if not 0.0 < eta < 1.0:
        raise ConfigError(f"eta must lie in (0, 1), got {eta}")
    if not 0.0 < s_min < s_max:
        raise ConfigError(f"invalid decay-rate range [{s_min}, {s_max}]")
    b = system.input_column(coil)
    if not np.any(b):
        raise ConfigError(f"coil {name} does not couple to the conductor")

    s_grid = np.geomspace(s_min, s_max, n_points)
    samples: list[float] = []
    snapshots: list[np.ndarray] = []
    history: list[float] = []
    s = float(s_grid[n_points // 2])
    while True:
        x = system.shifted_solve(s, b)
        samples.append(s)
        snapshots.append(x / np.linalg.norm(x))
        V = orthonormal_basis(np.column_stack(snapshots))
        EV = system.E_apply(V)
        AV = system.A_apply(V)
        E_hat, A_hat, B_hat = V.T @ EV, V.T @ AV, V.T @ b
        errors = residual_errors(EV, AV, E_hat, A_hat, B_hat, b, s_grid)
        worst = float(np.max(errors))
        if history and worst > growth * min(history):
            raise RomConvergenceError(
                f"coil {name}: greedy error rose from {min(history):.3e} to {worst:.3e}, more than {growth:g}x", worst
            )
        if history and worst > history[-1]:
            _logger.warning(f"Coil {name}: greedy error rose from {history[-1]:.3e} to {worst:.3e}")
        history.append(worst)
        _logger.info(f"Coil {name}: basis {V.shape[1]}, s={s:.3e}, max eps={worst:.3e}")
        if worst < eta:
            break
        if V.shape[1] >= basis_cap:
            raise RomConvergenceError(
                f"coil {name}: basis cap {basis_cap} reached with max eps {worst:.3e} >= {eta:.1e}", worst
            )
        s = float(s_grid[np.argmax(errors)])
        if s in samples:
            raise RomConvergenceError(f"coil {name}: greedy stagnated at s={s:.3e} with max eps {worst:.3e}", worst)

    _logger.info(f"Coil {name}: EM-ROM of size {V.shape[1]} after {len(samples)} samples")
    return EmRom(
        coil=name,
        V=V,
        E_hat=E_hat,
        A_hat=A_hat,
        B_hat=B_hat,
        s_grid=s_grid,
        errors=errors,
        history=history,
        samples=samples,
    )


def attach_composites(rom: EmRom, maps: CouplingMaps) -> EmRom:
    """Precompute W V and K V restricted to the current rows."""
    n_f = maps.mesh.n_faces
    V_j = rom.V[:n_f]
    rom.WV = np.stack([W @ V_j for W in maps.W])
    rom.KV = np.stack([K.matmat(V_j) for K in maps.K])
    return rom


def build_em_roms(
    fom: EmFom,
    coils: list[str],
    maps: CouplingMaps | None = None,
    eta: float | None = None,
    s_range: tuple[float, float] = (1.0, 1.0e5),
    threads: int | None = None,
) -> list[EmRom]:
    """One EM-ROM per named coil, built concurrently."""
    threads = settings.threads if threads is None else threads
    system = EmDescriptor(fom)

    def build_one(name: str) -> EmRom:
        rom = build_em_rom(system, fom.coil_index(name), name=name, eta=eta, s_range=s_range)
        return attach_composites(rom, maps) if maps is not None else rom

    return gather_in_threads(build_one, coils, threads)
