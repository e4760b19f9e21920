import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, gmres, splu

from em_assembly.base import EmFom
from em_assembly.config import settings
from em_assembly.quadrature import conical
from errors import ConfigError, NumericalError

_logger = logging.getLogger("SaddlePoint")


class SaddlePointSolver:
    """
    Solves [[alpha L + R, D^T], [D, 0]] [j; phi] = [b; c] with restarted GMRES.

    alpha = s for Laplace-domain snapshots, alpha = 1/(theta tau) for a
    theta-method step. The preconditioner is a sparse LU of the same saddle
    point with L replaced by its dense near-field leaves.
    """

    def __init__(self, fom: EmFom, alpha: float, rtol: float | None = None):
        if not np.isfinite(alpha) or alpha < 0.0:
            raise ConfigError(f"saddle-point shift must be finite and non-negative, got {alpha}")
        self.fom = fom
        self.alpha = alpha
        self.rtol = settings.gmres_rtol if rtol is None else rtol
        n = fom.n_states
        D = fom.D_free
        top = (alpha * fom.L.near_field() + fom.R).tocsr() if alpha > 0.0 else fom.R
        K = sp.bmat([[top, D.T], [D, None]], format="csc")
        try:
            self._lu = splu(K)
        except RuntimeError as e:
            raise NumericalError(f"saddle-point preconditioner factorization failed (alpha={alpha:.3e}): {e}") from e
        self._precond = LinearOperator((n, n), matvec=self._lu.solve, dtype=np.float64)
        self._operator = LinearOperator((n, n), matvec=self.matvec, dtype=np.float64)
        self.iterations: list[int] = []

    def matvec(self, x: np.ndarray) -> np.ndarray:
        fom = self.fom
        j, phi = fom.split(x)
        top = fom.R @ j + fom.D_free.T @ phi
        if self.alpha > 0.0:
            top = top + self.alpha * fom.L.matvec(j)
        return np.concatenate([top, fom.D_free @ j])

    def solve(self, rhs: np.ndarray, x0: np.ndarray | None = None) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=np.float64)
        if not np.any(rhs):
            return np.zeros_like(rhs)
        count = [0]

        def callback(_):
            count[0] += 1

        x, info = gmres(
            self._operator,
            rhs,
            x0=x0,
            rtol=self.rtol,
            atol=0.0,
            restart=settings.gmres_restart,
            maxiter=settings.gmres_maxiter,
            M=self._precond,
            callback=callback,
            callback_type="pr_norm",
        )
        if info != 0:
            residual = np.linalg.norm(self.matvec(x) - rhs) / np.linalg.norm(rhs)
            raise NumericalError(f"GMRES did not converge (info={info}, relative residual {residual:.3e})")
        self.iterations.append(count[0])
        return x


def solve_laplace(fom: EmFom, s: float, coil: int) -> np.ndarray:
    """x(s) = (sE - A)^{-1} B_u[:, coil]."""
    return SaddlePointSolver(fom, s).solve(fom.B_u[:, coil])


@dataclass
class FomTrajectory:
    times: np.ndarray
    currents: np.ndarray  # (n_steps + 1, N_f) face currents
    potentials: np.ndarray


def simulate_em_fom(
    fom: EmFom,
    coil_currents: np.ndarray,
    theta: float,
    tau: float,
    x0: np.ndarray | None = None,
) -> FomTrajectory:
    """
    theta-method on the full descriptor system with dI/dt as input:

        [E/tau - theta A] x_k = [E/tau + (1 - theta) A] x_{k-1} + B_u (I_k - I_{k-1}) / tau

    dI/dt is constant on a step of the piecewise-linear current, so the last
    term is theta B_u dI/dt_k + (1 - theta) B_u dI/dt_{k-1}.

    coil_currents has shape (n_steps + 1, N_coils), row 0 at t = 0.
    """
    if theta <= 0.0 or theta > 1.0:
        raise ConfigError(f"full-order stepping needs theta in (0, 1], got {theta}")
    if tau <= 0.0:
        raise ConfigError(f"time step must be positive, got {tau}")
    coil_currents = np.asarray(coil_currents, dtype=np.float64).reshape(len(coil_currents), -1)
    if coil_currents.shape[1] != fom.n_coils:
        raise ConfigError(f"expected {fom.n_coils} coil columns, got {coil_currents.shape[1]}")
    solver = SaddlePointSolver(fom, 1.0 / (theta * tau))
    x = np.zeros(fom.n_states) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
    states = [x]
    for k in range(1, len(coil_currents)):
        rhs = fom.E_matvec(x) / tau + (1.0 - theta) * fom.A_matvec(x)
        rhs += fom.B_u @ (coil_currents[k] - coil_currents[k - 1]) / tau
        x = solver.solve(rhs / theta, x0=x)
        if not np.all(np.isfinite(x)):
            raise NumericalError(f"non-finite full-order state at step {k}")
        states.append(x)
    X = np.array(states)
    return FomTrajectory(
        times=tau * np.arange(len(coil_currents)),
        currents=X[:, : fom.n_faces],
        potentials=X[:, fom.n_faces :],
    )


@dataclass
class RingResponse:
    resistance: float
    inductance: float
    current_pattern: np.ndarray  # face currents carrying unit ring current
    drive: np.ndarray  # b with ring current = b . j

    @property
    def time_constant(self) -> float:
        return self.inductance / self.resistance


def toroidal_drive(fom: EmFom, axis: np.ndarray | None = None) -> np.ndarray:
    """b_k = int w_k . E for a unit loop voltage E = e_phi / (2 pi rho) about the z axis."""
    mesh = fom.mesh
    rule = conical(settings.near_order)
    points = rule.points(mesh.nodes[mesh.elements])
    weights = rule.weights[None, :] * mesh.volumes[:, None]
    axis = np.array([0.0, 0.0, 1.0]) if axis is None else np.asarray(axis, dtype=np.float64)
    rho_vec = points - np.einsum("eqi,i->eq", points, axis)[..., None] * axis
    rho_sq = np.sum(rho_vec**2, axis=-1)
    E = np.cross(axis, rho_vec) / (2.0 * np.pi * rho_sq[..., None])
    rel = points - mesh.centroids[:, None, :]
    signs = mesh.element_signs.astype(np.float64)
    alpha = signs / (3.0 * mesh.volumes[:, None])
    beta = signs[:, :, None] * (mesh.centroids[:, None, :] - mesh.nodes[mesh.elements]) / (3.0 * mesh.volumes[:, None, None])
    moment_r = np.einsum("eq,eqi,eqi->e", weights, E, rel)
    moment_1 = np.einsum("eq,eqi->ei", weights, E)
    slot = alpha * moment_r[:, None] + np.einsum("eai,ei->ea", beta, moment_1)
    internal = mesh.element_faces >= 0
    b = np.zeros(mesh.n_faces)
    np.add.at(b, mesh.element_faces[internal], slot[internal])
    return b


def _dc_ring_current(fom: EmFom) -> tuple[np.ndarray, np.ndarray, float]:
    b = toroidal_drive(fom)
    D = fom.D_free
    K = sp.bmat([[fom.R, D.T], [D, None]], format="csc")
    rhs = np.concatenate([b, np.zeros(D.shape[0])])
    x = splu(K).solve(rhs)
    j = x[: fom.n_faces]
    current = float(b @ j)
    if current <= 0.0:
        raise NumericalError(f"ring response produced non-positive current {current:.3e}")
    return j / current, b, current


def ring_coupling(fom: EmFom) -> np.ndarray:
    """Mutual inductance of every coil with the conductor lumped into one ring circuit."""
    pattern, _, _ = _dc_ring_current(fom)
    return pattern @ fom.B_i


def ring_response(fom: EmFom) -> RingResponse:
    """Resistive (DC) response to a unit toroidal loop voltage, lumped into a single L/R circuit."""
    pattern, b, current = _dc_ring_current(fom)
    inductance = float(pattern @ fom.L.matvec(pattern))
    response = RingResponse(resistance=1.0 / current, inductance=inductance, current_pattern=pattern, drive=b)
    _logger.info(
        f"Ring: R={response.resistance:.4e} ohm, L={response.inductance:.4e} H, tau={response.time_constant:.4e} s"
    )
    return response
