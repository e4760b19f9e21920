import numpy as np
import scipy.linalg as la

from errors import ConfigError, NumericalError


class ThetaStepper:
    """
    theta-method for E x' = A x + B_p u + B_d u':

        [E/tau - theta A] x_k = [E/tau + (1 - theta) A] x_{k-1}
                                + theta B_p u_k + (1 - theta) B_p u_{k-1}
                                + B_d (u_k - u_{k-1}) / tau

    The B_d term is the same theta-weighted form applied to u': for u linear
    between samples, theta u'_k + (1 - theta) u'_{k-1} = (u_k - u_{k-1}) / tau.
    The step matrix is factored once.
    """

    def __init__(
        self,
        E: np.ndarray,
        A: np.ndarray,
        theta: float,
        tau: float,
        B_p: np.ndarray | None = None,
        B_d: np.ndarray | None = None,
    ):
        if not 0.0 <= theta <= 1.0:
            raise ConfigError(f"theta must lie in [0, 1], got {theta}")
        if tau <= 0.0:
            raise ConfigError(f"time step must be positive, got {tau}")
        E = np.atleast_2d(np.asarray(E, dtype=np.float64))
        A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        n = E.shape[0]
        self.theta = theta
        self.tau = tau
        self.B_p = None if B_p is None else np.asarray(B_p, dtype=np.float64).reshape(n, -1)
        self.B_d = None if B_d is None else np.asarray(B_d, dtype=np.float64).reshape(n, -1)
        step = E / tau - theta * A
        if np.linalg.cond(step) > 1.0 / (1.0e3 * np.finfo(np.float64).eps):
            raise ConfigError(f"singular step matrix for theta={theta}, tau={tau} (singular E needs theta > 0)")
        self._lu = la.lu_factor(step)
        self._explicit = E / tau + (1.0 - theta) * A

    @property
    def n_states(self) -> int:
        return self._explicit.shape[0]

    def step(self, x: np.ndarray, u_k, u_km1) -> np.ndarray:
        u_k = np.atleast_1d(np.asarray(u_k, dtype=np.float64))
        u_km1 = np.atleast_1d(np.asarray(u_km1, dtype=np.float64))
        rhs = self._explicit @ x
        if self.B_p is not None:
            rhs += self.B_p @ (self.theta * u_k + (1.0 - self.theta) * u_km1)
        if self.B_d is not None:
            rhs += self.B_d @ (u_k - u_km1) / self.tau
        x_new = la.lu_solve(self._lu, rhs)
        if not np.all(np.isfinite(x_new)):
            raise NumericalError("non-finite reduced state")
        return x_new

    def run(self, inputs: np.ndarray, x0: np.ndarray | None = None) -> np.ndarray:
        """States (n_steps + 1, n) for inputs sampled at t_k = k tau, row 0 at t = 0."""
        inputs = np.asarray(inputs, dtype=np.float64)
        x = np.zeros(self.n_states) if x0 is None else np.asarray(x0, dtype=np.float64)
        states = np.empty((len(inputs), self.n_states))
        if len(inputs) == 0:
            return states
        states[0] = x
        for k in range(1, len(inputs)):
            try:
                x = self.step(x, inputs[k], inputs[k - 1])
            except NumericalError as e:
                raise NumericalError(f"{e} at step {k}") from e
            states[k] = x
        return states


def em_rom_stepper(rom, theta: float, tau: float) -> ThetaStepper:
    """Stepper of a per-coil EM-ROM driven by its coil current through dI/dt."""
    return ThetaStepper(rom.E_hat, rom.A_hat, theta, tau, B_d=rom.B_hat)


def simulate_em_rom(rom, currents: np.ndarray, theta: float, tau: float) -> np.ndarray:
    """Reduced states (n_steps + 1, N_r) for the coil current samples."""
    return em_rom_stepper(rom, theta, tau).run(np.asarray(currents, dtype=np.float64).reshape(len(currents), -1))
