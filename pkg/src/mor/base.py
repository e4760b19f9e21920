from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la


class DescriptorSystem:
    """
    Interface - a linear descriptor system E x' = A x + B_u u seen by the greedy POD.

    Only products with E and A and shifted solves (sE - A) x = b are needed,
    so full-order systems stay matrix-free.
    """

    n_states: int
    n_inputs: int

    def E_apply(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def A_apply(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def input_column(self, i: int) -> np.ndarray:
        raise NotImplementedError

    def shifted_solve(self, s: float, rhs: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class DenseDescriptor(DescriptorSystem):
    """Small dense descriptor system, e.g. a lumped L-R circuit."""

    def __init__(self, E, A, B_u):
        self.E = np.atleast_2d(np.asarray(E, dtype=np.float64))
        self.A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        self.B_u = np.asarray(B_u, dtype=np.float64).reshape(self.E.shape[0], -1)
        self.n_states = self.E.shape[0]
        self.n_inputs = self.B_u.shape[1]

    def E_apply(self, X: np.ndarray) -> np.ndarray:
        return self.E @ X

    def A_apply(self, X: np.ndarray) -> np.ndarray:
        return self.A @ X

    def input_column(self, i: int) -> np.ndarray:
        return self.B_u[:, i]

    def shifted_solve(self, s: float, rhs: np.ndarray) -> np.ndarray:
        return np.linalg.solve(s * self.E - self.A, rhs)


@dataclass
class EmRom:
    """
    Galerkin reduction of one coil's column of the eddy-current descriptor system.

    V (N x N_r) is orthonormal; WV and KV are (3, N_v, N_r) composites of the
    current-density and eddy-field maps with the current rows of V, empty
    when the ROM was built without coupling maps.
    """

    coil: str
    V: np.ndarray
    E_hat: np.ndarray
    A_hat: np.ndarray
    B_hat: np.ndarray
    s_grid: np.ndarray
    errors: np.ndarray  # final residual on s_grid
    history: list[float] = field(default_factory=list)
    samples: list[float] = field(default_factory=list)
    WV: np.ndarray | None = None
    KV: np.ndarray | None = None

    @property
    def size(self) -> int:
        return self.V.shape[1]

    @property
    def max_error(self) -> float:
        return float(np.max(self.errors)) if len(self.errors) else 0.0

    def reconstruct(self, x_hat: np.ndarray) -> np.ndarray:
        return self.V @ x_hat

    def transfer(self, s: float) -> np.ndarray:
        """Reduced state response x_hat(s) = (s E_hat - A_hat)^{-1} B_hat."""
        return np.linalg.solve(s * self.E_hat - self.A_hat, self.B_hat)


@dataclass
class ForceSnapshots:
    """Stacked force densities F (3N_v x n) and nodal loads f = P F (3N_n x n), one column per step."""

    F: np.ndarray
    f: np.ndarray
    trace: np.ndarray  # training trace index per column
    step: np.ndarray  # time step per column

    @property
    def count(self) -> int:
        return self.F.shape[1]


@dataclass
class StructRom:
    V: np.ndarray  # (3N_n, N_m)
    S_hat: np.ndarray
    singular_values: np.ndarray
    holdout_error: float
    probe_nodes: np.ndarray
    probe_elements: np.ndarray
    probe_displacement: np.ndarray  # (3 n_nodes, N_m)
    probe_strain: np.ndarray  # (6 n_elements, N_m)
    _cho: tuple | None = field(default=None, init=False, repr=False)

    @property
    def size(self) -> int:
        return self.V.shape[1]

    def factor(self):
        if self._cho is None:
            self._cho = la.cho_factor(self.S_hat)
        return self._cho

    def solve(self, f_hat: np.ndarray) -> np.ndarray:
        return la.cho_solve(self.factor(), f_hat)

    def project(self, f: np.ndarray) -> np.ndarray:
        return self.V.T @ f

    def reconstruct(self, u_hat: np.ndarray) -> np.ndarray:
        return self.V @ u_hat


@dataclass
class DeimOperator:
    """
    Interpolated force path on k selected rows of the stacked force density.

    Row p of [Fx; Fy; Fz] is component c = p // N_v of element e = p % N_v,
    F_c = J_a B_b - J_b B_a with (a, b) the cyclic successors of c. The
    J_a, J_b, B_a, B_b rows of every selected point are kept as k x N_r
    (reduced states) and k x N_coils (coil unit fields) slices.
    """

    Z: np.ndarray  # (3N_v, k)
    points: np.ndarray  # (k,)
    singular_values: np.ndarray
    SZ: np.ndarray  # (k, k)
    load_lift: np.ndarray  # V_m^T P Z (SZ)^{-1}, (N_m, k)
    force_lift: np.ndarray  # T Z (SZ)^{-1}, (3, k)
    J_a: np.ndarray
    J_b: np.ndarray
    K_a: np.ndarray
    K_b: np.ndarray
    B_a: np.ndarray
    B_b: np.ndarray

    @property
    def rank(self) -> int:
        return len(self.points)

    def sampled_force(self, x: np.ndarray, currents: np.ndarray) -> np.ndarray:
        """Force density at the interpolation points for concatenated reduced state x."""
        b_a = self.K_a @ x + self.B_a @ currents
        b_b = self.K_b @ x + self.B_b @ currents
        return (self.J_a @ x) * b_b - (self.J_b @ x) * b_a

    def evaluate(self, x: np.ndarray, currents: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Projected structural load f_hat and total force."""
        sampled = self.sampled_force(x, currents)
        return self.load_lift @ sampled, self.force_lift @ sampled


def stack_composites(roms: list[EmRom]) -> tuple[np.ndarray, np.ndarray]:
    """Concatenate per-coil WV and KV along the reduced axis: (3, N_v, sum N_r) each."""
    missing = [rom.coil for rom in roms if rom.WV is None or rom.KV is None]
    if missing:
        raise ValueError(f"EM-ROMs without coupling composites: {missing}")
    return np.concatenate([rom.WV for rom in roms], axis=2), np.concatenate([rom.KV for rom in roms], axis=2)
