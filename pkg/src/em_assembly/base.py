from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from hmatrix import HMatrix
from mesh import Mesh


@dataclass
class EmFom:
    """
    Descriptor pair of the eddy-current problem on states x = [j; phi]:

        E x' = A x + B_u dI/dt,   E = blkdiag(L, 0),
        A = -[[R, D^T], [D, 0]],  B_u = -[B_i; 0]

    with one element potential per connected component grounded (removed).
    """

    mesh: Mesh
    L: HMatrix
    R: sp.csr_matrix
    D: sp.csr_matrix
    B_i: np.ndarray  # (N_f, N_coils)
    coil_names: list[str]
    grounded: np.ndarray
    resistivity: float

    @cached_property
    def free_potentials(self) -> np.ndarray:
        return np.setdiff1d(np.arange(self.mesh.n_elements), self.grounded)

    @cached_property
    def D_free(self) -> sp.csr_matrix:
        return sp.csr_matrix(self.D[self.free_potentials])

    @property
    def n_faces(self) -> int:
        return self.mesh.n_faces

    @property
    def n_states(self) -> int:
        return self.n_faces + len(self.free_potentials)

    @property
    def n_coils(self) -> int:
        return self.B_i.shape[1]

    def coil_index(self, name: str) -> int:
        return self.coil_names.index(name)

    def split(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return x[: self.n_faces], x[self.n_faces :]

    def E_matvec(self, x: np.ndarray) -> np.ndarray:
        j, phi = self.split(x)
        return np.concatenate([self.L.matvec(j), np.zeros_like(phi)])

    def A_matvec(self, x: np.ndarray) -> np.ndarray:
        j, phi = self.split(x)
        return -np.concatenate([self.R @ j + self.D_free.T @ phi, self.D_free @ j])

    @cached_property
    def B_u(self) -> np.ndarray:
        out = np.zeros((self.n_states, self.n_coils))
        out[: self.n_faces] = -self.B_i
        return out

    def probe_definiteness(self, n_probes: int = 8, seed: int = 0) -> float:
        """Smallest Rayleigh quotient x^T L x / x^T x over random probes."""
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((self.n_faces, n_probes))
        LX = self.L.matmat(X)
        return float(np.min(np.einsum("ij,ij->j", X, LX) / np.einsum("ij,ij->j", X, X)))
