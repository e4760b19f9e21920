import logging
import threading
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from errors import NumericalError
from mesh import Mesh
from models import Material

_logger = logging.getLogger("Elasticity")


@dataclass
class StructFom:
    """Stiffness S (3N_n x 3N_n, DOF 3*node + component) with zero-displacement Dirichlet DOFs."""

    mesh: Mesh
    S: sp.csr_matrix
    material: Material
    dirichlet_dofs: np.ndarray
    _lu: object = field(default=None, init=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False)

    @property
    def n_dofs(self) -> int:
        return self.S.shape[0]

    @cached_property
    def free_dofs(self) -> np.ndarray:
        return np.setdiff1d(np.arange(self.n_dofs), self.dirichlet_dofs)

    @cached_property
    def S_free(self) -> sp.csc_matrix:
        free = self.free_dofs
        return sp.csc_matrix(self.S[free][:, free])

    def factorization(self):
        if self._lu is None:
            with self._lock:
                if self._lu is None:
                    if len(self.dirichlet_dofs) == 0:
                        raise NumericalError("stiffness is singular: the Dirichlet set is empty")
                    try:
                        self._lu = splu(self.S_free)
                    except RuntimeError as e:
                        raise NumericalError(f"stiffness factorization failed: {e}") from e
                    _logger.info(f"Factorized constrained stiffness with {len(self.free_dofs)} free DOFs")
        return self._lu

    def solve(self, f: np.ndarray) -> np.ndarray:
        """Displacements for nodal loads f (3N_n,) or (3N_n, k); constrained entries exactly zero."""
        f = np.asarray(f, dtype=np.float64)
        if f.shape[0] != self.n_dofs:
            raise ValueError(f"load has {f.shape[0]} rows, stiffness has {self.n_dofs} DOFs")
        if not np.all(np.isfinite(f)):
            raise NumericalError("non-finite nodal load")
        lu = self.factorization()
        u = np.zeros_like(f)
        u[self.free_dofs] = lu.solve(np.ascontiguousarray(f[self.free_dofs]))
        return u


def solve_struct(fom: StructFom, f: np.ndarray) -> np.ndarray:
    return fom.solve(f)
