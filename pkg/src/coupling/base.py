from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from hmatrix import HMatrix
from mesh import Mesh


@dataclass
class CouplingMaps:
    """
    Current-to-field maps on element centroids.

    W[c] (N_v x N_f) gives the element-averaged current density component c,
    K[c] (N_v x N_f) the eddy-current flux density component c, P
    (3N_n x 3N_v) lumps stacked force densities [Fx; Fy; Fz] onto
    node-interleaved loads. coil_fields[c] holds the unit-current field of
    coil c at every centroid.
    """

    mesh: Mesh
    W: tuple[sp.csr_matrix, sp.csr_matrix, sp.csr_matrix]
    K: tuple[HMatrix, HMatrix, HMatrix]
    P: sp.csr_matrix
    coil_names: list[str]
    coil_fields: np.ndarray  # (N_coils, N_v, 3)

    def coil_index(self, name: str) -> int:
        return self.coil_names.index(name)

    def external_field(self, currents: dict[str, float] | np.ndarray) -> np.ndarray:
        """Superposed coil field (N_v, 3) for currents by name or in coil order."""
        if isinstance(currents, dict):
            vector = np.zeros(len(self.coil_names))
            for name, value in currents.items():
                vector[self.coil_index(name)] = value
        else:
            vector = np.asarray(currents, dtype=np.float64)
        if len(vector) == 0:
            return np.zeros((self.mesh.n_elements, 3))
        return np.einsum("c,cei->ei", vector, self.coil_fields)
