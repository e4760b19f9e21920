import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
import scipy.sparse as sp

from coupling.base import CouplingMaps
from coupling.maps import total_force_operator
from elasticity.strain import STRAIN_COMPONENTS
from mor.base import DeimOperator, EmRom, StructRom, stack_composites
from online.stepper import ThetaStepper


@dataclass
class OnlineModel:
    """
    Everything the real-time loop touches, composed once from the offline
    artifacts. Coil order follows the coupling maps; roms[i] drives coil
    dynamic[i].
    """

    roms: list[EmRom]
    coil_names: list[str]
    dynamic: np.ndarray
    WV: np.ndarray  # (3, N_v, n_r)
    KV: np.ndarray
    fields: np.ndarray  # (3, N_v, N_coils)
    load_projection: np.ndarray  # V_m^T P, (N_m, 3N_v)
    force_operator: sp.csr_matrix  # (3, 3N_v)
    struct: StructRom
    deim: DeimOperator | None = None

    @classmethod
    def from_components(
        cls, roms: list[EmRom], maps: CouplingMaps, struct: StructRom, deim: DeimOperator | None = None
    ) -> "OnlineModel":
        WV, KV = stack_composites(roms)
        return cls(
            roms=roms,
            coil_names=list(maps.coil_names),
            dynamic=np.array([maps.coil_index(rom.coil) for rom in roms], dtype=np.int64),
            WV=np.ascontiguousarray(WV),
            KV=np.ascontiguousarray(KV),
            fields=np.ascontiguousarray(maps.coil_fields.transpose(2, 1, 0)),
            load_projection=np.asarray(maps.P.T @ struct.V).T.copy(),
            force_operator=total_force_operator(maps.mesh),
            struct=struct,
            deim=deim,
        )

    @property
    def n_reduced(self) -> int:
        return self.WV.shape[2]

    @property
    def n_elements(self) -> int:
        return self.WV.shape[1]

    @property
    def slices(self) -> list[slice]:
        bounds = np.concatenate([[0], np.cumsum([rom.size for rom in self.roms])])
        return [slice(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]


@dataclass
class OnlineState:
    """Per-coil reduced states and factored theta steps, plus the direct-path work buffers."""

    steppers: list[ThetaStepper]
    x: np.ndarray  # concatenated reduced state
    slices: list[slice]
    theta: float
    tau: float
    k: int = 0
    J: np.ndarray = field(default_factory=lambda: np.zeros((3, 0)))
    B: np.ndarray = field(default_factory=lambda: np.zeros((3, 0)))
    B_ext: np.ndarray = field(default_factory=lambda: np.zeros((3, 0)))
    F: np.ndarray = field(default_factory=lambda: np.zeros((3, 0)))
    scratch: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def coil_state(self, i: int) -> np.ndarray:
        return self.x[self.slices[i]]


@dataclass
class StepOutput:
    f_hat: np.ndarray
    u_hat: np.ndarray
    total_force: np.ndarray
    displacement: np.ndarray  # (3 n_probe_nodes,)
    strain: np.ndarray  # (6 n_probe_elements,)


@dataclass
class ResultTable:
    frame: pd.DataFrame
    horizon: float
    wall_clock: float = 0.0
    step_times: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def n_steps(self) -> int:
        return len(self.frame)

    @property
    def real_time_factor(self) -> float:
        """Wall clock over simulated time; below 1 is faster than real time."""
        return self.wall_clock / self.horizon if self.horizon > 0.0 else 0.0

    def force_magnitude(self) -> np.ndarray:
        return np.linalg.norm(self.frame[["Fx", "Fy", "Fz"]].to_numpy(), axis=1)

    def displacement_columns(self) -> list[str]:
        return [c for c in self.frame.columns if c[:3] in ("ux_", "uy_", "uz_")]

    def summary(self) -> dict:
        if self.n_steps == 0:
            return {
                "steps": 0,
                "peak_force": 0.0,
                "time_of_peak": None,
                "peak_displacement": 0.0,
                "wall_clock": self.wall_clock,
                "real_time_factor": self.real_time_factor,
            }
        force = self.force_magnitude()
        peak = int(np.argmax(force))
        columns = self.displacement_columns()
        if columns:
            u = self.frame[columns].to_numpy().reshape(self.n_steps, -1, 3)
            peak_displacement = float(np.max(np.linalg.norm(u, axis=2)))
        else:
            peak_displacement = 0.0
        return {
            "steps": self.n_steps,
            "peak_force": float(force[peak]),
            "time_of_peak": float(self.frame["t"].iloc[peak]),
            "peak_displacement": peak_displacement,
            "wall_clock": self.wall_clock,
            "max_step_time": float(self.step_times.max()) if len(self.step_times) else 0.0,
            "real_time_factor": self.real_time_factor,
        }

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.frame.to_csv(path, index=False)
        return path

    def write_summary(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.summary(), indent=2), encoding="utf-8")
        return path


def result_columns(coil_names: list[str], probe_nodes: np.ndarray, probe_elements: np.ndarray) -> list[str]:
    """t, I_<coil>..., Fx, Fy, Fz, ux_<n>, uy_<n>, uz_<n>..., <strain>_<e>..."""
    columns = ["t"] + [f"I_{name}" for name in coil_names] + ["Fx", "Fy", "Fz"]
    for node in probe_nodes:
        columns += [f"ux_{node}", f"uy_{node}", f"uz_{node}"]
    for element in probe_elements:
        columns += [f"{component}_{element}" for component in STRAIN_COMPONENTS]
    return columns
