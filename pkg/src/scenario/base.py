from typing import Literal

import numpy as np
from pydantic import BaseModel, Field, model_validator

from models import CircularLoop, CoilRole, Material, StepperConfig


class MeshSpec(BaseModel):
    kind: Literal["torus", "d-shape", "box", "file"] = "torus"
    r_major: float = Field(1.0, gt=0.0)
    r_minor: float = Field(0.3, gt=0.0)
    thickness: float = Field(0.02, gt=0.0)
    n_tor: int = Field(16, ge=3)
    n_pol: int = Field(12, ge=3)
    n_rad: int = Field(1, ge=1)
    elongation: float = 1.7
    triangularity: float = 0.33
    lengths: tuple[float, float, float] = (1.0, 0.1, 0.1)
    divisions: tuple[int, int, int] = (20, 2, 2)
    path: str | None = None


class SupportSpec(BaseModel):
    """Zero-displacement support: a poloidal band of a shell or a clamped plane of a bar."""

    kind: Literal["band", "plane"] = "band"
    r_center: float = 0.0
    z_center: float = 0.0
    theta_min_deg: float = -100.0
    theta_max_deg: float = -80.0
    axis: int = Field(0, ge=0, le=2)
    value: float = 0.0


class ProbeSet(BaseModel):
    """Probe nodes/elements by index, plus points snapped to the nearest node and element."""

    nodes: list[int] = []
    elements: list[int] = []
    points: list[tuple[float, float, float]] = []


class TrajectorySample(BaseModel):
    t: float = Field(..., ge=0.0)
    r: float = Field(..., gt=0.0)
    z: float
    current: float


class Crown(BaseModel):
    n_eq: int = Field(12, ge=3)
    radius: float = Field(..., gt=0.0)
    center: tuple[float, float] | None = None


class Tolerances(BaseModel):
    eps: float | None = Field(None, gt=0.0, lt=1.0)
    eta_adm: float | None = Field(None, gt=0.0)
    eta_rom: float | None = Field(None, gt=0.0, lt=1.0)


class Scenario(BaseModel):
    name: str
    horizon: float = Field(..., ge=0.0)
    mesh: MeshSpec | None = None
    material: Material = Material()
    coils: list[CircularLoop] = []
    static_currents: dict[str, float] = {}
    trajectory: list[TrajectorySample] = []
    crown: Crown | None = None
    probes: ProbeSet = ProbeSet()
    support: SupportSpec | None = None
    stepper: StepperConfig = StepperConfig()
    tolerances: Tolerances = Tolerances()

    @model_validator(mode="after")
    def check_consistency(self):
        names = {loop.name for loop in self.coils}
        if len(names) != len(self.coils):
            raise ValueError("duplicate coil names")
        if any(loop.role != CoilRole.STATIC for loop in self.coils):
            raise ValueError("scenario coils are static; dynamic loops come from the crown")
        unknown = set(self.static_currents) - names
        if unknown:
            raise ValueError(f"currents given for unknown coils {sorted(unknown)}")
        times = [sample.t for sample in self.trajectory]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("trajectory times must be non-decreasing")
        if self.trajectory and self.crown is None:
            raise ValueError("a plasma trajectory needs an equivalent-loop crown")
        return self

    @property
    def crown_center(self) -> tuple[float, float] | None:
        if self.crown is None or not self.trajectory:
            return None
        if self.crown.center is not None:
            return self.crown.center
        return (self.trajectory[0].r, self.trajectory[0].z)

    def equivalent_loops(self) -> list[CircularLoop]:
        center = self.crown_center
        if center is None:
            return []
        n = self.crown.n_eq
        phi = 2.0 * np.pi * np.arange(n) / n
        return [
            CircularLoop.axisymmetric(
                f"EQ{i + 1:02d}",
                float(center[0] + self.crown.radius * np.cos(p)),
                float(center[1] + self.crown.radius * np.sin(p)),
                role=CoilRole.DYNAMIC,
            )
            for i, p in enumerate(phi)
        ]

    def all_coils(self) -> list[CircularLoop]:
        """Static coils first, then the equivalent plasma loops."""
        return list(self.coils) + self.equivalent_loops()

    @property
    def static_vector(self) -> np.ndarray:
        return np.array([self.static_currents.get(loop.name, 0.0) for loop in self.coils])

    def plasma_state(self, t: float | np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Piecewise-linear (r_p, z_p, I_p) at times t, held constant outside the samples."""
        t = np.atleast_1d(np.asarray(t, dtype=np.float64))
        if not self.trajectory:
            zeros = np.zeros_like(t)
            return zeros, zeros, zeros
        ts = np.array([s.t for s in self.trajectory])
        return (
            np.interp(t, ts, [s.r for s in self.trajectory]),
            np.interp(t, ts, [s.z for s in self.trajectory]),
            np.interp(t, ts, [s.current for s in self.trajectory]),
        )
