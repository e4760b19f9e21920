from enum import Enum

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

MU0 = 4.0e-7 * np.pi


class MeshFormat(Enum):
    GMSH = "gmsh-subset"
    FLAT = "flat-text"


class CoilRole(Enum):
    STATIC = "static"
    DYNAMIC = "dynamic"


class Material(BaseModel):
    young_modulus: float = Field(193.0e9, gt=0.0)
    poisson_ratio: float = Field(0.25, gt=0.0, lt=0.5)
    density: float = Field(8000.0, gt=0.0)
    resistivity: float = Field(7.4e-7, gt=0.0)


class CircularLoop(BaseModel):
    name: str
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    radius: float = Field(..., gt=0.0)
    axis: tuple[float, float, float] = (0.0, 0.0, 1.0)
    turns: float = 1.0
    role: CoilRole = CoilRole.STATIC

    @field_validator("axis")
    @classmethod
    def normalize_axis(cls, axis: tuple[float, float, float]) -> tuple[float, float, float]:
        norm = float(np.linalg.norm(axis))
        if norm == 0.0:
            raise ValueError("coil axis must be nonzero")
        return (axis[0] / norm, axis[1] / norm, axis[2] / norm)

    @classmethod
    def axisymmetric(cls, name: str, r: float, z: float, role: CoilRole = CoilRole.STATIC, turns: float = 1.0) -> "CircularLoop":
        return cls(name=name, center=(0.0, 0.0, z), radius=r, role=role, turns=turns)


class CoilSet(BaseModel):
    loops: list[CircularLoop] = []

    @model_validator(mode="after")
    def unique_names(self):
        names = [loop.name for loop in self.loops]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate coil names in {names}")
        return self

    def __len__(self) -> int:
        return len(self.loops)

    def by_role(self, role: CoilRole) -> list[CircularLoop]:
        return [loop for loop in self.loops if loop.role == role]

    @property
    def static(self) -> list[CircularLoop]:
        return self.by_role(CoilRole.STATIC)

    @property
    def dynamic(self) -> list[CircularLoop]:
        return self.by_role(CoilRole.DYNAMIC)


class StepperConfig(BaseModel):
    """Per-scenario stepper overrides; unset fields fall back to VV_THETA / VV_TAU."""

    theta: float | None = Field(None, ge=0.0, le=1.0)
    tau: float | None = Field(None, gt=0.0)
