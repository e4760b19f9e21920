import numpy as np
import pytest

from coupling import CouplingMaps, build_coupling_maps
from elasticity import StructFom, assemble_stiffness, clamp_plane
from mesh import Mesh, generate_box, generate_torus_shell
from models import CircularLoop, CoilRole, Material
from mor import EmRom, attach_composites

REFERENCE_TET = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])


@pytest.fixture
def single_tet() -> Mesh:
    return Mesh.from_arrays(REFERENCE_TET, [[0, 1, 2, 3]])


@pytest.fixture
def two_tets() -> Mesh:
    nodes = np.vstack([REFERENCE_TET, [[1.0, 1.0, 1.0]]])
    return Mesh.from_arrays(nodes, [[0, 1, 2, 3], [1, 2, 3, 4]])


@pytest.fixture
def unit_cube() -> Mesh:
    return generate_box((1.0, 1.0, 1.0), (1, 1, 1))


@pytest.fixture
def small_box() -> Mesh:
    return generate_box((1.0, 0.5, 0.5), (4, 2, 2))


@pytest.fixture(scope="session")
def small_torus() -> Mesh:
    return generate_torus_shell(1.0, 0.3, 0.05, 8, 6, 1)


@pytest.fixture
def driving_coil() -> CircularLoop:
    return CircularLoop.axisymmetric("PF", 1.6, 0.4, role=CoilRole.DYNAMIC)


@pytest.fixture(scope="session")
def pf_coils() -> list[CircularLoop]:
    return [
        CircularLoop.axisymmetric("PF_UP", 2.0, 1.0),
        CircularLoop.axisymmetric("PF_LO", 2.0, -1.0, role=CoilRole.DYNAMIC),
    ]


@pytest.fixture(scope="session")
def box_maps(pf_coils) -> CouplingMaps:
    mesh = generate_box((1.0, 0.5, 0.5), (4, 2, 2))
    return build_coupling_maps(mesh, pf_coils, eps=1e-8, eta_adm=2.0, n_min=16)


@pytest.fixture(scope="session")
def box_struct(box_maps) -> StructFom:
    mesh = box_maps.mesh
    return assemble_stiffness(mesh, Material(young_modulus=1e6, poisson_ratio=0.3), clamp_plane(mesh, 0, 0.0))


@pytest.fixture(scope="session")
def synthetic_rom(box_maps) -> EmRom:
    """Two-mode reduced model of the dynamic coil with a random orthonormal basis."""
    rng = np.random.default_rng(0)
    V, _ = np.linalg.qr(rng.standard_normal((box_maps.mesh.n_faces + 4, 2)))
    rom = EmRom(
        coil="PF_LO",
        V=V,
        E_hat=np.eye(2),
        A_hat=np.diag([-50.0, -400.0]),
        B_hat=np.array([1.0, 0.5]),
        s_grid=np.zeros(0),
        errors=np.zeros(0),
    )
    return attach_composites(rom, box_maps)
