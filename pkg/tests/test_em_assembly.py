import dataclasses

import numpy as np
import pytest
from numpy.testing import assert_allclose

from em_assembly import (
    EmFom,
    InductanceKernel,
    QuadratureTiers,
    SaddlePointSolver,
    assemble_em_fom,
    assemble_input_map,
    assemble_resistance,
    coil_vector_potential,
    dense_inductance,
    green,
    ground_components,
    loop_field,
    neumann_mutual_inductance,
    ring_coupling,
    ring_response,
    simulate_em_fom,
    solve_laplace,
)
from em_assembly.inductance import ElementGeometry, pair_moments
from em_assembly.potentials import tet_face_vertices, tet_potentials
from em_assembly.quadrature import conical, gauss4, subdivided
from errors import ConfigError, NumericalError
from hmatrix import aca_factorize, block_partition, build_cluster_tree
from mesh import Mesh, build_incidence, generate_box, generate_torus_shell
from models import MU0, CircularLoop, CoilRole

RESISTIVITY = 7.4e-7


@pytest.fixture(scope="module")
def torus():
    return generate_torus_shell(1.0, 0.3, 0.05, 8, 6, 1)


@pytest.fixture(scope="module")
def coil():
    return CircularLoop.axisymmetric("PF", 1.6, 0.4, role=CoilRole.DYNAMIC)


@pytest.fixture(scope="module")
def fom(torus, coil):
    return assemble_em_fom(torus, resistivity=RESISTIVITY, coils=[coil], eps=1e-6, eta_adm=2.0, n_min=32)


@pytest.mark.parametrize("rule", [gauss4(), conical(3), subdivided(1), subdivided(1, 2)])
def test_tet_rules_integrate_linear_functions(rule):
    assert_allclose(rule.weights.sum(), 1.0)
    assert_allclose(rule.weights @ rule.barycentric, [0.25] * 4)


def test_conical_rule_is_exact_for_quadratics():
    rule = conical(3)
    # average of x^2 over the reference tetrahedron is 1/10
    x = rule.barycentric[:, 1]
    assert_allclose(rule.weights @ x**2, 0.1)


def test_tet_potential_far_field_is_a_monopole():
    vertices = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    faces = tet_face_vertices(vertices)
    point = np.array([40.0, 30.0, 20.0])
    phi, _ = tet_potentials(point, faces)
    centroid = vertices.mean(axis=0)
    assert_allclose(phi, (1.0 / 6.0) / np.linalg.norm(point - centroid), rtol=1e-4)


def test_tet_potentials_match_quadrature():
    vertices = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    point = np.array([1.5, 1.2, -0.8])
    rule = conical(16)
    pts = rule.points(vertices)
    dist = np.linalg.norm(pts - point, axis=1)
    phi_ref = rule.weights @ (1.0 / dist) / 6.0
    psi_ref = rule.weights @ ((pts - point) / dist[:, None]) / 6.0
    phi, psi = tet_potentials(point, tet_face_vertices(vertices))
    assert_allclose(phi, phi_ref, rtol=1e-7)
    assert_allclose(psi, psi_ref, rtol=1e-7)


def test_tet_potential_is_finite_inside_the_element():
    vertices = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    phi, psi = tet_potentials(vertices.mean(axis=0), tet_face_vertices(vertices))
    assert np.isfinite(phi) and phi > 0.0
    assert np.all(np.isfinite(psi))


def test_green_rejects_coincident_points():
    assert_allclose(green(np.zeros(3), np.array([0.0, 0.0, 2.0])), 1.0 / (8.0 * np.pi))
    with pytest.raises(NumericalError):
        green(np.zeros(3), np.zeros(3))


def test_loop_field_on_axis():
    loop = CircularLoop(name="ring", radius=0.5)
    z = np.array([0.0, 0.3, -1.2])
    points = np.stack([np.zeros(3), np.zeros(3), z], axis=1)
    B = loop_field(loop, points, current=1000.0)
    expected = MU0 * 1000.0 * 0.25 / (2.0 * (0.25 + z**2) ** 1.5)
    assert_allclose(B[:, 2], expected, rtol=1e-12)
    assert_allclose(B[:, :2], 0.0, atol=1e-20)


def test_loop_field_is_the_curl_of_the_vector_potential():
    loop = CircularLoop(name="tilted", center=(0.1, -0.2, 0.3), radius=0.8, axis=(0.2, 0.1, 1.0), turns=3.0)
    p = np.array([0.5, 0.4, 0.9])
    h = 1e-5

    def A(q):
        return coil_vector_potential(loop, q[None, :])[0]

    J = np.empty((3, 3))
    for k in range(3):
        step = np.zeros(3)
        step[k] = h
        J[:, k] = (A(p + step) - A(p - step)) / (2.0 * h)
    curl = np.array([J[2, 1] - J[1, 2], J[0, 2] - J[2, 0], J[1, 0] - J[0, 1]])
    B = loop_field(loop, p[None, :])[0]
    assert_allclose(B, curl, rtol=1e-5, atol=1e-6 * np.linalg.norm(B))


def test_filament_evaluation_is_rejected():
    loop = CircularLoop(name="ring", radius=1.0)
    with pytest.raises(NumericalError, match="filament"):
        loop_field(loop, np.array([[1.0, 0.0, 0.0]]))


def test_mutual_inductance_is_symmetric_with_dipole_limit():
    a = CircularLoop(name="a", radius=0.1)
    b = CircularLoop(name="b", center=(0.0, 0.0, 5.0), radius=0.2)
    M = neumann_mutual_inductance(a, b)
    assert_allclose(M, neumann_mutual_inductance(b, a), rtol=1e-12)
    assert_allclose(M, MU0 * np.pi * 0.1**2 * 0.2**2 / (2.0 * 5.0**3), rtol=1e-2)


def test_mutual_inductance_needs_coaxial_loops():
    a = CircularLoop(name="a", radius=0.5)
    b = CircularLoop(name="b", center=(1.0, 0.0, 1.0), radius=0.5)
    with pytest.raises(NumericalError):
        neumann_mutual_inductance(a, b)


def test_resistance_matches_quadrature(small_box):
    R = assemble_resistance(small_box, RESISTIVITY)
    rule = conical(3)
    e = next(e for e in range(small_box.n_elements) if np.sum(small_box.element_faces[e] >= 0) >= 2)
    a, b = np.flatnonzero(small_box.element_faces[e] >= 0)[:2]
    vertices = small_box.nodes[small_box.elements[e]]
    points = rule.points(vertices)
    volume = small_box.volumes[e]
    wa = small_box.element_signs[e, a] * (points - vertices[a]) / (3.0 * volume)
    wb = small_box.element_signs[e, b] * (points - vertices[b]) / (3.0 * volume)
    expected = RESISTIVITY * volume * rule.weights @ np.einsum("qi,qi->q", wa, wb)
    i, j = small_box.element_faces[e, a], small_box.element_faces[e, b]
    assert_allclose(R[i, j], expected, rtol=1e-12)


def test_resistance_is_symmetric_positive_definite(small_box):
    R = assemble_resistance(small_box, RESISTIVITY).toarray()
    assert_allclose(R, R.T)
    assert np.linalg.eigvalsh(R).min() > 0.0


def test_resistance_rejects_non_positive_resistivity(small_box):
    with pytest.raises(ConfigError):
        assemble_resistance(small_box, 0.0)


def test_far_and_analytic_tiers_agree_for_distant_pairs(torus):
    geo = ElementGeometry(torus)
    e = np.array([0, 1, 2])
    f = np.array([150, 160, 170])
    assert not geo.touching(e, f).any()
    far = QuadratureTiers(far=conical(4), near=conical(4), touching=subdivided(1), near_ratio=0.0)
    analytic = QuadratureTiers(far=conical(4), near=conical(4), touching=subdivided(1), near_ratio=1e9)
    assert_allclose(pair_moments(geo, e, f, far), pair_moments(geo, e, f, analytic), rtol=1e-5, atol=1e-12)


def test_dense_inductance_is_nearly_symmetric_and_positive(torus):
    L = dense_inductance(torus)
    assert np.linalg.norm(L - L.T) <= 1e-2 * np.linalg.norm(L)
    assert np.linalg.eigvalsh(0.5 * (L + L.T)).min() > 0.0
    kernel = InductanceKernel(torus)
    assert_allclose(kernel.entry(3, 17), L[3, 17], rtol=1e-12)


def test_compressed_inductance_matches_dense(fom, torus):
    L = dense_inductance(torus)
    assert np.linalg.norm(fom.L.to_dense() - L) <= 1e-4 * np.linalg.norm(L)
    assert fom.probe_definiteness() > 0.0


def test_fom_descriptor_blocks(fom, torus):
    assert fom.n_states == torus.n_faces + torus.n_elements - 1
    assert fom.n_coils == 1
    assert fom.coil_index("PF") == 0
    x = np.random.default_rng(2).standard_normal(fom.n_states)
    j, phi = fom.split(x)
    Ex = fom.E_matvec(x)
    assert_allclose(Ex[fom.n_faces :], 0.0)
    Ax = fom.A_matvec(x)
    D = build_incidence(torus)[fom.free_potentials]
    assert_allclose(Ax[fom.n_faces :], -(D @ j))
    assert_allclose(Ax[: fom.n_faces], -(fom.R @ j + D.T @ phi))
    assert_allclose(fom.B_u[: fom.n_faces, 0], -fom.B_i[:, 0])
    assert_allclose(fom.B_u[fom.n_faces :], 0.0)


def test_input_map_converges_with_quadrature_order(torus, coil):
    coarse = assemble_input_map(torus, [coil], order=3)[:, 0]
    fine = assemble_input_map(torus, [coil], order=6)[:, 0]
    assert np.linalg.norm(fine) > 0.0
    assert np.linalg.norm(coarse - fine) <= 1e-4 * np.linalg.norm(fine)


def test_every_component_is_grounded():
    first = generate_box((1.0, 1.0, 1.0), (1, 1, 1))
    second = generate_box((1.0, 1.0, 1.0), (1, 1, 1), origin=(3.0, 0.0, 0.0))
    mesh = Mesh.from_arrays(np.vstack([first.nodes, second.nodes]), np.vstack([first.elements, second.elements + first.n_nodes]))
    assert ground_components(mesh).tolist() == [0, 6]


def test_mesh_without_internal_faces_is_rejected(single_tet):
    with pytest.raises(ConfigError):
        assemble_em_fom(single_tet)


def test_saddle_point_solution_is_divergence_free(fom):
    solver = SaddlePointSolver(fom, 100.0)
    rhs = fom.B_u[:, 0]
    x = solver.solve(rhs)
    assert np.linalg.norm(solver.matvec(x) - rhs) <= 1e-6 * np.linalg.norm(rhs)
    j, _ = fom.split(x)
    assert np.linalg.norm(fom.D @ j) <= 1e-6 * np.linalg.norm(j)
    assert_allclose(solve_laplace(fom, 100.0, 0), x, rtol=1e-6, atol=1e-12 * np.abs(x).max())


def test_saddle_point_edge_cases(fom):
    with pytest.raises(ConfigError):
        SaddlePointSolver(fom, -1.0)
    solver = SaddlePointSolver(fom, 10.0)
    assert not np.any(solver.solve(np.zeros(fom.n_states)))


def test_zero_drive_keeps_the_state_at_rest(fom):
    trajectory = simulate_em_fom(fom, np.zeros((6, 1)), theta=0.5, tau=1e-3)
    assert trajectory.currents.shape == (6, fom.n_faces)
    assert not np.any(trajectory.currents)
    assert_allclose(trajectory.times, 1e-3 * np.arange(6))


def test_full_order_response_is_linear_in_the_drive(fom):
    ramp = np.linspace(0.0, 1e4, 5)[:, None]
    once = simulate_em_fom(fom, ramp, theta=0.5, tau=1e-3)
    twice = simulate_em_fom(fom, 2.0 * ramp, theta=0.5, tau=1e-3)
    scale = np.abs(once.currents).max()
    assert scale > 0.0
    assert_allclose(twice.currents, 2.0 * once.currents, atol=1e-7 * scale)


def test_full_order_stepping_rejects_bad_parameters(fom):
    with pytest.raises(ConfigError):
        simulate_em_fom(fom, np.zeros((3, 1)), theta=0.0, tau=1e-3)
    with pytest.raises(ConfigError):
        simulate_em_fom(fom, np.zeros((3, 1)), theta=0.5, tau=0.0)
    with pytest.raises(ConfigError):
        simulate_em_fom(fom, np.zeros((3, 2)), theta=0.5, tau=1e-3)


def test_ring_resistance_of_a_thin_torus(fom):
    ring = ring_response(fom)
    # thin circular shell: R = rho sqrt(R0^2 - a^2) / (a t)
    expected = RESISTIVITY * np.sqrt(1.0 - 0.3**2) / (0.3 * 0.05)
    assert ring.resistance == pytest.approx(expected, rel=0.15)
    assert ring.inductance > 0.0
    assert ring.time_constant > 0.0
    assert_allclose(ring.drive @ ring.current_pattern, 1.0)


def _shell_mutual(coil: CircularLoop, r_major: float, r_minor: float, n_pol: int, points: int = 16) -> float:
    """Neumann mutual inductance of the coil with a thin shell carrying a 1/rho toroidal current on its polygonal section."""
    theta = 2.0 * np.pi * np.arange(n_pol) / n_pol
    corners = np.stack([r_major + r_minor * np.cos(theta), r_minor * np.sin(theta)], axis=1)
    nodes, weights = np.polynomial.legendre.leggauss(points)
    total = weight = 0.0
    for a, b in zip(corners, np.roll(corners, -1, axis=0)):
        length = np.linalg.norm(b - a)
        for x, w in zip(0.5 * (nodes + 1.0), weights):
            rho, z = a + x * (b - a)
            dI = 0.5 * w * length / rho
            total += dI * neumann_mutual_inductance(coil, CircularLoop.axisymmetric("filament", rho, z))
            weight += dI
    return total / weight


def test_lumped_ring_coupling_matches_the_neumann_formula(coil):
    mesh = generate_torus_shell(1.0, 0.3, 0.01, 48, 8, 1)
    resistive = EmFom(
        mesh=mesh,
        L=None,
        R=assemble_resistance(mesh, RESISTIVITY),
        D=build_incidence(mesh),
        B_i=assemble_input_map(mesh, [coil]),
        coil_names=[coil.name],
        grounded=ground_components(mesh),
        resistivity=RESISTIVITY,
    )
    M = ring_coupling(resistive)
    expected = _shell_mutual(coil, 1.0, 0.3, 8)
    assert expected > 0.0
    assert M[0] == pytest.approx(expected, rel=0.02)


@pytest.fixture(scope="module")
def ring_fom(coil):
    mesh = generate_torus_shell(1.0, 0.1, 0.02, 12, 6, 1)
    return assemble_em_fom(mesh, resistivity=RESISTIVITY, coils=[coil], eps=1e-6, eta_adm=2.0, n_min=32)


def test_ring_discharge_follows_the_lumped_time_constant(ring_fom):
    ring = ring_response(ring_fom)
    tau = ring.time_constant / 50.0
    x0 = np.zeros(ring_fom.n_states)
    x0[: ring_fom.n_faces] = ring.current_pattern
    trajectory = simulate_em_fom(ring_fom, np.zeros((151, 1)), theta=0.5, tau=tau, x0=x0)
    current = trajectory.currents @ ring.drive
    assert current[0] == pytest.approx(1.0)
    assert_allclose(current, np.exp(-trajectory.times / ring.time_constant), atol=0.02)


def test_backward_euler_dissipates_magnetic_energy(ring_fom):
    ring = ring_response(ring_fom)
    x0 = np.zeros(ring_fom.n_states)
    x0[: ring_fom.n_faces] = ring.current_pattern
    trajectory = simulate_em_fom(ring_fom, np.zeros((21, 1)), theta=1.0, tau=ring.time_constant / 10.0, x0=x0)
    energy = np.array([j @ ring_fom.L.matvec(j) for j in trajectory.currents])
    assert np.all(energy > 0.0)
    assert np.all(np.diff(energy) < 0.0)


def test_currents_do_not_depend_on_the_grounded_element(fom):
    regrounded = dataclasses.replace(fom, grounded=np.array([fom.mesh.n_elements // 2]))
    ramp = np.linspace(0.0, 1e4, 6)[:, None]
    reference = simulate_em_fom(fom, ramp, theta=0.5, tau=1e-3).currents
    moved = simulate_em_fom(regrounded, ramp, theta=0.5, tau=1e-3).currents
    assert_allclose(moved, reference, atol=1e-6 * np.abs(reference).max())


def test_aca_compresses_a_far_inductance_block(torus):
    kernel = InductanceKernel(torus)
    tree = build_cluster_tree(torus.face_centroids, 32)
    far = [(s, t) for s, t, is_admissible in block_partition(tree, tree, 2.0) if is_admissible]
    sigma, tau = max(far, key=lambda pair: pair[0].size * pair[1].size)
    rows, cols = tree.indices(sigma), tree.indices(tau)
    factors = aca_factorize(kernel.oracle, rows, cols, 1e-6, 128)
    assert factors is not None
    U, V = factors
    block = kernel.oracle(rows, cols)
    assert U.shape[1] < min(len(rows), len(cols))
    assert np.linalg.norm(U @ V.T - block) <= 1e-4 * np.linalg.norm(block)
