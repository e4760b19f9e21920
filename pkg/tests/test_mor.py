import timeit

import numpy as np
import pytest
from numpy.testing import assert_allclose

from coupling import build_coupling_maps, total_force_operator
from elasticity import assemble_stiffness, clamp_plane
from em_assembly import assemble_em_fom, simulate_em_fom
from errors import ConfigError, RomConvergenceError
from mesh import generate_box, generate_torus_shell
from models import CircularLoop, CoilRole, Material
from mor import (
    DenseDescriptor,
    EmDescriptor,
    EmRom,
    attach_composites,
    build_deim,
    build_em_rom,
    build_struct_rom,
    decay_rate_range,
    deim_points,
    generate_force_snapshots,
    holdout_split,
    random_traces,
    stack_composites,
    trace_forces,
    truncation_errors,
)
from online import simulate_em_rom

THETA = 0.5
TAU = 1e-3


def decoupled_circuits(inductances, resistances, drive) -> DenseDescriptor:
    return DenseDescriptor(np.diag(inductances), -np.diag(resistances), -np.asarray(drive, dtype=np.float64))


def test_single_circuit_needs_one_basis_vector():
    system = decoupled_circuits([2e-3], [1e-2], [1.0])
    rom = build_em_rom(system, 0, name="loop", eta=1e-6, s_range=(1.0, 1e5))
    assert rom.size == 1
    assert rom.coil == "loop"
    assert rom.max_error < 1e-12
    assert rom.samples == [float(rom.s_grid[len(rom.s_grid) // 2])]


def test_two_time_constants_need_two_basis_vectors():
    system = decoupled_circuits([1e-3, 5e-3], [1.0, 0.1], [1.0, 2.0])
    rom = build_em_rom(system, 0, eta=1e-6, s_range=(1.0, 1e5), n_points=40)
    assert rom.size == 2
    assert rom.history[-1] < 1e-6
    assert rom.history[0] > rom.history[-1]
    assert_allclose(rom.V.T @ rom.V, np.eye(2), atol=1e-12)


def test_reduced_transfer_matches_the_full_response():
    system = decoupled_circuits([1e-3, 5e-3, 2e-2], [1.0, 0.1, 0.3], [1.0, 2.0, -0.5])
    rom = build_em_rom(system, 0, eta=1e-8, s_range=(0.1, 1e5))
    for s in (0.5, 37.0, 2.5e3, 8e4):
        full = system.shifted_solve(s, system.input_column(0))
        assert_allclose(rom.reconstruct(rom.transfer(s)), full, rtol=1e-6, atol=1e-9 * np.abs(full).max())


def test_basis_cap_raises_with_the_reached_error():
    rates = np.logspace(0, 5, 12)
    system = decoupled_circuits(np.ones(12), rates, np.ones(12))
    with pytest.raises(RomConvergenceError) as info:
        build_em_rom(system, 0, eta=1e-10, s_range=(1.0, 1e5), basis_cap=3)
    assert info.value.max_error > 1e-10
    assert info.value.exit_code == 3


def _scripted_errors(monkeypatch, maxima: list[tuple[int, float]], n_points: int):
    calls = iter(maxima)

    def residuals(*args):
        index, value = next(calls)
        errors = np.full(n_points, 1e-12)
        errors[index] = value
        return errors

    monkeypatch.setattr("mor.em_rom.residual_errors", residuals)


def test_moderate_greedy_error_rise_is_tolerated(monkeypatch):
    system = decoupled_circuits([1e-3, 5e-3, 2e-2], [1.0, 0.1, 0.3], [1.0, 2.0, -0.5])
    _scripted_errors(monkeypatch, [(0, 1e-2), (-1, 5e-2), (3, 1e-7)], 20)
    rom = build_em_rom(system, 0, eta=1e-6, n_points=20, growth=10.0)
    assert rom.history == [1e-2, 5e-2, 1e-7]
    assert rom.size == 3


def test_greedy_error_rise_beyond_the_growth_factor_raises(monkeypatch):
    system = decoupled_circuits([1e-3, 5e-3, 2e-2], [1.0, 0.1, 0.3], [1.0, 2.0, -0.5])
    _scripted_errors(monkeypatch, [(0, 1e-2), (-1, 0.5)], 20)
    with pytest.raises(RomConvergenceError, match="rose") as info:
        build_em_rom(system, 0, eta=1e-6, n_points=20, growth=10.0)
    assert info.value.max_error == 0.5


def test_greedy_rejects_invalid_requests():
    system = DenseDescriptor(np.eye(2), -np.eye(2), np.array([[1.0, 0.0], [0.0, 0.0]]))
    with pytest.raises(ConfigError):
        build_em_rom(system, 0, eta=1.5)
    with pytest.raises(ConfigError):
        build_em_rom(system, 0, s_range=(10.0, 1.0))
    with pytest.raises(ConfigError, match="does not couple"):
        build_em_rom(system, 1)


def test_decay_rate_range_spans_horizon_and_step():
    assert decay_rate_range(0.5, 1e-3) == pytest.approx((0.2, 1e5))
    with pytest.raises(ConfigError):
        decay_rate_range(0.0, 1e-3)


def test_holdout_split():
    train, held = holdout_split(12, 5)
    assert held.tolist() == [4, 9]
    assert len(train) == 10
    train, held = holdout_split(3, 5)
    assert len(held) == 0
    assert train.tolist() == [0, 1, 2]


def test_tail_criterion_without_held_out_snapshots():
    sigma = np.array([3.0, 2.0, 1.0])
    errors = truncation_errors(np.eye(3), sigma, np.zeros((3, 0)))
    assert_allclose(errors, np.sqrt([5.0 / 14.0, 1.0 / 14.0, 0.0]))


def test_rank_one_loads_give_a_one_mode_structural_rom(box_struct):
    rng = np.random.default_rng(6)
    g = rng.standard_normal(box_struct.n_dofs)
    loads = np.outer(g, rng.uniform(0.5, 2.0, size=12))
    rom = build_struct_rom(box_struct, loads, eta=1e-6, probe_nodes=[5], probe_elements=[3, 8])
    assert rom.size == 1
    u = box_struct.solve(g)
    assert_allclose(rom.reconstruct(rom.solve(rom.project(g))), u, rtol=1e-8, atol=1e-10 * np.abs(u).max())
    assert rom.probe_displacement.shape == (3, 1)
    assert rom.probe_strain.shape == (12, 1)
    assert_allclose(rom.S_hat, rom.S_hat.T)


def test_structural_rom_rejects_zero_snapshots(box_struct):
    with pytest.raises(ConfigError):
        build_struct_rom(box_struct, np.zeros((box_struct.n_dofs, 4)))


def test_unrepresentable_held_out_loads_raise(box_struct):
    loads = np.random.default_rng(7).standard_normal((box_struct.n_dofs, 10))
    with pytest.raises(RomConvergenceError):
        build_struct_rom(box_struct, loads, eta=1e-6)


def test_random_traces_are_seeded_and_bounded():
    times = np.linspace(0.0, 0.1, 51)
    bounds = np.array([2e3, 5e2])
    first = random_traces(bounds, times, 4, n_knots=6, seed=3)
    again = random_traces(bounds, times, 4, n_knots=6, seed=3)
    other = random_traces(bounds, times, 4, n_knots=6, seed=4)
    assert len(first) == 4
    assert first[0].shape == (51, 2)
    assert all(np.array_equal(a, b) for a, b in zip(first, again))
    assert not np.array_equal(first[0], other[0])
    assert np.all(np.abs(np.vstack(first)) <= bounds)


def test_zero_currents_give_zero_force_snapshots(box_maps, synthetic_rom):
    traces = [np.zeros((11, 1)), np.zeros((11, 1))]
    snapshots = generate_force_snapshots([synthetic_rom], box_maps, traces, {}, THETA, TAU)
    assert snapshots.count == 20
    assert not np.any(snapshots.F)
    assert not np.any(snapshots.f)
    assert snapshots.trace.tolist() == [0] * 10 + [1] * 10
    assert snapshots.step.tolist() == list(range(1, 11)) * 2


def test_snapshot_generation_validates_traces(box_maps, synthetic_rom):
    with pytest.raises(ConfigError):
        generate_force_snapshots([synthetic_rom], box_maps, [], {}, THETA, TAU)
    with pytest.raises(ConfigError):
        trace_forces([synthetic_rom], box_maps, np.zeros((5, 2)), np.zeros((box_maps.mesh.n_elements, 3)), THETA, TAU)


def test_missing_composites_are_reported(synthetic_rom):
    bare = EmRom(
        coil="PF_LO",
        V=synthetic_rom.V,
        E_hat=synthetic_rom.E_hat,
        A_hat=synthetic_rom.A_hat,
        B_hat=synthetic_rom.B_hat,
        s_grid=np.zeros(0),
        errors=np.zeros(0),
    )
    with pytest.raises(ValueError, match="PF_LO"):
        stack_composites([bare])


def test_deim_points_of_identity_columns():
    Z = np.eye(5)[:, [3, 1]]
    assert deim_points(Z).tolist() == [3, 1]


def test_deim_of_rank_one_data_is_exact(box_maps, box_struct, synthetic_rom):
    z = np.random.default_rng(8).standard_normal(3 * box_maps.mesh.n_elements)
    F = np.outer(z, [1.0, -2.0, 0.5])
    struct = build_struct_rom(box_struct, box_maps.P @ F, eta=1e-6)
    deim = build_deim(F, [synthetic_rom], box_maps, struct, k_tol=1e-8)
    assert deim.rank == 1
    p = deim.points[0]
    assert p == int(np.argmax(np.abs(z)))
    rebuilt = deim.Z @ np.linalg.solve(deim.SZ, F[deim.points])
    assert_allclose(rebuilt, F, rtol=1e-10, atol=1e-12 * np.abs(F).max())


def test_deim_rejects_zero_snapshots(box_maps, box_struct, synthetic_rom):
    struct = build_struct_rom(box_struct, np.ones((box_struct.n_dofs, 2)), eta=1e-6)
    with pytest.raises(ConfigError):
        build_deim(np.zeros((3 * box_maps.mesh.n_elements, 4)), [synthetic_rom], box_maps, struct)


def test_deim_operator_reproduces_training_forces(box_maps, box_struct, synthetic_rom):
    times = TAU * np.arange(21)
    traces = random_traces(np.array([2e3]), times, 3, n_knots=5, seed=1)
    static = {"PF_UP": 1e3}
    snapshots = generate_force_snapshots([synthetic_rom], box_maps, traces, static, THETA, TAU)
    struct = build_struct_rom(box_struct, snapshots.f, eta=1e-6)
    deim = build_deim(snapshots.F, [synthetic_rom], box_maps, struct, k_tol=1e-10)
    # J(x) x (K x + B) spans at most 7 directions for two modes and one driven coil
    assert 1 <= deim.rank <= 7

    states = simulate_em_rom(synthetic_rom, traces[0][:, 0], THETA, TAU)
    operator = total_force_operator(box_maps.mesh)
    for k in (1, 7, 20):
        column = k - 1
        F = snapshots.F[:, column]
        currents = np.array([1e3, traces[0][k, 0]])
        sampled = deim.sampled_force(states[k], currents)
        assert_allclose(sampled, F[deim.points], rtol=1e-8, atol=1e-10 * np.abs(F).max())
        rebuilt = deim.Z @ np.linalg.solve(deim.SZ, sampled)
        assert np.linalg.norm(rebuilt - F) <= 1e-6 * np.linalg.norm(F)
        f_hat, total = deim.evaluate(states[k], currents)
        expected_total = operator @ F
        assert_allclose(total, expected_total, rtol=1e-6, atol=1e-8 * np.abs(expected_total).max())
        expected_load = struct.project(snapshots.f[:, column])
        assert_allclose(f_hat, expected_load, rtol=1e-6, atol=1e-8 * np.abs(expected_load).max())


@pytest.mark.slow
def test_em_rom_tracks_the_full_order_model(small_torus, driving_coil):
    fom = assemble_em_fom(small_torus, coils=[driving_coil], eps=1e-6, eta_adm=2.0, n_min=32)
    system = EmDescriptor(fom)
    rom = build_em_rom(system, 0, name="PF", eta=1e-4, s_range=decay_rate_range(0.02, TAU))
    assert rom.max_error < 1e-4
    ramp = np.concatenate([np.linspace(0.0, 1e4, 6), np.full(15, 1e4)])[:, None]
    full = simulate_em_fom(fom, ramp, THETA, TAU).currents
    reduced = simulate_em_rom(rom, ramp[:, 0], THETA, TAU) @ rom.V[: fom.n_faces].T
    assert np.linalg.norm(reduced - full) <= 1e-2 * np.linalg.norm(full)


def test_small_em_rom_tracks_the_full_order_model():
    mesh = generate_torus_shell(1.0, 0.3, 0.05, 6, 4, 1)
    fom = assemble_em_fom(mesh, coils=[CircularLoop.axisymmetric("PF", 1.6, 0.4, role=CoilRole.DYNAMIC)], eps=1e-6, eta_adm=2.0)
    rom = build_em_rom(EmDescriptor(fom), 0, name="PF", eta=1e-4, s_range=decay_rate_range(0.02, TAU))
    assert rom.max_error < 1e-4
    assert rom.size < fom.n_states
    ramp = np.concatenate([np.linspace(0.0, 1e4, 6), np.full(15, 1e4)])[:, None]
    full = simulate_em_fom(fom, ramp, THETA, TAU).currents
    reduced = simulate_em_rom(rom, ramp[:, 0], THETA, TAU) @ rom.V[: fom.n_faces].T
    assert np.linalg.norm(reduced - full) <= 1e-2 * np.linalg.norm(full)


def _deim_on_box(length: float, n_x: int, coils: list[CircularLoop]):
    mesh = generate_box((length, 0.5, 0.5), (n_x, 2, 2))
    maps = build_coupling_maps(mesh, coils, eps=1e-8, eta_adm=2.0, n_min=16)
    struct_fom = assemble_stiffness(mesh, Material(young_modulus=1e6, poisson_ratio=0.3), clamp_plane(mesh, 0, 0.0))
    V, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((mesh.n_faces + 4, 2)))
    rom = EmRom(
        coil="PF_LO",
        V=V,
        E_hat=np.eye(2),
        A_hat=np.diag([-50.0, -400.0]),
        B_hat=np.array([1.0, 0.5]),
        s_grid=np.zeros(0),
        errors=np.zeros(0),
    )
    rom = attach_composites(rom, maps)
    times = TAU * np.arange(21)
    traces = random_traces(np.array([2e3]), times, 3, n_knots=5, seed=1)
    snapshots = generate_force_snapshots([rom], maps, traces, {"PF_UP": 1e3}, THETA, TAU)
    struct = build_struct_rom(struct_fom, snapshots.f, eta=1e-6)
    deim = build_deim(snapshots.F, [rom], maps, struct, k_tol=1e-10)
    return deim, rom, struct, mesh


@pytest.mark.parametrize("length, n_x", [(1.0, 4), (2.0, 8)])
def test_deim_online_operators_do_not_grow_with_the_mesh(pf_coils, length, n_x):
    deim, rom, struct, mesh = _deim_on_box(length, n_x, pf_coils)
    k, n_r, n_c = deim.rank, rom.size, len(pf_coils)
    assert deim.Z.shape == (3 * mesh.n_elements, k)
    for name in ("J_a", "J_b", "K_a", "K_b"):
        assert getattr(deim, name).shape == (k, n_r)
    for name in ("B_a", "B_b"):
        assert getattr(deim, name).shape == (k, n_c)
    assert deim.load_lift.shape == (struct.size, k)
    assert deim.force_lift.shape == (3, k)


@pytest.mark.slow
def test_deim_step_cost_is_flat_when_the_mesh_doubles(pf_coils):
    costs = []
    for length, n_x in [(1.0, 4), (2.0, 8)]:
        deim, rom, _, _ = _deim_on_box(length, n_x, pf_coils)
        x = np.ones(rom.size)
        currents = np.array([1e3, 5e2])
        costs.append(min(timeit.repeat(lambda: deim.evaluate(x, currents), number=2000, repeat=7)))
    assert costs[1] <= 1.2 * costs[0]
