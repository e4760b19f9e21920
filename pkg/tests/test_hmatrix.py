import numpy as np
import pytest
from numpy.testing import assert_allclose

from errors import BundleMismatchError, ConfigError
from hmatrix import (
    FullBlock,
    LowRankBlock,
    aca_factorize,
    admissible,
    block_partition,
    build_cluster_tree,
    hbuild,
    hmatmat,
    hmatvec,
    load_hmatrix,
    recompress,
    save_hmatrix,
    scalar_oracle,
    stats,
    transpose_matvec,
)
from hmatrix.storage import hmatrix_arrays, hmatrix_from_arrays
from mesh import generate_torus_shell


def smooth_kernel(targets: np.ndarray, sources: np.ndarray):
    def oracle(rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        diff = targets[rows][:, None, :] - sources[cols][None, :, :]
        return 1.0 / (0.05 + np.linalg.norm(diff, axis=-1))

    return oracle


@pytest.fixture(scope="module")
def cloud() -> np.ndarray:
    return np.random.default_rng(7).uniform(0.0, 1.0, size=(400, 3))


@pytest.fixture(scope="module")
def kernel_matrix(cloud):
    oracle = smooth_kernel(cloud, cloud)
    row_tree = build_cluster_tree(cloud, 16)
    col_tree = build_cluster_tree(cloud, 16)
    H = hbuild(oracle, row_tree, col_tree, eta_adm=1.5, eps=1e-6)
    dense = oracle(np.arange(len(cloud)), np.arange(len(cloud)))
    return H, dense


def test_cluster_tree_is_a_permutation_with_small_leaves(cloud):
    tree = build_cluster_tree(cloud, 16)
    assert sorted(tree.perm.tolist()) == list(range(len(cloud)))
    leaves = tree.leaves()
    assert all(leaf.size <= 16 for leaf in leaves)
    assert sum(leaf.size for leaf in leaves) == len(cloud)
    for leaf in leaves:
        pts = cloud[tree.indices(leaf)]
        assert np.all(pts >= leaf.lower - 1e-15)
        assert np.all(pts <= leaf.upper + 1e-15)


def test_cluster_tree_is_deterministic(cloud):
    a = build_cluster_tree(cloud, 8)
    b = build_cluster_tree(cloud.copy(), 8)
    assert np.array_equal(a.perm, b.perm)
    assert a.depth() == b.depth()


def test_cluster_tree_rejects_bad_input():
    with pytest.raises(ConfigError):
        build_cluster_tree(np.zeros((0, 3)))
    with pytest.raises(ConfigError):
        build_cluster_tree(np.zeros((4, 3)), n_min=0)


def test_partition_covers_every_entry_once(cloud):
    tree = build_cluster_tree(cloud, 16)
    coverage = np.zeros((len(cloud), len(cloud)), dtype=np.int64)
    for sigma, tau, is_admissible in block_partition(tree, tree, 1.5):
        coverage[sigma.start : sigma.stop, tau.start : tau.stop] += 1
        if is_admissible:
            assert admissible(sigma, tau, 1.5)
    assert np.all(coverage == 1)


def test_diagonal_blocks_are_never_admissible(cloud):
    tree = build_cluster_tree(cloud, 16)
    for leaf in tree.leaves():
        assert not admissible(leaf, leaf, 100.0)


def test_aca_recovers_exact_low_rank_block():
    rng = np.random.default_rng(3)
    A = rng.standard_normal((40, 2)) @ rng.standard_normal((2, 30))
    oracle = lambda rows, cols: A[np.ix_(rows, cols)]
    factors = aca_factorize(oracle, np.arange(40), np.arange(30), 1e-10, 20)
    assert factors is not None
    U, V = factors
    assert U.shape[1] <= 3
    assert_allclose(U @ V.T, A, atol=1e-10 * np.abs(A).max())


def test_aca_returns_none_at_rank_cap():
    A = np.random.default_rng(4).standard_normal((20, 20))
    oracle = lambda rows, cols: A[np.ix_(rows, cols)]
    assert aca_factorize(oracle, np.arange(20), np.arange(20), 1e-12, 3) is None


def test_aca_of_zero_block_is_rank_zero():
    oracle = lambda rows, cols: np.zeros((len(rows), len(cols)))
    U, V = aca_factorize(oracle, np.arange(5), np.arange(6), 1e-6, 4)
    assert U.shape == (5, 0)
    assert V.shape == (6, 0)


def test_recompress_truncates_redundant_terms():
    rng = np.random.default_rng(5)
    u = rng.standard_normal((25, 1))
    v = rng.standard_normal((15, 1))
    U = np.hstack([u, 2.0 * u, -u])
    V = np.hstack([v, v, v])
    Uc, Vc = recompress(U, V, 1e-12)
    assert Uc.shape[1] == 1
    assert_allclose(Uc @ Vc.T, U @ V.T, atol=1e-12 * np.abs(U @ V.T).max())


def test_hmatrix_approximates_dense_kernel(kernel_matrix):
    H, dense = kernel_matrix
    error = np.linalg.norm(H.to_dense() - dense) / np.linalg.norm(dense)
    assert error < 1e-4
    assert H.low_rank_blocks
    assert H.compression_ratio < 1.0


def test_matvec_matches_dense_product(kernel_matrix):
    H, dense = kernel_matrix
    rng = np.random.default_rng(11)
    x = rng.standard_normal(H.shape[1])
    X = rng.standard_normal((H.shape[1], 3))
    scale = np.linalg.norm(dense, 2)
    assert np.linalg.norm(hmatvec(H, x) - dense @ x) <= 1e-4 * scale * np.linalg.norm(x)
    assert_allclose(hmatmat(H, X), np.stack([H.matvec(X[:, i]) for i in range(3)], axis=1), rtol=1e-12, atol=1e-12)
    assert np.linalg.norm(transpose_matvec(H, x) - dense.T @ x) <= 1e-4 * scale * np.linalg.norm(x)


def test_matvec_rejects_wrong_length(kernel_matrix):
    H, _ = kernel_matrix
    with pytest.raises(ValueError, match="dimension mismatch"):
        H.matvec(np.zeros(H.shape[1] + 1))


def test_near_field_holds_the_dense_leaves(kernel_matrix):
    H, dense = kernel_matrix
    near = H.near_field().toarray()
    mask = near != 0.0
    assert_allclose(near[mask], dense[mask])
    assert np.count_nonzero(mask) == sum(b.data.size for b in H.full_blocks)


def test_rectangular_build_with_scalar_oracle():
    rng = np.random.default_rng(9)
    targets = rng.uniform(0.0, 1.0, size=(60, 3))
    sources = rng.uniform(3.0, 4.0, size=(40, 3))
    block = smooth_kernel(targets, sources)
    entry = lambda i, j: float(block(np.array([i]), np.array([j]))[0, 0])
    H = hbuild(scalar_oracle(entry), build_cluster_tree(targets, 8), build_cluster_tree(sources, 8), eta_adm=2.0, eps=1e-8)
    dense = block(np.arange(60), np.arange(40))
    assert H.shape == (60, 40)
    assert len(H.blocks) == 1
    assert isinstance(H.blocks[0], LowRankBlock)
    assert_allclose(H.to_dense(), dense, rtol=1e-6)


def test_rank_capped_blocks_are_stored_densely():
    rng = np.random.default_rng(10)
    targets = rng.uniform(0.0, 1.0, size=(30, 3))
    sources = rng.uniform(3.0, 4.0, size=(30, 3))
    noise = rng.standard_normal((30, 30))
    oracle = lambda rows, cols: noise[np.ix_(rows, cols)]
    H = hbuild(oracle, build_cluster_tree(targets, 8), build_cluster_tree(sources, 8), eta_adm=2.0, eps=1e-10, r_max=2)
    assert all(isinstance(b, FullBlock) for b in H.blocks)
    assert_allclose(H.to_dense(), noise)


def test_threaded_build_matches_serial(cloud):
    oracle = smooth_kernel(cloud, cloud)
    tree = build_cluster_tree(cloud, 32)
    serial = hbuild(oracle, tree, tree, eta_adm=1.5, eps=1e-6, threads=1)
    threaded = hbuild(oracle, tree, tree, eta_adm=1.5, eps=1e-6, threads=4)
    assert_allclose(threaded.to_dense(), serial.to_dense())


def test_storage_round_trip(kernel_matrix, tmp_path):
    H, _ = kernel_matrix
    path = save_hmatrix(H, tmp_path / "k.npz")
    loaded = load_hmatrix(path)
    assert loaded.shape == H.shape
    assert (loaded.eps, loaded.eta_adm) == (H.eps, H.eta_adm)
    assert_allclose(loaded.to_dense(), H.to_dense())
    assert stats(loaded) == stats(H)


def test_storage_rejects_foreign_version(kernel_matrix):
    H, _ = kernel_matrix
    arrays = hmatrix_arrays(H, prefix="K_")
    arrays["K_version"] = np.array(99)
    with pytest.raises(BundleMismatchError):
        hmatrix_from_arrays(arrays, prefix="K_")


def test_storage_rejects_truncated_payload(kernel_matrix):
    H, _ = kernel_matrix
    arrays = hmatrix_arrays(H)
    arrays["payload"] = np.concatenate([arrays["payload"], [0.0]])
    with pytest.raises(ConfigError, match="corrupt"):
        hmatrix_from_arrays(arrays)


def test_stats_reports_block_counts(kernel_matrix):
    H, _ = kernel_matrix
    report = stats(H)
    assert report["full_blocks"] + report["low_rank_blocks"] == len(H.blocks)
    assert report["stored_bytes"] == 8 * H.storage
    assert report["max_rank"] == max(b.rank for b in H.low_rank_blocks)


@pytest.mark.slow
def test_compression_improves_as_the_torus_is_refined():
    ratios = []
    for n_tor, n_pol in [(20, 10), (32, 16), (46, 22)]:
        centroids = generate_torus_shell(1.0, 0.3, 0.05, n_tor, n_pol, 1).face_centroids
        tree = build_cluster_tree(centroids, 32)
        H = hbuild(smooth_kernel(centroids, centroids), tree, tree, eta_adm=2.0, eps=1e-6)
        ratios.append(H.compression_ratio)
    assert ratios[0] > ratios[1] > ratios[2]
    assert ratios[2] < 0.6
