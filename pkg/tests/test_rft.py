import numpy as np
import pytest
from scipy import stats

from twotower.rft import (
    FavorFeatures,
    FeatureOverflowError,
    build_tree,
    exact_softmax_distribution,
    favor_features,
    favor_psi,
    favor_psi_batch,
    flat_distribution,
    sample_action,
    sample_many,
    shift_for,
    tree_distribution,
)
from twotower.rng import Rng


class TestFavorPsi:
    def test_zero_input(self):
        feats = favor_features(16, 3, Rng.from_seed(1))
        psi = favor_psi(feats, np.zeros(3))
        np.testing.assert_allclose(psi, np.full(16, 0.25), rtol=1e-12)  # 1/sqrt(16)
        assert abs(float(psi @ psi) - 1.0) < 1e-12  # exp(0) = 1

    def test_self_kernel_monte_carlo(self):
        feats = favor_features(100_000, 4, Rng.from_seed(2))
        x = np.array([0.5, 0.5, 0.5, 0.5])  # unit norm
        psi = favor_psi(feats, x)
        assert abs(float(psi @ psi) - np.e) < 0.15

    def test_orthogonal_unit_vectors(self):
        feats = favor_features(100_000, 4, Rng.from_seed(3))
        x = np.array([1.0, 0.0, 0.0, 0.0])
        y = np.array([0.0, 1.0, 0.0, 0.0])
        assert abs(float(favor_psi(feats, x) @ favor_psi(feats, y)) - 1.0) < 0.05

    def test_positive_entries(self):
        feats = favor_features(64, 3, Rng.from_seed(4))
        psi = favor_psi(feats, Rng.from_seed(5).normals(3))
        assert np.all(psi > 0)

    def test_overflow_raises(self):
        # projections large enough that exp(w . x - |x|^2/2) exceeds float range
        feats = FavorFeatures(omega=np.full((4, 2), 400.0))
        with pytest.raises(FeatureOverflowError):
            favor_psi(feats, np.array([1.0, 1.0]))

    def test_shift_cancels_in_ratios(self):
        feats = favor_features(32, 3, Rng.from_seed(7))
        xs = Rng.from_seed(8).normals(12).reshape(4, 3)
        s = Rng.from_seed(9).normals(3)
        base = favor_psi_batch(feats, xs) @ favor_psi(feats, s)
        shifted = FavorFeatures(feats.omega, shift=shift_for(feats, xs))
        moved = favor_psi_batch(shifted, xs) @ favor_psi(shifted, s)
        np.testing.assert_allclose(base / base.sum(), moved / moved.sum(), rtol=1e-10)


class TestBuildTree:
    def test_single_action(self):
        psi = np.array([[0.3, 0.7]])
        tree = build_tree(psi, Rng.from_seed(10))
        assert tree.n_actions == 1
        assert tree.leaf_action[0] == 0
        assert np.array_equal(tree.xi[0], psi[0])

    def test_two_actions_root_sum(self):
        psi = np.array([[1.0, 2.0], [3.0, 4.0]])
        tree = build_tree(psi, Rng.from_seed(11))
        assert np.array_equal(tree.xi[0], psi[0] + psi[1])

    def test_depth_and_root_aggregate(self):
        psi = np.abs(Rng.from_seed(12).normals(8 * 4)).reshape(8, 4) + 0.1
        tree = build_tree(psi, Rng.from_seed(13))
        assert tree.depth == 3
        np.testing.assert_allclose(tree.xi[0], psi.sum(axis=0), atol=1e-12)

    def test_aggregates_are_exact_child_sums(self):
        psi = np.abs(Rng.from_seed(14).normals(11 * 3)).reshape(11, 3) + 0.1
        tree = build_tree(psi, Rng.from_seed(15))
        for v in range(tree.xi.shape[0]):
            if tree.left[v] >= 0:
                assert np.array_equal(tree.xi[v], tree.xi[tree.left[v]] + tree.xi[tree.right[v]])

    def test_leaves_cover_actions_once(self):
        psi = np.abs(Rng.from_seed(16).normals(13 * 2)).reshape(13, 2) + 0.1
        tree = build_tree(psi, Rng.from_seed(17))
        leaves = sorted(int(a) for a in tree.leaf_action if a >= 0)
        assert leaves == list(range(13))

    def test_depth_is_ceil_log2(self):
        for n in (2, 3, 5, 6, 8, 16, 33):
            psi = np.abs(Rng.from_seed(18, n).normals(n * 2)).reshape(n, 2) + 0.1
            tree = build_tree(psi, Rng.from_seed(19, n))
            assert tree.depth == int(np.ceil(np.log2(n)))


class TestSampling:
    def test_two_leaf_branch_probability(self):
        # psi dot products (1, 3) against the state: P[action 0] = 0.25
        psi = np.array([[1.0], [3.0]])
        tree = build_tree(psi, Rng.from_seed(20))
        probs = tree_distribution(tree, np.array([1.0]))
        np.testing.assert_allclose(probs, [0.25, 0.75], rtol=1e-12)

    def test_identical_actions_sample_uniformly(self):
        psi = np.ones((8, 4))
        tree = build_tree(psi, Rng.from_seed(21))
        draws = sample_many(tree, np.ones(4), 100_000, Rng.from_seed(22))
        counts = np.bincount(draws, minlength=8)
        assert stats.chisquare(counts).pvalue > 0.01

    def test_empirical_matches_flat_distribution(self):
        psi = np.abs(Rng.from_seed(23).normals(8 * 16)).reshape(8, 16) + 0.05
        tree = build_tree(psi, Rng.from_seed(24))
        psi_state = np.abs(Rng.from_seed(25).normals(16)) + 0.05
        n = 200_000
        draws = sample_many(tree, psi_state, n, Rng.from_seed(26))
        freq = np.bincount(draws, minlength=8) / n
        flat = flat_distribution(psi, psi_state)
        assert 0.5 * np.abs(freq - flat).sum() < 0.01

    def test_sample_action_agrees_with_sample_many(self):
        psi = np.abs(Rng.from_seed(27).normals(4 * 8)).reshape(4, 8) + 0.1
        tree = build_tree(psi, Rng.from_seed(28))
        psi_state = np.abs(Rng.from_seed(29).normals(8)) + 0.1
        singles = [sample_action(tree, psi_state, Rng.from_seed(30, i)) for i in range(50)]
        manys = [int(sample_many(tree, psi_state, 1, Rng.from_seed(30, i))[0]) for i in range(50)]
        assert singles == manys

    def test_rejects_nonpositive_state(self):
        psi = np.ones((2, 3))
        tree = build_tree(psi, Rng.from_seed(31))
        with pytest.raises(ValueError):
            sample_action(tree, np.array([1.0, -0.5, 1.0]), Rng.from_seed(32))


class TestDistributions:
    def test_flat_single(self):
        assert np.array_equal(flat_distribution(np.array([[2.0]]), np.array([1.0])), [1.0])

    def test_flat_ratio(self):
        probs = flat_distribution(np.array([[1.0], [3.0]]), np.array([1.0]))
        np.testing.assert_allclose(probs, [0.25, 0.75], rtol=1e-12)

    def test_flat_normalized(self):
        psi = np.abs(Rng.from_seed(33).normals(16 * 4)).reshape(16, 4) + 0.1
        probs = flat_distribution(psi, np.abs(Rng.from_seed(34).normals(4)) + 0.1)
        assert abs(probs.sum() - 1.0) < 1e-12

    def test_tree_path_probabilities_equal_flat(self):
        # the telescoping product down the tree reproduces the flat
        # psi-proportional distribution exactly
        rng = Rng.from_seed(35)
        for n in (2, 8, 16, 64):
            for _ in range(5):
                psi = np.abs(rng.normals(n * 8)).reshape(n, 8) + 0.05
                tree = build_tree(psi, rng.split(n))
                psi_state = np.abs(rng.normals(8)) + 0.05
                np.testing.assert_allclose(
                    tree_distribution(tree, psi_state),
                    flat_distribution(psi, psi_state),
                    atol=1e-12,
                )

    def test_exact_softmax_examples(self):
        lat = np.array([[1.0], [1.0], [1.0]])
        np.testing.assert_allclose(
            exact_softmax_distribution(lat, [0.7]), np.full(3, 1 / 3), rtol=1e-12
        )
        lat2 = np.array([[0.0], [np.log(3.0)]])
        np.testing.assert_allclose(
            exact_softmax_distribution(lat2, [1.0]), [0.25, 0.75], rtol=1e-12
        )

    def test_flat_converges_to_softmax_with_more_features(self):
        # median TV against the exact softmax is non-increasing in r
        n, d = 16, 4
        rng = Rng.from_seed(36)
        lat = rng.normals(n * d).reshape(n, d)
        lat /= np.linalg.norm(lat, axis=1, keepdims=True)
        state = rng.normals(d)
        state /= np.linalg.norm(state)
        target = exact_softmax_distribution(lat, state)
        medians = []
        for r in (8, 64, 512):
            tvs = []
            for k in range(20):
                feats = favor_features(r, d, Rng.from_seed(37, r, k))
                psi_rows = favor_psi_batch(feats, lat)
                psi_state = favor_psi(feats, state)
                tvs.append(0.5 * np.abs(flat_distribution(psi_rows, psi_state) - target).sum())
            medians.append(float(np.median(tvs)))
        assert medians[0] >= medians[1] >= medians[2]
