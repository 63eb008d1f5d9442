import numpy as np
import pytest
from scipy import stats

from twotower.policy import (
    ActionSet,
    ActionSpace,
    action_latents,
    explicit_act,
    iot_select,
    itt_select,
    itt_softmax_sample,
    sample_actions,
)
from twotower.rng import Rng
from twotower.towers import TowerSpec, forward, param_count


def _identity_spec(dim):
    return TowerSpec((dim, dim)), np.eye(dim).ravel()


class TestSampleActions:
    def test_discrete_enumerates_one_hots(self):
        aset = sample_actions(ActionSpace.discrete(3), 0, Rng.from_seed(1))
        assert np.array_equal(aset.actions, np.eye(3))

    def test_degenerate_box_rejected(self):
        with pytest.raises(ValueError):
            ActionSpace.box([0.0, 0.0], [1.0, 0.0])

    def test_box_thousand_samples(self):
        space = ActionSpace.box([-1.0, 0.0], [1.0, 2.0])
        aset = sample_actions(space, 1000, Rng.from_seed(2))
        assert aset.actions.shape == (1000, 2)
        assert np.all(aset.actions >= space.lo) and np.all(aset.actions <= space.hi)
        # coordinates roughly uniform
        assert abs(aset.actions[:, 0].mean()) < 0.05
        assert abs(aset.actions[:, 1].mean() - 1.0) < 0.05


class TestActionLatents:
    def test_zero_tower_gives_zero_matrix(self):
        spec = TowerSpec((3, 2))
        aset = sample_actions(ActionSpace.discrete(3), 0, Rng.from_seed(3))
        lat = action_latents(spec, np.zeros(param_count(spec)), aset)
        assert np.array_equal(lat, np.zeros((3, 2)))

    def test_identity_layer_gives_actions(self):
        spec, params = _identity_spec(3)
        aset = sample_actions(ActionSpace.discrete(3), 0, Rng.from_seed(4))
        assert np.array_equal(action_latents(spec, params, aset), aset.actions)

    def test_matches_per_row_forward(self):
        spec = TowerSpec((2, 3, 4))
        params = Rng.from_seed(5).normals(param_count(spec))
        aset = ActionSet(actions=Rng.from_seed(6).normals(10).reshape(5, 2))
        lat = action_latents(spec, params, aset)
        for i in range(5):
            np.testing.assert_allclose(lat[i], forward(spec, params, aset.actions[i]), rtol=1e-13)


class TestIttSelect:
    def test_single_action(self):
        spec, params = _identity_spec(2)
        aset = ActionSet(actions=np.array([[0.4, 0.2]]))
        lat = action_latents(spec, params, aset)
        action, idx = itt_select([3.0, -1.0], spec, params, lat, aset)
        assert idx == 0 and np.array_equal(action, aset.actions[0])

    def test_direct_score_computation(self):
        # state latent (1, 0); latent rows (0.5, 0), (-1, 0), (0, 2): scores 0.5, -1, 0
        spec, params = _identity_spec(2)
        lat = np.array([[0.5, 0.0], [-1.0, 0.0], [0.0, 2.0]])
        aset = ActionSet(actions=np.eye(3)[:, :2])
        _, idx = itt_select([1.0, 0.0], spec, params, lat, aset)
        assert idx == 0

    def test_zero_state_latent_ties_to_first(self):
        spec = TowerSpec((2, 2))
        lat = Rng.from_seed(7).normals(6).reshape(3, 2)
        aset = ActionSet(actions=np.eye(3)[:, :2])
        _, idx = itt_select([1.0, 1.0], spec, np.zeros(4), lat, aset)
        assert idx == 0

    def test_empty_action_set_rejected(self):
        spec, params = _identity_spec(2)
        with pytest.raises(ValueError):
            itt_select([1.0, 0.0], spec, params, np.zeros((0, 2)), ActionSet(np.zeros((0, 2))))

    def test_matches_brute_force_energy_argmin(self):
        # selection equals argmin over the set of E = -l_S(s) . l_A(a)
        state_spec = TowerSpec((3, 2, 2))
        action_spec = TowerSpec((2, 2))
        rng = Rng.from_seed(8)
        for trial in range(50):
            th1 = rng.normals(param_count(state_spec))
            th2 = rng.normals(param_count(action_spec))
            aset = ActionSet(actions=rng.normals(12).reshape(6, 2))
            lat = action_latents(action_spec, th2, aset)
            state = rng.normals(3)
            _, idx = itt_select(state, state_spec, th1, lat, aset)
            s_lat = forward(state_spec, th1, state)
            energies = np.array([-(s_lat @ forward(action_spec, th2, a)) for a in aset.actions])
            assert idx == int(np.argmin(energies))


class TestSoftmaxSample:
    def test_uniform_when_scores_equal(self):
        lat = np.ones((4, 2))
        rng = Rng.from_seed(9)
        counts = np.zeros(4)
        n = 100_000
        for _ in range(n):
            counts[itt_softmax_sample([0.5, 0.5], lat, rng)] += 1
        assert stats.chisquare(counts).pvalue > 0.01

    def test_softmax_ratio(self):
        # scores (ln 1, ln 3): P[1] = 3 / (1 + 3) = 0.75
        lat = np.array([[0.0], [np.log(3.0)]])
        rng = Rng.from_seed(10)
        hits = sum(itt_softmax_sample([1.0], lat, rng) for _ in range(100_000))
        assert abs(hits / 100_000 - 0.75) < 0.01

    def test_single_action(self):
        assert itt_softmax_sample([1.0], np.array([[2.0]]), Rng.from_seed(11)) == 0

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            itt_softmax_sample([1e308], np.array([[1e308]]), Rng.from_seed(12))

    def test_empirical_matches_exact_distribution(self):
        rng_inst = Rng.from_seed(13)
        lat = rng_inst.normals(32).reshape(16, 2)
        state_latent = rng_inst.normals(2)
        z = lat @ state_latent
        p = np.exp(z - z.max())
        p /= p.sum()
        counts = np.zeros(16)
        n = 100_000
        sampler = Rng.from_seed(14)
        for _ in range(n):
            counts[itt_softmax_sample(state_latent, lat, sampler)] += 1
        tv = 0.5 * np.abs(counts / n - p).sum()
        assert tv < 0.02


class TestIotSelect:
    def test_zero_params_ties_to_first(self):
        spec = TowerSpec((5, 3, 1))
        aset = sample_actions(ActionSpace.discrete(3), 0, Rng.from_seed(15))
        _, idx = iot_select([0.5, -0.5], spec, np.zeros(param_count(spec)), aset)
        assert idx == 0

    def test_single_action(self):
        spec = TowerSpec((3, 1))
        aset = ActionSet(actions=np.array([[2.0]]))
        action, idx = iot_select([1.0, 1.0], spec, Rng.from_seed(16).normals(3), aset)
        assert idx == 0 and action[0] == 2.0

    def test_bilinear_construction_matches_itt(self):
        # Bias-free ReLU net computing E([s; a]) = -s . a for one-hot a:
        # hidden u_j = relu(s_j + B a_j), v_j = relu(s_j - B a_j), w = relu(B sum(a));
        # output -sum(u) + sum(v) + w = -s_m for action m when |s_j| < B.
        k, big = 3, 100.0
        w1 = np.zeros((2 * k + 1, 2 * k))
        for j in range(k):
            w1[j, j] = 1.0
            w1[j, k + j] = big
            w1[k + j, j] = 1.0
            w1[k + j, k + j] = -big
        w1[2 * k, k:] = big
        w2 = np.concatenate([-np.ones(k), np.ones(k), [1.0]])
        energy_params = np.concatenate([w1.ravel(), w2])
        energy_spec = TowerSpec((2 * k, 2 * k + 1, 1))

        itt_spec, itt_params = _identity_spec(k)
        aset = sample_actions(ActionSpace.discrete(k), 0, Rng.from_seed(17))
        rng = Rng.from_seed(18)
        for _ in range(50):
            state = rng.uniforms(k) * 2.0 - 1.0
            energies = np.array(
                [
                    forward(energy_spec, energy_params, np.concatenate([state, a]))[0]
                    for a in aset.actions
                ]
            )
            np.testing.assert_allclose(energies, -state, atol=1e-12)
            _, iot_idx = iot_select(state, energy_spec, energy_params, aset)
            lat = action_latents(itt_spec, itt_params, aset)
            _, itt_idx = itt_select(state, itt_spec, itt_params, lat, aset)
            assert iot_idx == itt_idx


class TestExplicitAct:
    def test_zero_params_zero_action(self):
        spec = TowerSpec((3, 1))
        space = ActionSpace.box([-1.0], [1.0])
        action = explicit_act([1.0, 2.0, 3.0], spec, np.zeros(3), space)
        assert np.array_equal(action, [0.0])

    def test_tied_logits_pick_first(self):
        spec = TowerSpec((2, 2))
        action = explicit_act([1.0, 1.0], spec, np.zeros(4), ActionSpace.discrete(2))
        assert np.array_equal(action, [1.0, 0.0])

    def test_clamp(self):
        spec = TowerSpec((2, 2))
        params = np.array([5.0, 0.0, 0.0, -5.0])
        space = ActionSpace.box([-1.0, -1.0], [1.0, 1.0])
        action = explicit_act([1.0, 1.0], spec, params, space)
        assert np.array_equal(action, [1.0, -1.0])
