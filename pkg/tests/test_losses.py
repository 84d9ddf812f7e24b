"""Loss semantics against loop oracles, closed forms, and finite differences."""

import numpy as np
import pytest

import motion2d.losses as L
import motion2d.network as net
import motion2d.tensorkit as tk
from motion2d.errors import DataError
from motion2d.motiondata import NormStats
from motion2d.tensorkit import Tensor

TINY = net.ArchConfig(
    joints=3,
    motion_channels=(4, 6),
    motion_kernel=4,
    static_channels=(4, 5),
    skeleton_out=3,
    view_out=2,
    static_kernel=3,
    decoder_channels=(5,),
    decoder_kernel=3,
)
T_TINY = 16


def tiny_params(seed=0):
    return net.init_params(TINY, np.random.default_rng(seed))


def tiny_stats():
    rng = np.random.default_rng(99)
    return NormStats(
        mean=rng.standard_normal((3, 2)) * 0.1,
        std=rng.uniform(0.5, 2.0, (3, 2)),
        vel_std=rng.uniform(0.5, 2.0, 2),
    )


def tiny_batch(b=2, seed=1, t=T_TINY):
    rng = np.random.default_rng(seed)
    c = TINY.motion_in
    mk = lambda: rng.standard_normal((b, c, t))
    labels_a = np.stack([np.arange(b), np.arange(b), np.arange(b)], axis=1)
    labels_b = labels_a + 10  # all three labels differ
    return L.PairBatch(
        a=mk(), b=mk(), gt_ab=mk(), gt_ba=mk(), labels_a=labels_a, labels_b=labels_b
    )


def loop_mse(pred, target):
    p, t = np.asarray(pred).ravel(), np.asarray(target).ravel()
    acc = 0.0
    for i in range(p.size):
        acc += (p[i] - t[i]) ** 2
    return acc / p.size


def loop_foot(pred, target, stats, joints):
    """Independent implementation of the end-effector velocity error."""
    pred, target = np.asarray(pred), np.asarray(target)
    b, c, t = pred.shape
    total = 0.0
    for bi in range(b):
        for ti in range(t - 1):
            for joint in joints:
                c0 = 2 * (joint - 1)
                err = 0.0
                for comp in range(2):
                    vp = pred[bi, c - 2 + comp, ti] * stats.vel_std[comp]
                    lp1 = pred[bi, c0 + comp, ti + 1] * stats.std[joint, comp]
                    lp0 = pred[bi, c0 + comp, ti] * stats.std[joint, comp]
                    vg = target[bi, c - 2 + comp, ti] * stats.vel_std[comp]
                    lg1 = target[bi, c0 + comp, ti + 1] * stats.std[joint, comp]
                    lg0 = target[bi, c0 + comp, ti] * stats.std[joint, comp]
                    err += ((vp + (lp1 - lp0)) - (vg + (lg1 - lg0))) ** 2
                total += err
    return total / (b * (t - 1))


class TestMse:
    def test_identity_is_zero(self):
        x = np.random.default_rng(0).standard_normal((2, 5, 8))
        assert L.mse(Tensor(x), x).item() == 0.0

    def test_uniform_offset_gives_eps_squared(self):
        x = np.random.default_rng(1).standard_normal((3, 4))
        eps = 0.37
        assert L.mse(Tensor(x + eps), x).item() == pytest.approx(eps**2, rel=1e-12)

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(2)
        p, t = rng.standard_normal((2, 6, 10)), rng.standard_normal((2, 6, 10))
        assert L.mse(Tensor(p), t).item() == pytest.approx(loop_mse(p, t), rel=1e-12)


class TestReconstructionLoss:
    def test_runs_and_matches_direct_composition(self):
        params = tiny_params()
        rng = np.random.default_rng(3)
        x = rng.standard_normal((2, TINY.motion_in, T_TINY))
        loss = L.reconstruction_loss(params, x)
        m, s, v = net.encode_batch(params, Tensor(x))
        out = net.decode_batch(params, m, s, v)
        assert loss.item() == pytest.approx(loop_mse(out.data, x), rel=1e-12)

    def test_gradient_matches_finite_differences(self):
        params = tiny_params(4)
        rng = np.random.default_rng(5)
        x = rng.standard_normal((1, TINY.motion_in, T_TINY))
        params.zero_grad()
        err = tk.sampled_parameter_errors(
            lambda: L.reconstruction_loss(params, x),
            params.tensors,
            n_per_param=3,
            rng=np.random.default_rng(6),
        )
        assert err < 1e-4


class TestCrossReconstruction:
    def test_degenerate_pair_cross_is_twice_reconstruction(self):
        params = tiny_params(7)
        batch = tiny_batch(seed=8)
        batch.b = batch.a.copy()
        batch.gt_ab = batch.a.copy()
        batch.gt_ba = batch.a.copy()
        batch.b_in = batch.a_in = batch.gt_ab_in = batch.gt_ba_in = batch.a
        cfg = L.LossConfig(lambda_triplet=0.0, lambda_foot=0.0)
        _, parts = L.total_loss(params, batch, tiny_stats(), cfg)
        assert parts["cross"] == pytest.approx(2.0 * parts["rec"], rel=1e-12)

    def test_perfect_targets_give_zero_cross(self):
        # oracle decoder: use the network's own outputs as ground truth
        params = tiny_params(9)
        batch = tiny_batch(seed=10)
        cfg = L.LossConfig(lambda_triplet=0.0, lambda_foot=0.0)
        inputs = np.concatenate([batch.a, batch.b], axis=0)
        m, s, v = net.encode_batch(params, Tensor(inputs))
        b = batch.a.shape[0]
        m_a, m_b = tk.narrow(m, 0, 0, b), tk.narrow(m, 0, b, b)
        s_a, s_b = tk.narrow(s, 0, 0, b), tk.narrow(s, 0, b, b)
        v_a, v_b = tk.narrow(v, 0, 0, b), tk.narrow(v, 0, b, b)
        batch.gt_ab = net.decode_batch(params, m_a, s_b, v_b).data
        batch.gt_ba = net.decode_batch(params, m_b, s_a, v_a).data
        batch.gt_ab_in = batch.gt_ab
        batch.gt_ba_in = batch.gt_ba
        _, parts = L.total_loss(params, batch, tiny_stats(), cfg)
        assert parts["cross"] == pytest.approx(0.0, abs=1e-24)

    def test_matches_loop_oracle_on_toy_case(self):
        params = tiny_params(11)
        batch = tiny_batch(seed=12)
        cfg = L.LossConfig(lambda_triplet=0.0, lambda_foot=0.0)
        _, parts = L.total_loss(params, batch, tiny_stats(), cfg)

        inputs = np.concatenate([batch.a, batch.b], axis=0)
        m, s, v = net.encode_batch(params, Tensor(inputs))
        b = batch.a.shape[0]
        m_a, m_b = tk.narrow(m, 0, 0, b), tk.narrow(m, 0, b, b)
        s_a, s_b = tk.narrow(s, 0, 0, b), tk.narrow(s, 0, b, b)
        v_a, v_b = tk.narrow(v, 0, 0, b), tk.narrow(v, 0, b, b)
        cross_ab = net.decode_batch(params, m_a, s_b, v_b).data
        cross_ba = net.decode_batch(params, m_b, s_a, v_a).data
        rec_a = net.decode_batch(params, m_a, s_a, v_a).data
        rec_b = net.decode_batch(params, m_b, s_b, v_b).data
        expected_cross = loop_mse(cross_ab, batch.gt_ab) + loop_mse(cross_ba, batch.gt_ba)
        expected_rec = 0.5 * (loop_mse(rec_a, batch.a) + loop_mse(rec_b, batch.b))
        assert parts["cross"] == pytest.approx(expected_cross, rel=1e-12)
        assert parts["rec"] == pytest.approx(expected_rec, rel=1e-12)

    def test_single_attribute_swaps_require_targets(self):
        params = tiny_params(13)
        batch = tiny_batch(seed=14)
        cfg = L.LossConfig(lambda_triplet=0.0, lambda_foot=0.0, single_attribute_swaps=True)
        with pytest.raises(DataError):
            L.total_loss(params, batch, tiny_stats(), cfg)

    def test_degenerate_pair_with_all_swaps_is_six_reconstructions(self):
        params = tiny_params(15)
        batch = tiny_batch(seed=16)
        batch.b = batch.gt_ab = batch.gt_ba = batch.a
        batch.b_in = batch.a_in = batch.gt_ab_in = batch.gt_ba_in = batch.a
        batch.single_swaps = {k: batch.a for k in ("skeleton_ab", "view_ab", "skeleton_ba", "view_ba")}
        cfg = L.LossConfig(lambda_triplet=0.0, lambda_foot=0.0, single_attribute_swaps=True)
        _, parts = L.total_loss(params, batch, tiny_stats(), cfg)
        assert parts["cross"] == pytest.approx(6.0 * parts["rec"], rel=1e-12)


class TestTripletLoss:
    def _vec(self, *vals):
        return Tensor(np.array([list(vals)], dtype=np.float64))

    def test_anchor_equals_positive(self):
        a = self._vec(0.0, 0.0)
        n = self._vec(1.0, 0.0)  # d(a,n) = 1
        assert L.triplet_loss(a, a, n).item() == 0.0

    def test_equal_distances_give_margin(self):
        a = self._vec(0.0, 0.0)
        p = self._vec(1.0, 0.0)
        n = self._vec(0.0, 1.0)
        assert L.triplet_loss(a, p, n).item() == pytest.approx(0.3, rel=1e-12)

    def test_hinge_boundary_values(self):
        a = self._vec(0.0)
        p = self._vec(0.5)
        assert L.triplet_loss(a, p, self._vec(0.9)).item() == 0.0
        assert L.triplet_loss(a, p, self._vec(0.6)).item() == pytest.approx(0.2, rel=1e-12)

    def test_shape_mismatch_raises(self):
        with pytest.raises(DataError):
            L.triplet_loss(self._vec(0.0), self._vec(0.0, 1.0), self._vec(0.0, 1.0))

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(17)
        for case in range(10):
            a = rng.standard_normal((2, 5))
            p = a + rng.standard_normal((2, 5)) * 0.5
            n = rng.standard_normal((2, 5)) * 2.0

            def build(at, pt, nt):
                return L.triplet_loss(at, pt, nt)

            assert tk.check_gradients(build, [a, p, n]) < 1e-4


class TestBuildTriplets:
    def test_identical_labels_rejected(self):
        batch = tiny_batch()
        batch.labels_b = batch.labels_a.copy()
        with pytest.raises(DataError):
            batch.validate_labels()

    def test_enumerated_expectation(self):
        batch = tiny_batch()
        mk = lambda tag: tuple(Tensor(np.full((2, 3), float(i))) for i in range(3))
        codes_a, codes_b = mk("a"), mk("b")
        codes_ab, codes_ba = mk("ab"), mk("ba")
        triplets = L.build_triplets(batch, codes_a, codes_b, codes_ab, codes_ba)
        assert [t[0] for t in triplets] == ["motion", "motion", "skeleton", "skeleton", "view", "view"]
        # motion space: anchor = cross GT carrying that motion, positive shares it
        assert triplets[0][1] is codes_ab[0] and triplets[0][2] is codes_a[0] and triplets[0][3] is codes_b[0]
        assert triplets[1][1] is codes_ba[0] and triplets[1][2] is codes_b[0] and triplets[1][3] is codes_a[0]
        # skeleton space: gt_ab carries b's skeleton
        assert triplets[2][1] is codes_ab[1] and triplets[2][2] is codes_b[1] and triplets[2][3] is codes_a[1]
        assert triplets[3][1] is codes_ba[1] and triplets[3][2] is codes_a[1] and triplets[3][3] is codes_b[1]
        # view space: gt_ab carries b's view
        assert triplets[4][1] is codes_ab[2] and triplets[4][2] is codes_b[2] and triplets[4][3] is codes_a[2]
        assert triplets[5][1] is codes_ba[2] and triplets[5][2] is codes_a[2] and triplets[5][3] is codes_b[2]


class TestFootVelocityLoss:
    def test_perfect_prediction_is_zero(self):
        rng = np.random.default_rng(18)
        x = rng.standard_normal((2, 6, 10))
        loss = L.foot_velocity_loss(Tensor(x), x, tiny_stats(), (1, 2))
        assert loss.item() == 0.0

    def test_drifting_root_closed_form(self):
        stats = NormStats(mean=np.zeros((3, 2)), std=np.ones((3, 2)), vel_std=np.ones(2))
        t = 12
        target = np.zeros((1, 6, t))
        pred = target.copy()
        delta = 0.25
        pred[0, -2, :] = delta  # constant x drift in the root velocity channels
        loss = L.foot_velocity_loss(Tensor(pred), target, stats, (1, 2))
        assert loss.item() == pytest.approx(2 * delta**2, rel=1e-12)

    def test_matches_loop_oracle_on_random_tensors(self):
        rng = np.random.default_rng(19)
        stats = tiny_stats()
        pred = rng.standard_normal((2, 6, 9))
        target = rng.standard_normal((2, 6, 9))
        loss = L.foot_velocity_loss(Tensor(pred), target, stats, (1, 2))
        assert loss.item() == pytest.approx(loop_foot(pred, target, stats, (1, 2)), rel=1e-12)

    def test_unknown_joint_rejected(self):
        with pytest.raises(DataError):
            L.foot_velocity_loss(Tensor(np.zeros((1, 6, 8))), np.zeros((1, 6, 8)), tiny_stats(), (0,))

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(20)
        stats = tiny_stats()
        for case in range(5):
            pred = rng.standard_normal((1, 6, 8))
            target = rng.standard_normal((1, 6, 8))

            def build(pt):
                return L.foot_velocity_loss(pt, target, stats, (1, 2))

            assert tk.check_gradients(build, [pred]) < 1e-4


class TestTotalLoss:
    def test_weighted_composition(self):
        params = tiny_params(21)
        batch = tiny_batch(seed=22)
        cfg = L.LossConfig(end_effector_joints=(1, 2))
        total, parts = L.total_loss(params, batch, tiny_stats(), cfg)
        expected = parts["cross_rec"] + 0.1 * parts["triplet"] + 0.5 * parts["foot"]
        assert total.item() == pytest.approx(expected, rel=1e-12)
        assert parts["total"] == pytest.approx(expected, rel=1e-12)

    def test_unit_components_compose_to_1_6(self):
        # the composition rule itself: weights 1, 0.1, 0.5
        assert 1.0 + L.LAMBDA_TRIPLET * 1.0 + L.LAMBDA_FOOT * 1.0 == pytest.approx(1.6)

    def test_all_losses_nonnegative(self):
        params = tiny_params(23)
        for seed in range(3):
            batch = tiny_batch(seed=30 + seed)
            cfg = L.LossConfig(end_effector_joints=(1, 2))
            total, parts = L.total_loss(params, batch, tiny_stats(), cfg)
            assert total.item() >= 0.0
            assert all(v >= 0.0 for v in parts.values())

    def test_rec_only_mode_skips_cross(self):
        params = tiny_params(24)
        batch = tiny_batch(seed=25)
        cfg = L.LossConfig(use_cross=False, lambda_triplet=0.0, lambda_foot=0.0)
        total, parts = L.total_loss(params, batch, tiny_stats(), cfg)
        assert parts["cross"] == 0.0
        assert total.item() == pytest.approx(parts["rec"], rel=1e-12)

    def test_total_gradient_matches_finite_differences(self):
        params = tiny_params(26)
        batch = tiny_batch(b=1, seed=27)
        stats = tiny_stats()
        cfg = L.LossConfig(end_effector_joints=(1, 2))

        def forward():
            total, _ = L.total_loss(params, batch, stats, cfg)
            return total

        params.zero_grad()
        err = tk.sampled_parameter_errors(
            forward, params.tensors, n_per_param=2, rng=np.random.default_rng(28)
        )
        assert err < 1e-4
