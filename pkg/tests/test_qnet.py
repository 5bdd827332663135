import numpy as np
import pytest

from uavswarm.qnet import (
    LEAKY_SLOPE,
    Adam,
    QNetwork,
    Sgd,
    load_checkpoint,
    save_checkpoint,
)


def random_net(seed=0):
    return QNetwork.init_random(np.random.default_rng(seed))


def random_batch(seed, m):
    rng = np.random.default_rng(seed)
    s = rng.random((m, 22))
    a = rng.integers(0, 5, size=m)
    y = rng.normal(0, 5, size=m)
    return s, a, y


class TestForward:
    def test_zero_network_outputs_zero(self):
        net = QNetwork.zeros()
        s = np.random.default_rng(1).random(22)
        assert np.array_equal(net.forward(s), np.zeros(5))

    def test_hand_computed_single_path(self):
        net = QNetwork.zeros()
        net.w1[0, 0] = 1.0
        net.w2[0, 0] = 1.0
        net.w3[3, 0] = 2.0
        s = np.zeros(22)
        s[0] = 0.5
        q = net.forward(s)
        assert q[3] == pytest.approx(2.0 * 0.5, abs=1e-15)
        assert np.all(q[[0, 1, 2, 4]] == 0.0)
        # negative input runs through the leaky slope twice
        s[0] = -0.5
        q = net.forward(s)
        assert q[3] == pytest.approx(2.0 * LEAKY_SLOPE * LEAKY_SLOPE * -0.5, abs=1e-18)

    def test_output_layer_homogeneity(self):
        net = random_net()
        s = np.random.default_rng(2).random(22)
        base = net.forward(s)
        net.w3 *= 3.0
        net.b3 *= 3.0
        np.testing.assert_allclose(net.forward(s), 3.0 * base, rtol=1e-12)

    def test_shape_validation(self):
        net = random_net()
        with pytest.raises(ValueError):
            net.forward(np.zeros(21))


class TestBackward:
    def test_zero_gradient_at_minimum(self):
        net = random_net()
        s, a, _ = random_batch(3, 16)
        q = net.forward_batch(s)
        targets = q[np.arange(16), a]
        loss, grad = net.loss_and_grad(s, a, targets)
        assert loss == 0.0
        assert np.array_equal(grad, np.zeros(net.n_params))

    @pytest.mark.parametrize("m", [1, 7, 64])
    def test_matches_central_finite_differences(self, m):
        net = random_net(seed=m)
        s, a, y = random_batch(m, m)
        _, grad = net.loss_and_grad(s, a, y)
        params = net.to_flat()
        h = 1e-5
        probe = QNetwork.zeros()
        rng = np.random.default_rng(m + 100)
        # spot-check a random subset of coordinates plus every bias block
        idx = sorted(set(rng.integers(0, net.n_params, size=120).tolist()) | {0, net.n_params - 1})
        for i in idx:
            shifted = params.copy()
            shifted[i] = params[i] + h
            probe.from_flat(shifted)
            lo_plus, _dummy = _loss_only(probe, s, a, y)
            shifted[i] = params[i] - h
            probe.from_flat(shifted)
            lo_minus, _dummy = _loss_only(probe, s, a, y)
            numeric = (lo_plus - lo_minus) / (2 * h)
            denom = max(abs(numeric), abs(grad[i]), 1e-8)
            assert abs(numeric - grad[i]) / denom <= 1e-4

    def test_gradient_linear_in_residual(self):
        net = random_net(seed=9)
        s, a, _ = random_batch(10, 8)
        q = net.forward_batch(s)[np.arange(8), a]
        y1 = q - 1.5
        y2 = q - 3.0  # doubled residuals
        _, g1 = net.loss_and_grad(s, a, y1)
        _, g2 = net.loss_and_grad(s, a, y2)
        np.testing.assert_array_equal(g2, 2.0 * g1)

    def test_rejects_non_finite(self):
        net = random_net()
        s, a, y = random_batch(4, 4)
        s[0, 0] = np.nan
        with pytest.raises(FloatingPointError):
            net.loss_and_grad(s, a, y)

    def test_rejects_empty_batch(self):
        net = random_net()
        with pytest.raises(ValueError):
            net.loss_and_grad(np.zeros((0, 22)), np.zeros(0, dtype=int), np.zeros(0))


def _loss_only(net, s, a, y):
    q = net.forward_batch(s)[np.arange(len(a)), a]
    return float(np.mean((q - y) ** 2)), None


class TestOptimizers:
    def test_sgd_step(self):
        params = np.array([1.0, 2.0])
        out = Sgd(0.1).step(params, np.array([10.0, -10.0]))
        np.testing.assert_allclose(out, [0.0, 3.0])

    def test_adam_moves_against_gradient(self):
        adam = Adam(3, lr=0.01)
        params = np.zeros(3)
        grad = np.array([1.0, -1.0, 0.0])
        for _ in range(10):
            params = adam.step(params, grad)
        assert params[0] < 0 < params[1]
        assert params[2] == 0.0

    def test_adam_bias_correction_first_step(self):
        adam = Adam(1, lr=0.5)
        out = adam.step(np.zeros(1), np.array([4.0]))
        # first corrected step has magnitude ~lr regardless of gradient scale
        assert out[0] == pytest.approx(-0.5, rel=1e-6)


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        net = random_net(seed=5)
        path = tmp_path / "q.ckpt"
        save_checkpoint(net, path)
        loaded = load_checkpoint(path)
        np.testing.assert_array_equal(loaded.to_flat(), net.to_flat())

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.ckpt"
        path.write_bytes(b"NOTACKPT" + b"\x00" * 100)
        with pytest.raises(ValueError, match="magic"):
            load_checkpoint(path)

    def test_truncated_params(self, tmp_path):
        net = random_net()
        path = tmp_path / "q.ckpt"
        save_checkpoint(net, path)
        data = path.read_bytes()
        path.write_bytes(data[:-8])
        with pytest.raises(ValueError, match="size"):
            load_checkpoint(path)

    def test_parameter_count(self):
        assert random_net().n_params == 22 * 24 + 24 + 24 * 16 + 16 + 16 * 5 + 5
