import numpy as np
import pytest

from gazeaug.errors import InvalidConfig, ShapeMismatch
from gazeaug.inception import (
    ENSEMBLE_SIZE,
    EnsembleModel,
    InceptionNet,
    TrainConfig,
    cross_entropy,
    fit_ensemble,
    predict_ensemble,
    softmax_probs,
    train,
)
from gazeaug.rng import RngState


def tiny_batch(seed=0, B=3, T=8):
    gen = RngState(seed).generator()
    values = gen.normal(size=(B, 4, T))
    mask = np.ones((B, T))
    mask[-1, T - 2 :] = 0.0
    values = values * mask[:, None, :]
    return values, mask


def toy_sequences(n=60, T=10, seed=1, n_classes=2):
    """Linearly separable toy data: class shifts the first channel."""
    gen = RngState(seed).generator()
    labels = gen.integers(0, n_classes, size=n)
    values = gen.normal(0, 0.3, size=(n, 4, T))
    values[:, 0, :] += 2.0 * labels[:, None]
    mask = np.ones((n, T))
    return values, mask, labels


class TestForward:
    def test_zero_input_finite_logits(self):
        net = InceptionNet(n_modules=1, seed_rng=RngState(1))
        logits = net.forward(np.zeros((2, 4, 6)), np.ones((2, 6)))
        assert np.all(np.isfinite(logits))
        probs = softmax_probs(logits)
        assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-9)

    def test_duplicated_row_duplicates_logits(self):
        values, mask = tiny_batch()
        net = InceptionNet(n_modules=2, residual_every=2, seed_rng=RngState(2))
        dup_vals = np.concatenate([values, values[:1]], axis=0)
        dup_mask = np.concatenate([mask, mask[:1]], axis=0)
        logits = net.forward(dup_vals, dup_mask)
        assert np.array_equal(logits[0], logits[-1])

    def test_masked_padding_leaves_logits_unchanged(self):
        values, mask = tiny_batch()
        net = InceptionNet(n_modules=3, seed_rng=RngState(3))
        base = net.forward(values, mask)
        padded_vals = np.concatenate([values, np.zeros((3, 4, 5))], axis=2)
        padded_mask = np.concatenate([mask, np.zeros((3, 5))], axis=1)
        out = net.forward(padded_vals, padded_mask)
        assert np.allclose(out, base, atol=1e-9)
        # and in training mode, where batch statistics are live
        base_t = net.forward(values, mask, training=True)
        out_t = net.forward(padded_vals, padded_mask, training=True)
        assert np.allclose(out_t, base_t, atol=1e-9)

    def test_shape_errors(self):
        net = InceptionNet(n_modules=1, seed_rng=RngState(4))
        with pytest.raises(ShapeMismatch):
            net.forward(np.zeros((2, 3, 6)), np.ones((2, 6)))
        with pytest.raises(ShapeMismatch):
            net.forward(np.zeros((2, 4, 6)), np.ones((2, 5)))
        with pytest.raises(ShapeMismatch):
            net.forward(np.zeros((2, 4, 6)), np.zeros((2, 6)))  # empty row

    def test_batch_order_invariance(self):
        values, mask = tiny_batch(B=4)
        net = InceptionNet(n_modules=1, seed_rng=RngState(5))
        out = net.forward(values, mask)
        perm = [2, 0, 3, 1]
        out_p = net.forward(values[perm], mask[perm])
        assert np.allclose(out_p, out[perm], atol=1e-12)


class TestBackward:
    def _relative_errors(self, net, values, mask, labels, per_tensor=4, h=1e-5):
        gen = RngState(99).generator()

        def loss_fn():
            return cross_entropy(net.forward(values, mask, training=True), labels)[0]

        logits = net.forward(values, mask, training=True)
        _, dlogits = cross_entropy(logits, labels)
        net.zero_grads()
        net.backward(dlogits)
        worst = {}
        for name, p, g in net.params():
            flat, gflat = p.reshape(-1), g.reshape(-1)
            idx = gen.choice(flat.size, size=min(per_tensor, flat.size), replace=False)
            errs = []
            for i in idx:
                orig = flat[i]
                flat[i] = orig + h
                fp = loss_fn()
                flat[i] = orig - h
                fm = loss_fn()
                flat[i] = orig
                fd = (fp - fm) / (2 * h)
                errs.append(abs(fd - gflat[i]) / max(abs(fd) + abs(gflat[i]), 1e-4))
            worst[name] = max(errs)
        return worst

    def test_gradients_cover_every_layer_type(self):
        # 3-module net exercises conv, batch norm, pooling branch,
        # residual projection, and the linear head
        values, mask = tiny_batch(B=2, T=8)
        values = values[:2]
        mask = mask[:2]
        labels = np.array([1, 3])
        net = InceptionNet(n_modules=3, seed_rng=RngState(6))
        worst = self._relative_errors(net, values, mask, labels)
        assert any(k.startswith("s2.proj") for k in worst)
        assert any(".bn." in k for k in worst)
        for name, err in worst.items():
            assert err < 1e-4, f"{name}: {err}"

    def test_head_bias_gradient_analytic(self):
        # zero head weights force uniform logits; the bias gradient is
        # the mean softmax-minus-onehot
        values, mask = tiny_batch(B=4)
        labels = np.array([0, 1, 2, 3])
        net = InceptionNet(n_modules=1, seed_rng=RngState(7))
        net.head.w[...] = 0.0
        net.head.b[...] = 0.0
        logits = net.forward(values, mask, training=True)
        _, dlogits = cross_entropy(logits, labels)
        net.zero_grads()
        net.backward(dlogits)
        onehot = np.eye(4)[labels]
        expected = (softmax_probs(logits) - onehot).mean(axis=0)
        assert np.allclose(net.head.gb, expected, atol=1e-12)

    def test_initial_loss_near_ln4(self):
        values, mask = tiny_batch(B=8, T=9)
        labels = np.array([0, 1, 2, 3] * 2)
        net = InceptionNet(n_modules=2, residual_every=2, seed_rng=RngState(8))
        loss, _ = cross_entropy(net.forward(values, mask, training=True), labels)
        assert abs(loss - np.log(4)) < 0.3


class TestTraining:
    def test_learns_separable_toy_data(self):
        values, mask, labels = toy_sequences()
        net = InceptionNet(n_modules=1, n_classes=2, seed_rng=RngState(9))
        trace = train(net, values, mask, labels, TrainConfig(epochs=30, seed=1), RngState(10))
        logits = net.forward(values, mask)
        acc = np.mean(np.argmax(logits, axis=1) == labels)
        assert acc == 1.0
        assert trace[-1] < trace[0]

    def test_determinism_identical_weight_bytes(self):
        values, mask, labels = toy_sequences(n=24)

        def run():
            net = InceptionNet(n_modules=1, n_classes=2, seed_rng=RngState(11))
            train(net, values, mask, labels, TrainConfig(epochs=3), RngState(12))
            return b"".join(p.tobytes() for _, p, _ in net.params())

        assert run() == run()

    def test_float32_mode_runs_and_is_deterministic(self):
        values, mask, labels = toy_sequences(n=24)

        def run():
            net = InceptionNet(n_modules=1, n_classes=2, seed_rng=RngState(13),
                               dtype=np.float32)
            train(net, values, mask, labels, TrainConfig(epochs=2), RngState(14))
            return b"".join(p.tobytes() for _, p, _ in net.params())

        assert run() == run()


class TestEnsemble:
    def test_member_count_enforced(self):
        with pytest.raises(InvalidConfig):
            EnsembleModel(members=[], config=TrainConfig(), loss_traces=[])

    def test_identical_members_equal_single_member(self):
        values, mask, labels = toy_sequences(n=16)
        net = InceptionNet(n_modules=1, n_classes=2, seed_rng=RngState(15))
        model = EnsembleModel(members=[net] * ENSEMBLE_SIZE, config=TrainConfig(),
                              loss_traces=[np.zeros(1)] * ENSEMBLE_SIZE)
        ens_labels, ens_proba = predict_ensemble(model, values, mask)
        single = softmax_probs(net.forward(values, mask))
        assert np.allclose(ens_proba, single, atol=1e-12)

    def test_mean_softmax_argmax(self):
        # members 2..5 vote class 1, member 1 votes class 0 with the
        # same confidence: the mean lands on class 1
        p0 = np.array([[1.0, 0.0, 0.0, 0.0]])
        p1 = np.array([[0.0, 1.0, 0.0, 0.0]])
        mean = (p0 + 4 * p1) / 5
        assert np.argmax(mean) == 1

    def test_fit_ensemble_distinct_members(self):
        values, mask, labels = toy_sequences(n=16)
        model = fit_ensemble(values, mask, labels, TrainConfig(epochs=1, seed=3),
                             n_modules=1, n_classes=2)
        flat = [b"".join(p.tobytes() for _, p, _ in m.params()) for m in model.members]
        assert len(set(flat)) == ENSEMBLE_SIZE
        labels_out, proba = predict_ensemble(model, values, mask)
        assert proba.shape == (16, 2)
        assert np.allclose(proba.sum(axis=1), 1.0, atol=1e-9)
