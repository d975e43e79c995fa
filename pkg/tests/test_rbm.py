import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shapecat.descriptors import Atom, FeatureVector
from shapecat.errors import DimensionMismatch, EmptyBatch, TooLarge, ZeroUnits
from shapecat.rbm import (
    RbmHyper,
    RbmModel,
    cd1_batch_update,
    cd1_statistics,
    exact_gradient_oracle,
    hidden_probabilities,
    log_likelihood,
    log_partition,
    rbm_init,
    rbm_train,
    rbm_transform,
    visible_probabilities,
)


def zero_model(nv, nh):
    return RbmModel(np.zeros((nv, nh)), np.zeros(nv), np.zeros(nh))


def random_model(seed, nv=4, nh=3, scale=1.0):
    rng = np.random.default_rng(seed)
    return RbmModel(rng.normal(0, scale, (nv, nh)), rng.normal(0, scale, nv), rng.normal(0, scale, nh))


def random_binary_data(seed, n=8, nv=4):
    return (np.random.default_rng(seed + 1000).random((n, nv)) < 0.5).astype(float)


def central_differences(f, model, step=1e-4):
    """Central-difference gradient of ``f(model)`` for every parameter."""
    grads = []
    for arr in (model.weights, model.visible_bias, model.hidden_bias):
        g = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            old = arr[idx]
            arr[idx] = old + step
            up = f(model)
            arr[idx] = old - step
            down = f(model)
            arr[idx] = old
            g[idx] = (up - down) / (2 * step)
        grads.append(g)
    return grads


def cosine(a, b):
    return float((a * b).sum() / (np.linalg.norm(a) * np.linalg.norm(b)))


class TestInit:
    def test_deterministic(self):
        a, b = rbm_init(100, 64, 0), rbm_init(100, 64, 0)
        assert a.weights.tobytes() == b.weights.tobytes()

    def test_biases_zero(self):
        m = rbm_init(100, 64, 5)
        assert not m.visible_bias.any() and not m.hidden_bias.any()
        assert m.weights.shape == (100, 64)

    def test_weight_spread(self):
        assert 0.008 <= np.std(rbm_init(100, 64, 0).weights, ddof=1) <= 0.012

    def test_zero_units(self):
        with pytest.raises(ZeroUnits):
            rbm_init(0, 4)
        with pytest.raises(ZeroUnits):
            rbm_init(4, 0)


class TestConditionals:
    def test_zero_model(self):
        m = zero_model(5, 3)
        assert hidden_probabilities(m, np.ones(5)).tolist() == [0.5] * 3
        assert visible_probabilities(m, np.zeros(3)).tolist() == [0.5] * 5

    def test_saturating_biases(self):
        m = zero_model(2, 2)
        m.hidden_bias[1] = 10
        m.visible_bias[0] = -10
        assert hidden_probabilities(m, np.zeros(2))[1] == pytest.approx(1 / (1 + np.exp(-10)), rel=1e-12)
        assert visible_probabilities(m, np.zeros(2))[0] == pytest.approx(1 / (1 + np.exp(10)), rel=1e-12)

    def test_cancellation(self):
        m = RbmModel(np.array([[1.0], [-1.0]]), np.zeros(2), np.zeros(1))
        assert hidden_probabilities(m, np.array([1.0, 1.0])).tolist() == [0.5]

    def test_square_symmetry(self):
        w = np.array([[0.3, -1.2], [-1.2, 0.7]])
        bias = np.array([0.4, -0.1])
        m = RbmModel(w, bias.copy(), bias.copy())
        for x in ([0.0, 1.0], [0.25, 0.5], [1.0, 1.0]):
            np.testing.assert_allclose(hidden_probabilities(m, x), visible_probabilities(m, x), rtol=0, atol=0)

    @given(st.integers(0, 2**32 - 1), st.floats(0.1, 30))
    def test_open_interval(self, seed, scale):
        m = random_model(seed, 6, 4, scale)
        v = np.random.default_rng(seed).random((5, 6))
        p = hidden_probabilities(m, v)
        # strict bounds hold while the activation stays inside float resolution
        act = v @ m.weights + m.hidden_bias
        mild = np.abs(act) < 30
        assert ((p[mild] > 0) & (p[mild] < 1)).all()
        assert ((p >= 0) & (p <= 1)).all()

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            hidden_probabilities(zero_model(3, 2), np.ones(4))
        with pytest.raises(DimensionMismatch):
            visible_probabilities(zero_model(3, 2), np.ones(3))


class TestUpdate:
    def test_zero_rate_unchanged(self):
        m = random_model(1)
        out = cd1_batch_update(m, random_binary_data(1), 0.0, np.random.default_rng(0))
        np.testing.assert_array_equal(out.weights, m.weights)
        np.testing.assert_array_equal(out.visible_bias, m.visible_bias)
        np.testing.assert_array_equal(out.hidden_bias, m.hidden_bias)

    def test_saturated_model_barely_moves(self):
        # visible biases force the reconstruction to equal v = (1, 0)
        m = RbmModel(np.zeros((2, 2)), np.array([30.0, -30.0]), np.array([0.2, -0.4]))
        v = np.array([[1.0, 0.0]])
        out = cd1_batch_update(m, v, 0.1, np.random.default_rng(0))
        assert np.abs(out.weights - m.weights).max() < 1e-3

    @settings(max_examples=50)
    @given(st.integers(0, 2**32 - 1), st.floats(0.001, 1.0))
    def test_weight_step_bound(self, seed, lr):
        m = random_model(seed, 5, 4, 2.0)
        batch = np.random.default_rng(seed).random((7, 5))
        out = cd1_batch_update(m, batch, lr, np.random.default_rng(seed))
        assert np.abs(out.weights - m.weights).max() <= lr * (1 + 1e-12)

    def test_empty_batch(self):
        with pytest.raises(EmptyBatch):
            cd1_batch_update(zero_model(3, 2), np.zeros((0, 3)), 0.1, np.random.default_rng(0))

    def test_input_not_mutated(self):
        m = random_model(2)
        before = m.copy()
        cd1_batch_update(m, random_binary_data(2), 0.5, np.random.default_rng(0))
        np.testing.assert_array_equal(m.weights, before.weights)


class TestTrain:
    def test_zero_epochs_is_init(self):
        data = np.random.default_rng(0).random((30, 6))
        m, trace = rbm_train(data, 4, RbmHyper(epochs=0, seed=3))
        ref = rbm_init(6, 4, 3)
        np.testing.assert_array_equal(m.weights, ref.weights)
        assert trace.per_epoch_reconstruction_error == []

    def test_deterministic(self):
        data = np.random.default_rng(1).random((120, 10))
        a, ta = rbm_train(data, 8, RbmHyper(epochs=5, seed=4))
        b, tb = rbm_train(data, 8, RbmHyper(epochs=5, seed=4))
        assert a.weights.tobytes() == b.weights.tobytes()
        assert a.hidden_bias.tobytes() == b.hidden_bias.tobytes()
        assert ta.per_epoch_reconstruction_error == tb.per_epoch_reconstruction_error

    def test_repeated_vector_reconstruction_improves(self):
        vec = (np.random.default_rng(2).random(20) < 0.4).astype(float)
        _, trace = rbm_train(np.tile(vec, (200, 1)), 8, RbmHyper(seed=0))
        errs = trace.per_epoch_reconstruction_error
        assert len(errs) == 100 and min(errs) >= 0
        assert errs[-1] < errs[0]

    def test_short_last_batch(self):
        data = np.random.default_rng(3).random((73, 4))
        m, trace = rbm_train(data, 3, RbmHyper(batch_size=50, epochs=2))
        assert len(trace.per_epoch_reconstruction_error) == 2
        assert np.isfinite(m.weights).all()

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            rbm_train(np.array([[0.5, 1.5]]), 2)


class TestTransform:
    def test_zero_model(self):
        out = rbm_transform(zero_model(4, 6), FeatureVector(Atom.V, [0.1, 0.2, 0.3, 0.4]))
        assert out.tolist() == [0.5] * 6

    def test_preserves_count_and_order(self):
        m = random_model(7, 4, 3)
        vectors = [FeatureVector(Atom.V, row) for row in np.random.default_rng(7).random((9, 4))]
        out = rbm_transform(m, vectors)
        assert out.shape == (9, 3)
        for row, fv in zip(out, vectors):
            # matrix and vector products may differ in the last bit
            np.testing.assert_allclose(row, rbm_transform(m, fv), rtol=1e-14)

    def test_mismatch(self):
        with pytest.raises(DimensionMismatch):
            rbm_transform(zero_model(4, 2), np.ones((3, 5)))


class TestOracle:
    def test_uniform_data_zero_gradient(self):
        data = np.array(list(itertools.product((0.0, 1.0), repeat=3)))
        for g in exact_gradient_oracle(zero_model(3, 2), data):
            np.testing.assert_allclose(g, 0.0, atol=1e-15)

    def test_single_vector_visible_bias(self):
        _, dvb, _ = exact_gradient_oracle(zero_model(2, 1), [[1.0, 1.0]])
        np.testing.assert_allclose(dvb, [0.5, 0.5], atol=1e-15)

    def test_zero_model_log_partition(self):
        # every joint state has energy 0
        assert log_partition(zero_model(3, 2)) == pytest.approx(5 * np.log(2), rel=1e-15)

    @pytest.mark.parametrize("seed", range(3))
    def test_partition_term_matches_finite_differences(self, seed):
        m = random_model(seed)
        data = random_binary_data(seed)
        ow, ovb, ohb = exact_gradient_oracle(m, data)
        ph = hidden_probabilities(m, data)
        # the oracle is data term minus d(log Z); recover the latter
        model_terms = (data.T @ ph / len(data) - ow, data.mean(axis=0) - ovb, ph.mean(axis=0) - ohb)
        for fd, exact in zip(central_differences(log_partition, m), model_terms):
            np.testing.assert_allclose(fd, exact, rtol=1e-6, atol=1e-9)

    @pytest.mark.parametrize("seed", range(3))
    def test_matches_log_likelihood_finite_differences(self, seed):
        m = random_model(seed)
        data = random_binary_data(seed)
        exact = exact_gradient_oracle(m, data)
        fd = central_differences(lambda mm: log_likelihood(mm, data), m)
        for a, b in zip(fd, exact):
            np.testing.assert_allclose(a, b, rtol=1e-6, atol=1e-9)

    def test_cd1_expected_update_agrees(self):
        # 10,000 hidden samplings per model: 8 data rows tiled 1,250 times
        for seed in range(20):
            m = random_model(seed)
            data = random_binary_data(seed)
            exact_w, _, _ = exact_gradient_oracle(m, data)
            dw, _, _, _ = cd1_statistics(m, np.tile(data, (1250, 1)), np.random.default_rng(seed))
            assert cosine(dw, exact_w) > 0.5, seed

    def test_too_large(self):
        with pytest.raises(TooLarge):
            exact_gradient_oracle(zero_model(15, 6), np.zeros((1, 15)))
        with pytest.raises(TooLarge):
            log_partition(zero_model(11, 10))

    def test_requires_binary(self):
        with pytest.raises(ValueError):
            exact_gradient_oracle(zero_model(2, 1), [[0.5, 1.0]])


def test_json_round_trip():
    m, _ = rbm_train(np.random.default_rng(0).random((20, 5)), 3, RbmHyper(epochs=2, seed=9))
    back = RbmModel.from_json(m.to_json())
    assert back.weights.tobytes() == m.weights.tobytes()
    assert back.visible_bias.tobytes() == m.visible_bias.tobytes()
    assert back.hidden_bias.tobytes() == m.hidden_bias.tobytes()
    assert back.hyper == m.hyper
