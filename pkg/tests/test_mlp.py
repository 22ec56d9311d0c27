import math

import numpy as np
import pytest

from fewshot_intent import mlp
from fewshot_intent.errors import DivergenceError, FsiError, UsageError
from fewshot_intent.fixtures import class_means, noise_sigma


def blob_data(classes, dim, per_class, seed=0, separation=10.0, dtype=np.float32):
    rng = np.random.default_rng(seed)
    means = class_means(classes, dim, separation)
    y = np.repeat(np.arange(classes), per_class)
    x = (means[y] + noise_sigma(dim) * rng.standard_normal((y.size, dim))).astype(dtype)
    return x, y.astype(np.int64)


def zero_model(input_dim, num_classes, **kwargs):
    config = mlp.MlpConfig(hidden_layers=0, dropout_rate=0.0, **kwargs)
    model = mlp.init_model(input_dim, num_classes, config)
    model.weights[0][:] = 0.0
    return model


class TestConfig:
    def test_defaults_are_pivot(self):
        config = mlp.MlpConfig()
        assert config.hidden_layers == 1
        assert config.hidden_dim == 512
        assert config.dropout_rate == 0.75
        assert config.optimizer == "sgd"
        assert config.lr0 == 0.7
        assert config.iterations == 500

    def test_adam_default_lr(self):
        assert mlp.MlpConfig(optimizer="adam").lr0 == 4e-4

    def test_explicit_lr_wins(self):
        assert mlp.MlpConfig(initial_lr=0.123).lr0 == 0.123

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"hidden_layers": 3},
            {"hidden_layers": -1},
            {"hidden_dim": 0},
            {"dropout_rate": 1.0},
            {"dropout_rate": -0.1},
            {"optimizer": "rmsprop"},
            {"iterations": -1},
            {"initial_lr": 0.0},
        ],
    )
    def test_invalid_configs(self, kwargs):
        with pytest.raises(UsageError):
            mlp.MlpConfig(**kwargs)

    def test_dict_round_trip(self):
        config = mlp.MlpConfig(hidden_dim=128, optimizer="adam", seed=9)
        assert mlp.MlpConfig.from_dict(config.to_dict()) == config


class TestInit:
    def test_pivot_shapes(self):
        model = mlp.init_model(1024, 77, mlp.MlpConfig())
        assert [w.shape for w in model.weights] == [(1024, 512), (512, 77)]
        assert [b.shape for b in model.biases] == [(512,), (77,)]
        assert all(b.dtype == np.float32 for b in model.biases)

    def test_h0_is_softmax_regression(self):
        model = mlp.init_model(512, 150, mlp.MlpConfig(hidden_layers=0))
        assert [w.shape for w in model.weights] == [(512, 150)]

    def test_h2_chain(self):
        model = mlp.init_model(64, 5, mlp.MlpConfig(hidden_layers=2, hidden_dim=32))
        assert [w.shape for w in model.weights] == [(64, 32), (32, 32), (32, 5)]

    def test_same_seed_identical(self):
        a = mlp.init_model(20, 4, mlp.MlpConfig(seed=7))
        b = mlp.init_model(20, 4, mlp.MlpConfig(seed=7))
        for wa, wb in zip(a.weights, b.weights):
            assert np.array_equal(wa, wb)

    def test_different_seed_differs(self):
        a = mlp.init_model(20, 4, mlp.MlpConfig(seed=7))
        b = mlp.init_model(20, 4, mlp.MlpConfig(seed=8))
        assert not np.array_equal(a.weights[0], b.weights[0])

    def test_zero_biases_and_he_range(self):
        model = mlp.init_model(100, 10, mlp.MlpConfig(seed=0))
        assert not model.biases[0].any()
        limit = math.sqrt(6.0 / 100)
        assert np.abs(model.weights[0]).max() <= limit

    def test_bad_dims(self):
        with pytest.raises(UsageError):
            mlp.init_model(0, 5, mlp.MlpConfig())
        with pytest.raises(UsageError):
            mlp.init_model(5, 1, mlp.MlpConfig())


class TestForward:
    def test_rows_sum_to_one(self, backend_name):
        rng = np.random.default_rng(1)
        model = mlp.init_model(12, 9, mlp.MlpConfig(hidden_dim=16, seed=2))
        x = rng.standard_normal((50, 12)).astype(np.float32)
        probs = mlp.forward(model, x)
        assert np.all(np.abs(probs.sum(axis=1) - 1.0) <= 1e-6)
        assert np.all(probs > 0) and np.all(probs < 1)

    def test_equal_logits_give_uniform(self, backend_name):
        model = zero_model(4, 3, seed=0)
        probs = mlp.forward(model, np.ones((2, 4), dtype=np.float32))
        assert np.allclose(probs, 1.0 / 3.0, atol=1e-7)

    def test_r0_train_equals_eval_bitwise(self, backend_name):
        config = mlp.MlpConfig(dropout_rate=0.0, hidden_dim=32, seed=3)
        model = mlp.init_model(10, 5, config)
        rng = np.random.default_rng(0)
        x = rng.standard_normal((20, 10)).astype(np.float32)
        train_probs = mlp.forward(model, x, mode="train", rng=np.random.default_rng(1))
        eval_probs = mlp.forward(model, x, mode="eval")
        assert np.array_equal(train_probs, eval_probs)

    def test_eval_is_rng_independent(self):
        model = mlp.init_model(8, 4, mlp.MlpConfig(hidden_dim=16, seed=1))
        x = np.random.default_rng(2).standard_normal((6, 8)).astype(np.float32)
        a = mlp.forward(model, x, mode="eval", rng=np.random.default_rng(10))
        b = mlp.forward(model, x, mode="eval", rng=np.random.default_rng(99))
        assert np.array_equal(a, b)

    def test_train_mode_dropout_changes_output(self):
        model = mlp.init_model(8, 4, mlp.MlpConfig(hidden_dim=16, seed=1))
        x = np.random.default_rng(2).standard_normal((6, 8)).astype(np.float32)
        t = mlp.forward(model, x, mode="train", rng=np.random.default_rng(0))
        e = mlp.forward(model, x, mode="eval")
        assert not np.array_equal(t, e)

    def test_train_mode_needs_rng(self):
        model = mlp.init_model(8, 4, mlp.MlpConfig(seed=1))
        x = np.zeros((2, 8), dtype=np.float32)
        with pytest.raises(UsageError, match="rng"):
            mlp.forward(model, x, mode="train")

    def test_dimension_mismatch(self):
        model = mlp.init_model(8, 4, mlp.MlpConfig(seed=1))
        with pytest.raises(FsiError, match="shape"):
            mlp.forward(model, np.zeros((2, 9), dtype=np.float32))

    def test_bad_mode(self):
        model = mlp.init_model(8, 4, mlp.MlpConfig(seed=1))
        with pytest.raises(UsageError, match="mode"):
            mlp.forward(model, np.zeros((2, 8), dtype=np.float32), mode="test")


class TestLoss:
    def test_uniform_over_77(self):
        probs = np.full((5, 77), 1.0 / 77.0, dtype=np.float32)
        assert math.isclose(mlp.loss(probs, np.zeros(5, dtype=int)), math.log(77), abs_tol=1e-5)

    def test_label_out_of_range(self):
        probs = np.full((2, 3), 1 / 3, dtype=np.float32)
        with pytest.raises(FsiError):
            mlp.loss(probs, np.array([0, 3]))


class TestSchedule:
    def test_sgd_pivot_start(self):
        assert mlp.lr_schedule(mlp.MlpConfig(), 0) == 0.7

    def test_midpoint(self):
        assert math.isclose(mlp.lr_schedule(mlp.MlpConfig(), 250), 0.35)

    def test_adam_start(self):
        assert mlp.lr_schedule(mlp.MlpConfig(optimizer="adam"), 0) == 4e-4

    def test_endpoint_is_lr0_over_t(self):
        config = mlp.MlpConfig(iterations=500)
        assert math.isclose(mlp.lr_schedule(config, 499), 0.7 / 500)

    def test_strictly_decreasing(self):
        config = mlp.MlpConfig(iterations=50)
        lrs = [mlp.lr_schedule(config, t) for t in range(50)]
        assert all(a > b for a, b in zip(lrs, lrs[1:]))

    def test_out_of_range(self):
        with pytest.raises(UsageError):
            mlp.lr_schedule(mlp.MlpConfig(iterations=10), 10)
        with pytest.raises(UsageError):
            mlp.lr_schedule(mlp.MlpConfig(iterations=10), -1)


class TestTrain:
    def test_t0_returns_initial_model(self, backend_name):
        config = mlp.MlpConfig(iterations=0, seed=4, hidden_dim=16)
        model = mlp.init_model(6, 3, config)
        x, y = blob_data(3, 6, 4)
        trained, history = mlp.train(model, x, y, config)
        assert len(history) == 0
        for a, b in zip(model.weights, trained.weights):
            assert np.array_equal(a, b)

    def test_input_model_not_mutated(self, backend_name):
        config = mlp.MlpConfig(iterations=5, seed=4, hidden_dim=16)
        model = mlp.init_model(6, 3, config)
        before = [w.copy() for w in model.weights]
        mlp.train(model, *blob_data(3, 6, 4), config)
        for w, b in zip(model.weights, before):
            assert np.array_equal(w, b)

    def test_bit_identical_reruns(self, backend_name):
        config = mlp.MlpConfig(iterations=25, seed=11, hidden_dim=32)
        x, y = blob_data(4, 10, 6)
        run = lambda: mlp.train(mlp.init_model(10, 4, config), x, y, config)[0]
        a, b = run(), run()
        for wa, wb in zip(a.weights, b.weights):
            assert np.array_equal(wa, wb)
        for ba, bb in zip(a.biases, b.biases):
            assert np.array_equal(ba, bb)

    def test_history_matches_schedule_exactly(self, backend_name):
        config = mlp.MlpConfig(iterations=12, seed=0, hidden_dim=16)
        x, y = blob_data(3, 6, 4)
        _, history = mlp.train(mlp.init_model(6, 3, config), x, y, config)
        assert len(history) == 12
        assert list(history.lrs) == [mlp.lr_schedule(config, t) for t in range(12)]
        assert all(l >= 0 for l in history.losses)

    def test_separable_blobs_reach_full_train_accuracy(self, backend_name):
        # 20 classes stand in for the 77-class variant exercised in acceptance
        config = mlp.MlpConfig(iterations=120, seed=1, hidden_dim=64)
        x, y = blob_data(20, 64, 10, seed=5)
        model, history = mlp.train(mlp.init_model(64, 20, config), x, y, config)
        assert mlp.evaluate(model, x, y) == 1.0
        assert history.losses[-1] < history.losses[0]

    def test_adam_converges_on_blobs(self, backend_name):
        # adam's decayed-lr step budget needs the full 500 iterations here
        config = mlp.MlpConfig(optimizer="adam", iterations=500, seed=1, hidden_dim=64)
        x, y = blob_data(10, 32, 8, seed=6)
        model, _ = mlp.train(mlp.init_model(32, 10, config), x, y, config)
        assert mlp.evaluate(model, x, y) == 1.0

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_divergence_reports_iteration(self, backend_name):
        config = mlp.MlpConfig(initial_lr=1e30, iterations=10, seed=0, hidden_dim=16)
        x, y = blob_data(3, 6, 4)
        with pytest.raises(DivergenceError) as excinfo:
            mlp.train(mlp.init_model(6, 3, config), x, y, config)
        assert excinfo.value.iteration >= 0
        assert "iteration" in str(excinfo.value)

    def test_shape_mismatch(self):
        config = mlp.MlpConfig(iterations=1, seed=0)
        model = mlp.init_model(6, 3, config)
        with pytest.raises(FsiError):
            mlp.train(model, np.zeros((4, 6), dtype=np.float32), np.zeros(5, dtype=int), config)

    def test_label_permutation_equivariance(self):
        # float64 keeps reordered-summation drift far below any decision margin
        classes, dim = 6, 12
        config = mlp.MlpConfig(iterations=50, seed=3, hidden_dim=16)
        x, y = blob_data(classes, dim, 6, seed=7, separation=4.0, dtype=np.float64)
        x_test, y_test = blob_data(classes, dim, 4, seed=8, separation=4.0, dtype=np.float64)

        perm = np.array([2, 0, 5, 1, 4, 3])  # original class c trains as class perm[c]
        inv = np.argsort(perm)
        base = mlp.init_model(dim, classes, config, dtype=np.float64)
        permuted = base.copy()
        # permute output columns so the permuted model starts equivalent to base
        permuted.weights[-1] = base.weights[-1][:, inv].copy()
        permuted.biases[-1] = base.biases[-1][inv].copy()

        model_a, _ = mlp.train(base, x, y, config)
        model_b, _ = mlp.train(permuted, x, perm[y], config)

        preds_b = inv[mlp.predict(model_b, x_test)]  # back to original label ids
        acc_a = mlp.evaluate(model_a, x_test, y_test)
        acc_b = float(np.mean(preds_b == y_test))
        assert acc_a == acc_b


class TestPredictEvaluate:
    def test_perfect_predictions(self):
        config = mlp.MlpConfig(iterations=120, seed=1, hidden_dim=32)
        x, y = blob_data(5, 16, 8)
        model, _ = mlp.train(mlp.init_model(16, 5, config), x, y, config)
        assert mlp.evaluate(model, x, y) == 1.0

    def test_tie_breaks_to_lowest_id(self):
        model = zero_model(4, 3, seed=0)
        preds = mlp.predict(model, np.ones((3, 4), dtype=np.float32))
        assert preds.tolist() == [0, 0, 0]

    def test_two_class_logits(self):
        # H=0 model with hand-set weights: logits are [0.1, 0.9] for x=[1]
        model = zero_model(1, 2, seed=0)
        model.weights[0][0, 0] = 0.1
        model.weights[0][0, 1] = 0.9
        preds = mlp.predict(model, np.ones((1, 1), dtype=np.float32))
        assert preds.tolist() == [1]


class TestCheckpoint:
    def test_round_trip_exact(self, tmp_path):
        config = mlp.MlpConfig(hidden_dim=24, seed=5, optimizer="adam")
        model = mlp.init_model(10, 4, config)
        path = tmp_path / "m.ckpt"
        mlp.save_model(model, path)
        loaded = mlp.load_model(path)
        assert loaded.config == config
        assert loaded.input_dim == 10 and loaded.num_classes == 4
        for a, b in zip(model.parameters(), loaded.parameters()):
            assert np.array_equal(a, b)
        # save(load(x)) is byte-identical
        path2 = tmp_path / "m2.ckpt"
        mlp.save_model(loaded, path2)
        assert path.read_bytes() == path2.read_bytes()

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.ckpt"
        path.write_bytes(b"JUNKJUNKJUNK")
        with pytest.raises(FsiError, match="not a model checkpoint"):
            mlp.load_model(path)

    def test_truncated(self, tmp_path):
        config = mlp.MlpConfig(hidden_dim=8, seed=5)
        model = mlp.init_model(4, 3, config)
        path = tmp_path / "m.ckpt"
        mlp.save_model(model, path)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(Exception):
            mlp.load_model(path)
