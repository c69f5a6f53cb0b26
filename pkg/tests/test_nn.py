import numpy as np
import pytest

from edgesched import nn
from edgesched.nn import (
    MlpSpec,
    OptimState,
    TrainingError,
    apply_update,
    backward,
    forward,
    forward_batch,
    gradient_check,
    init_params,
    load_model,
    save_model,
)


def zero_params(spec):
    params = init_params(spec)
    for w, b in zip(params.weights, params.biases):
        w[:] = 0.0
        b[:] = 0.0
    return params


class TestForward:
    def test_zero_net_zero_output(self):
        spec = MlpSpec(input_dim=3, hidden=(4,), output_dim=2, init_seed=0)
        out = forward(zero_params(spec), np.array([1.0, -2.0, 3.0]))
        assert np.all(out == 0.0)

    def test_scalar_linear_layer(self):
        spec = MlpSpec(input_dim=1, hidden=(), output_dim=1, init_seed=0)
        params = zero_params(spec)
        params.weights[0][0, 0] = 2.0
        assert forward(params, np.array([3.0])) == pytest.approx(6.0)

    def test_deterministic_given_seed(self):
        spec = MlpSpec(input_dim=5, hidden=(8, 8), output_dim=3, init_seed=42)
        x = np.linspace(-1, 1, 5)
        a = forward(init_params(spec), x)
        b = forward(init_params(spec), x)
        assert np.array_equal(a, b)

    def test_shape_mismatch_rejected(self):
        spec = MlpSpec(input_dim=4, hidden=(), output_dim=2, init_seed=0)
        with pytest.raises(ValueError):
            forward(init_params(spec), np.zeros(7))

    def test_batch_matches_single(self):
        spec = MlpSpec(input_dim=6, hidden=(10,), output_dim=4, init_seed=1)
        params = init_params(spec)
        rng = np.random.default_rng(2)
        batch = rng.normal(size=(5, 6))
        stacked = forward_batch(params, batch)
        for i in range(5):
            assert np.allclose(stacked[i], forward(params, batch[i]), atol=1e-12)

    def test_positive_scale_consistency_zero_bias(self):
        spec = MlpSpec(input_dim=4, hidden=(7, 5), output_dim=3, init_seed=3)
        params = init_params(spec)  # biases start at zero
        rng = np.random.default_rng(4)
        for _ in range(10):
            x = rng.normal(size=4)
            c = float(rng.uniform(0.1, 10.0))
            assert np.allclose(forward(params, c * x), c * forward(params, x), rtol=1e-10)


class TestBackward:
    def test_scalar_net_quadratic_loss(self):
        # y = w*x with w=2, x=3; L = y^2 so dL/dy = 2y = 12 and dL/dw = 12*3 = 36
        spec = MlpSpec(input_dim=1, hidden=(), output_dim=1, init_seed=0)
        params = zero_params(spec)
        params.weights[0][0, 0] = 2.0
        grads = backward(params, np.array([3.0]), np.array([12.0]))
        assert grads[0][0][0, 0] == pytest.approx(36.0)

    def test_zero_upstream_zero_grads(self):
        spec = MlpSpec(input_dim=3, hidden=(5,), output_dim=2, init_seed=1)
        grads = backward(init_params(spec), np.ones(3), np.zeros(2))
        for dw, db in grads:
            assert np.all(dw == 0.0) and np.all(db == 0.0)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_matches_finite_differences(self, seed):
        spec = MlpSpec(input_dim=5, hidden=(9, 6), output_dim=4, init_seed=seed)
        report = gradient_check(spec, seed=seed, tolerance=1e-4)
        assert report.passed, report

    def test_64_unit_net_within_tolerance(self):
        spec = MlpSpec(input_dim=17, hidden=(64,), output_dim=13, init_seed=5)
        report = gradient_check(spec, seed=6, tolerance=1e-4)
        assert report.passed


class TestGradientCheck:
    def test_default_spec_passes(self):
        report = gradient_check()
        assert report.passed
        assert report.max_rel_error < 1e-4

    def test_repeatable(self):
        a = gradient_check(seed=9)
        b = gradient_check(seed=9)
        assert a.max_rel_error == b.max_rel_error

    def test_corrupted_backward_fails(self):
        def corrupted(params, x, output_grad):
            grads = backward(params, x, output_grad)
            dw0, db0 = grads[0]
            dw0 = dw0.copy()
            dw0[0, 0] += 0.37
            return [(dw0, db0)] + grads[1:]

        report = gradient_check(seed=10, backward_fn=corrupted)
        assert not report.passed
        assert report.worst_param == "layer0.w[0,0]"

    def test_invalid_tolerance(self):
        with pytest.raises(ValueError):
            gradient_check(tolerance=0.0)


class TestApplyUpdate:
    def scalar_setup(self, kind, lr):
        spec = MlpSpec(input_dim=1, hidden=(), output_dim=1, init_seed=0)
        params = zero_params(spec)
        params.weights[0][0, 0] = 1.0
        return params, OptimState(kind=kind, learning_rate=lr)

    def test_sgd_step(self):
        params, optim = self.scalar_setup("sgd", 0.1)
        grads = [(np.array([[0.5]]), np.array([0.0]))]
        apply_update(params, grads, optim)
        assert params.weights[0][0, 0] == pytest.approx(0.95, abs=1e-15)
        assert optim.step_count == 1

    def test_sgd_zero_grad_fixed_point(self):
        params, optim = self.scalar_setup("sgd", 0.1)
        apply_update(params, [(np.zeros((1, 1)), np.zeros(1))], optim)
        assert params.weights[0][0, 0] == 1.0

    def test_adam_first_step_near_lr(self):
        params, optim = self.scalar_setup("adam", 1e-3)
        apply_update(params, [(np.array([[1.0]]), np.zeros(1))], optim)
        delta = 1.0 - params.weights[0][0, 0]
        assert delta == pytest.approx(1e-3, rel=1e-6)

    def test_non_finite_grads_rejected(self):
        params, optim = self.scalar_setup("sgd", 0.1)
        with pytest.raises(TrainingError):
            apply_update(params, [(np.array([[np.nan]]), np.zeros(1))], optim)

    def test_updates_stay_finite(self):
        spec = MlpSpec(input_dim=4, hidden=(8,), output_dim=3, init_seed=7)
        params = init_params(spec)
        optim = OptimState(kind="adam", learning_rate=1e-2)
        rng = np.random.default_rng(8)
        for _ in range(50):
            x = rng.normal(size=4)
            g = rng.normal(size=3)
            apply_update(params, backward(params, x, g), optim)
        for w, b in zip(params.weights, params.biases):
            assert np.all(np.isfinite(w)) and np.all(np.isfinite(b))

    def test_unknown_optimizer_rejected(self):
        with pytest.raises(ValueError):
            OptimState(kind="rmsprop")


class TestSpecValidation:
    def test_bad_dims(self):
        with pytest.raises(ValueError):
            MlpSpec(input_dim=0, hidden=(4,), output_dim=2)
        with pytest.raises(ValueError):
            MlpSpec(input_dim=2, hidden=(0,), output_dim=2)

    def test_bad_activation(self):
        with pytest.raises(ValueError):
            MlpSpec(input_dim=2, hidden=(4,), output_dim=2, activation="tanh")

    def test_init_deterministic(self):
        spec = MlpSpec(input_dim=3, hidden=(5,), output_dim=2, init_seed=77)
        a, b = init_params(spec), init_params(spec)
        for wa, wb in zip(a.weights, b.weights):
            assert np.array_equal(wa, wb)

    def test_init_he_bounds(self):
        spec = MlpSpec(input_dim=9, hidden=(16,), output_dim=4, init_seed=1)
        params = init_params(spec)
        assert np.all(np.abs(params.weights[0]) <= np.sqrt(6.0 / 9))
        assert np.all(np.abs(params.weights[1]) <= np.sqrt(6.0 / 16))
        assert np.all(params.biases[0] == 0.0)


class TestModelFile:
    def test_round_trip(self, tmp_path):
        spec = MlpSpec(input_dim=4, hidden=(6,), output_dim=3, init_seed=12)
        params = init_params(spec)
        path = tmp_path / "model.json"
        save_model(params, spec, path)
        spec2, params2, extra = load_model(path)
        assert spec2 == spec
        assert extra == {}
        for w1, w2 in zip(params.weights, params2.weights):
            assert np.array_equal(w1, w2)
        for b1, b2 in zip(params.biases, params2.biases):
            assert np.array_equal(b1, b2)

    def test_field_names(self, tmp_path):
        import json

        spec = MlpSpec(input_dim=2, hidden=(3,), output_dim=2, init_seed=0)
        path = tmp_path / "model.json"
        save_model(init_params(spec), spec, path)
        obj = json.loads(path.read_text())
        assert set(obj) == {"spec", "layers"}
        assert set(obj["spec"]) == {"input_dim", "hidden", "output_dim", "activation", "init_seed"}
        assert set(obj["layers"][0]) == {"w", "b"}

    def test_extra_block_preserved(self, tmp_path):
        spec = MlpSpec(input_dim=2, hidden=(), output_dim=2, init_seed=0)
        path = tmp_path / "model.json"
        save_model(init_params(spec), spec, path, extra={"config": {"seed": 5}})
        _, _, extra = load_model(path)
        assert extra == {"config": {"seed": 5}}

    def test_shape_mismatch_rejected(self, tmp_path):
        import json

        spec = MlpSpec(input_dim=2, hidden=(), output_dim=2, init_seed=0)
        path = tmp_path / "model.json"
        save_model(init_params(spec), spec, path)
        obj = json.loads(path.read_text())
        obj["layers"][0]["b"] = [0.0, 0.0, 0.0]
        path.write_text(json.dumps(obj))
        with pytest.raises(ValueError):
            load_model(path)
