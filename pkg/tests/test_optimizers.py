import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from cohesion_algos.errors import ConfigurationError, DimensionError
from cohesion_algos.modules import Parameter
from cohesion_algos.optimizers import (
    SGD,
    Adam,
    AdamState,
    DecaySchedule,
    OptimizerConfig,
    adam_step,
    build_optimizer,
    sgd_step,
)


class TestSGDStep:
    def test_hand_iteration(self):
        p, v = [np.array([1.0])], [np.array([0.0])]
        p, v = sgd_step(p, [np.array([1.0])], v, lr=0.1, momentum=0.9)
        assert_allclose(p[0], [0.9])
        assert_allclose(v[0], [1.0])
        p, v = sgd_step(p, [np.array([1.0])], v, lr=0.1, momentum=0.9)
        assert_allclose(v[0], [1.9])
        assert_allclose(p[0], [0.71])

    def test_without_momentum(self, rng):
        p, g = rng.normal(size=4), rng.normal(size=4)
        new, _ = sgd_step([p], [g], [np.zeros(4)], lr=0.05, momentum=0.0)
        assert_allclose(new[0], p - 0.05 * g)

    def test_zero_gradient_decays_velocity(self):
        p, v = [np.array([2.0])], [np.array([1.0])]
        p, v = sgd_step(p, [np.zeros(1)], v, lr=0.0, momentum=0.5)
        p, v = sgd_step(p, [np.zeros(1)], v, lr=0.0, momentum=0.5)
        assert_allclose(p[0], [2.0])
        assert_allclose(v[0], [0.25])

    def test_inputs_untouched(self):
        p, g, v = np.ones(3), np.ones(3), np.zeros(3)
        sgd_step([p], [g], [v], lr=0.1, momentum=0.9)
        assert_array_equal(p, 1.0)
        assert_array_equal(v, 0.0)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            sgd_step([np.ones(3)], [np.ones(2)], [np.zeros(3)], lr=0.1, momentum=0.9)


class TestAdamStep:
    def test_first_step_magnitude(self):
        p = [np.array([0.5, -0.5])]
        new, state = adam_step(p, [np.array([1.0, -1.0])], AdamState.zeros_like(p), lr=0.001)
        assert_allclose(p[0] - new[0], [0.001, -0.001], rtol=1e-6)
        assert state.t == 1

    def test_zero_gradient_is_fixed_point(self, rng):
        p = [rng.normal(size=5)]
        new, _ = adam_step(p, [np.zeros(5)], AdamState.zeros_like(p), lr=0.001)
        assert_array_equal(new[0], p[0])

    def test_decay_applies_per_epoch(self):
        p = [np.array([0.0])]
        decay = DecaySchedule(amount=0.5, every=10)
        early, _ = adam_step(p, [np.ones(1)], AdamState.zeros_like(p), 0.001, epoch=1, decay=decay)
        late, _ = adam_step(p, [np.ones(1)], AdamState.zeros_like(p), 0.001, epoch=11, decay=decay)
        assert_allclose(-early[0], [0.001], rtol=1e-6)
        assert_allclose(-late[0], [0.0005], rtol=1e-6)


class TestDecaySchedule:
    def test_subtractive(self):
        schedule = DecaySchedule(amount=0.001, every=10)
        assert schedule.lr_at(0.01, 1) == pytest.approx(0.01)
        assert schedule.lr_at(0.01, 10) == pytest.approx(0.01)
        assert schedule.lr_at(0.01, 11) == pytest.approx(0.00999)
        assert schedule.lr_at(0.01, 31) == pytest.approx(0.00997)

    def test_adam_defaults_after_ten_epochs(self):
        schedule = DecaySchedule(amount=0.001, every=10)
        assert schedule.lr_at(0.001, 10) == pytest.approx(0.001)
        assert schedule.lr_at(0.001, 11) == pytest.approx(0.000999)
        assert schedule.lr_at(0.001, 11) > 0.0009

    def test_subtractive_floor(self):
        schedule = DecaySchedule(amount=0.5, every=10)
        assert schedule.lr_at(0.01, 11) == pytest.approx(0.005)
        assert schedule.lr_at(0.01, 21) == pytest.approx(0.001)
        assert schedule.lr_at(0.01, 51) == pytest.approx(0.001)

    def test_inverse_time(self):
        schedule = DecaySchedule(amount=0.5, every=5, rule="inverse-time")
        assert schedule.lr_at(0.1, 11) == pytest.approx(0.05)

    @pytest.mark.parametrize(
        "kwargs", [{"amount": -1.0}, {"every": 0}, {"rule": "cosine"}, {"floor_fraction": 2.0}]
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigurationError):
            DecaySchedule(**kwargs)


class TestOptimizerConfig:
    def test_zero_learning_rate_allowed(self):
        assert OptimizerConfig(lr=0.0).lr == 0.0

    def test_alias(self):
        assert OptimizerConfig(kind="sgd-momentum").kind == "sgd"

    def test_decay_from_dict(self):
        config = OptimizerConfig(kind="adam", decay={"amount": 0.001, "every": 10})
        assert config.decay == DecaySchedule(0.001, 10)

    @pytest.mark.parametrize(
        "kwargs", [{"kind": "rmsprop"}, {"lr": -0.1}, {"momentum": 1.0}, {"betas": (0.9, 1.0)}]
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigurationError):
            OptimizerConfig(**kwargs)


class TestOptimizer:
    def test_build(self):
        params = [Parameter(np.zeros(2))]
        assert isinstance(build_optimizer(params, OptimizerConfig(kind="sgd")), SGD)
        assert isinstance(build_optimizer(params, OptimizerConfig(kind="adam")), Adam)

    def test_sgd_updates_in_place(self):
        param = Parameter(np.array([1.0]))
        optimizer = build_optimizer([param], OptimizerConfig(lr=0.1, momentum=0.9))
        for expected in (0.9, 0.71):
            optimizer.zero_grad()
            param.grad = np.array([1.0])
            optimizer.step()
            assert_allclose(param.data, [expected])

    def test_missing_gradient_counts_as_zero(self):
        param = Parameter(np.array([1.0]))
        optimizer = build_optimizer([param], OptimizerConfig(lr=0.1))
        optimizer.step()
        assert_allclose(param.data, [1.0])

    def test_epoch_drives_learning_rate(self):
        config = OptimizerConfig(lr=0.01, decay=DecaySchedule(0.001, 10))
        optimizer = build_optimizer([Parameter(np.zeros(1))], config)
        optimizer.set_epoch(21)
        assert optimizer.lr == pytest.approx(0.01 * 0.998)

    @pytest.mark.parametrize("kind", ["sgd", "adam"])
    def test_state_round_trip(self, kind):
        param = Parameter(np.array([1.0, 2.0]))
        optimizer = build_optimizer([param], OptimizerConfig(kind=kind, lr=0.1))
        param.grad = np.array([0.5, -0.5])
        optimizer.step()
        meta, tensors = optimizer.state_dict()

        other_param = Parameter(param.data.copy())
        other = build_optimizer([other_param], OptimizerConfig(kind=kind, lr=0.1))
        other.load_state_dict(meta, tensors)
        for p, o in ((param, optimizer), (other_param, other)):
            p.grad = np.array([0.25, 0.25])
            o.step()
        assert_array_equal(param.data, other_param.data)
