"""Attribution: plain input gradients, integrated gradients, completeness,
and the per-time-step importance summaries."""

import numpy as np
import pytest

from vrsick.attribution import (
    AGG_L2,
    AGG_MEAN_ABS,
    AttributionConfig,
    AttributionMap,
    attribute_sample,
    completeness_gap,
    integrate_gradients_path,
    integrated_gradients,
    mean_importance,
    resolve_target_class,
    standard_gradients,
    target_value,
    temporal_importance,
    with_target_class,
    write_importance_csv,
)
from vrsick.errors import ConfigError, ContractError, DataError
from vrsick.model import GATES, forward_batch, init_params


@pytest.fixture(scope="module")
def toy_model():
    """Small trained-ish model: random weights are fine for exactness and
    consistency properties."""
    return init_params(input_dim=4, hidden_size=5, class_count=3, seed=0,
                       dropout_rate=0.3)


@pytest.fixture()
def x_sample(rng):
    return rng.normal(size=(6, 4))


class TestConfig:
    def test_defaults(self):
        config = AttributionConfig()
        assert config.method == "integrated"
        assert config.target == "logit"
        assert config.target_class is None
        assert config.ig_steps == 50
        assert config.aggregation == "mean_abs"

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"method": "shapley"},
            {"target": "entropy"},
            {"target_class": -1},
            {"ig_steps": 0},
            {"aggregation": "max"},
        ],
    )
    def test_invalid_config_rejected(self, kwargs):
        with pytest.raises(ConfigError):
            AttributionConfig(**kwargs)

    def test_with_target_class(self):
        config = with_target_class(AttributionConfig(), 2)
        assert config.target_class == 2


class TestTargetResolution:
    def test_defaults_to_predicted_class(self, toy_model, x_sample):
        probs, _ = forward_batch(toy_model.without_dropout(), x_sample[np.newaxis])
        predicted = int(np.argmax(probs[0]))
        assert resolve_target_class(toy_model, x_sample, AttributionConfig()) == predicted

    def test_explicit_class_wins(self, toy_model, x_sample):
        config = AttributionConfig(target_class=1)
        assert resolve_target_class(toy_model, x_sample, config) == 1

    def test_out_of_range_class_rejected(self, toy_model, x_sample):
        with pytest.raises(ConfigError, match="target_class 7"):
            resolve_target_class(toy_model, x_sample, AttributionConfig(target_class=7))

    def test_target_value_probability_matches_forward(self, toy_model, x_sample):
        probs, _ = forward_batch(toy_model.without_dropout(), x_sample[np.newaxis])
        for c in range(3):
            assert target_value(toy_model, x_sample, "probability", c) == probs[0, c]


class TestStandardGradients:
    def test_matches_central_differences(self, toy_model, x_sample):
        config = AttributionConfig(method="standard", target="logit", target_class=2)
        attr = standard_gradients(toy_model, x_sample, config)
        assert attr.scores.shape == x_sample.shape
        assert attr.ig_steps == 0

        h = 1e-5
        rng = np.random.default_rng(0)
        for _ in range(25):
            r = int(rng.integers(0, 6))
            c = int(rng.integers(0, 4))
            up, down = x_sample.copy(), x_sample.copy()
            up[r, c] += h
            down[r, c] -= h
            numeric = (
                target_value(toy_model, up, "logit", 2)
                - target_value(toy_model, down, "logit", 2)
            ) / (2 * h)
            rel = abs(attr.scores[r, c] - numeric) / max(
                abs(attr.scores[r, c]), abs(numeric), 1e-8
            )
            assert rel < 1e-4

    def test_probability_target_spot_check(self, toy_model, x_sample):
        config = AttributionConfig(method="standard", target="probability",
                                   target_class=0)
        attr = standard_gradients(toy_model, x_sample, config)
        h = 1e-5
        up, down = x_sample.copy(), x_sample.copy()
        up[2, 1] += h
        down[2, 1] -= h
        numeric = (
            target_value(toy_model, up, "probability", 0)
            - target_value(toy_model, down, "probability", 0)
        ) / (2 * h)
        np.testing.assert_allclose(attr.scores[2, 1], numeric, rtol=1e-4, atol=1e-9)

    def test_dropout_rate_does_not_change_scores(self, x_sample):
        """Attribution runs the deterministic graph, so two models that
        differ only in dropout rate attribute identically."""
        a = init_params(4, 5, 3, seed=1, dropout_rate=0.0)
        b = init_params(4, 5, 3, seed=1, dropout_rate=0.7)
        config = AttributionConfig(method="standard", target_class=0)
        sa = standard_gradients(a, x_sample, config).scores
        sb = standard_gradients(b, x_sample, config).scores
        np.testing.assert_array_equal(sa, sb)


class TestPathIntegration:
    def test_linear_function_is_exact_for_any_step_count(self, rng):
        """For F(x) = <w, x>, the path integral equals w * (x - b) exactly,
        for one step or many."""
        w = rng.normal(size=(2, 3))
        x = rng.normal(size=(2, 3))
        b = rng.normal(size=(2, 3))
        expected = w * (x - b)
        for steps in (1, 2, 7, 50):
            scores = integrate_gradients_path(lambda p: w, x, b, steps)
            np.testing.assert_allclose(scores, expected, rtol=0, atol=1e-10)

    def test_quadratic_needs_refinement(self, rng):
        """For F(x) = sum(x^2)/2 the right-endpoint sum overshoots at m=1
        and converges like 1/m; the analytic value is known exactly."""
        x = rng.normal(size=(3, 2))
        b = np.zeros_like(x)
        exact = x * x / 2.0  # integral of t*x over t in [0,1] times x

        def grad_fn(point):
            return point

        gaps = []
        for steps in (1, 2, 4, 8, 16, 32):
            scores = integrate_gradients_path(grad_fn, x, b, steps)
            gaps.append(np.abs(scores - exact).max())
        assert all(a > b for a, b in zip(gaps, gaps[1:]))
        # right-endpoint error for this integrand is exactly x^2/(2m)
        np.testing.assert_allclose(gaps[0], (x * x).max() / 2.0, rtol=1e-12)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ContractError, match="baseline shape"):
            integrate_gradients_path(lambda p: p, np.zeros((2, 2)), np.zeros((3, 2)), 5)

    def test_bad_step_count_rejected(self):
        with pytest.raises(ConfigError):
            integrate_gradients_path(lambda p: p, np.zeros((2, 2)), np.zeros((2, 2)), 0)


class TestIntegratedGradients:
    def test_zero_at_baseline(self, toy_model):
        x = np.zeros((5, 4))
        attr = integrated_gradients(toy_model, x, AttributionConfig(target_class=1))
        np.testing.assert_array_equal(attr.scores, np.zeros((5, 4)))
        assert completeness_gap(toy_model, x, attr) == 0.0

    def test_completeness_tightens_with_steps(self, toy_model, x_sample):
        gaps = []
        for steps in (5, 20, 80, 320):
            attr = integrated_gradients(
                toy_model, x_sample,
                AttributionConfig(target_class=2, ig_steps=steps),
            )
            gaps.append(completeness_gap(toy_model, x_sample, attr))
        assert gaps[-1] < gaps[0]
        assert gaps[-1] < 1e-3 * max(1.0, abs(
            target_value(toy_model, x_sample, "logit", 2)
            - target_value(toy_model, np.zeros_like(x_sample), "logit", 2)
        ))

    def test_step_scaling_is_first_order(self, toy_model, x_sample):
        """Doubling the step count roughly halves the completeness gap."""
        config = AttributionConfig(target_class=0, ig_steps=40)
        g1 = completeness_gap(
            toy_model, x_sample, integrated_gradients(toy_model, x_sample, config))
        g2 = completeness_gap(
            toy_model, x_sample,
            integrated_gradients(toy_model, x_sample,
                                 AttributionConfig(target_class=0, ig_steps=80)))
        assert 1.5 < g1 / g2 < 2.5

    def test_custom_baseline(self, toy_model, x_sample, rng):
        baseline = rng.normal(size=(6, 4))
        config = AttributionConfig(target_class=1, ig_steps=300)
        attr = integrated_gradients(toy_model, x_sample, config, baseline=baseline)
        gap = completeness_gap(toy_model, x_sample, attr, baseline=baseline)
        fx = target_value(toy_model, x_sample, "logit", 1)
        fb = target_value(toy_model, baseline, "logit", 1)
        np.testing.assert_allclose(attr.scores.sum(), fx - fb, atol=5e-3)
        assert gap == abs(attr.scores.sum() - (fx - fb))

    def test_probability_target_completeness(self, toy_model, x_sample):
        config = AttributionConfig(target="probability", target_class=2,
                                   ig_steps=400)
        attr = integrated_gradients(toy_model, x_sample, config)
        fx = target_value(toy_model, x_sample, "probability", 2)
        fb = target_value(toy_model, np.zeros_like(x_sample), "probability", 2)
        np.testing.assert_allclose(attr.scores.sum(), fx - fb, atol=1e-3)

    def test_repeat_runs_are_bitwise_identical(self, toy_model, x_sample):
        config = AttributionConfig(target_class=0, ig_steps=16)
        a = integrated_gradients(toy_model, x_sample, config)
        b = integrated_gradients(toy_model, x_sample, config)
        np.testing.assert_array_equal(a.scores, b.scores)

    def test_class_is_frozen_at_input_prediction(self, toy_model, x_sample):
        """With no explicit class, the map's class equals the prediction at
        x even though path points may predict differently."""
        attr = integrated_gradients(toy_model, x_sample, AttributionConfig())
        assert attr.target_class == resolve_target_class(
            toy_model, x_sample, AttributionConfig()
        )

    def test_constant_model_attributes_nothing(self, x_sample):
        """Zeroing the first layer's input and recurrent weights makes the
        network constant in x, so every score must be zero."""
        model = init_params(4, 5, 3, seed=2, dropout_rate=0.0)
        for g in GATES:
            model.tensors[f"lstm1.w_{g}"][:] = 0.0
            model.tensors[f"lstm1.u_{g}"][:] = 0.0
        attr = integrated_gradients(model, x_sample,
                                    AttributionConfig(target_class=0, ig_steps=8))
        np.testing.assert_allclose(attr.scores, 0.0, atol=1e-15)

    def test_dispatch_respects_method(self, toy_model, x_sample):
        std = attribute_sample(toy_model, x_sample,
                               AttributionConfig(method="standard", target_class=0))
        ig = attribute_sample(toy_model, x_sample,
                              AttributionConfig(method="integrated", target_class=0,
                                                ig_steps=4))
        assert std.method == "standard" and std.ig_steps == 0
        assert ig.method == "integrated" and ig.ig_steps == 4
        assert isinstance(std, AttributionMap)


class TestTemporalImportance:
    def test_mean_abs_oracle(self):
        scores = np.array([[1.0, -3.0], [0.0, 0.0], [-2.0, 2.0]])
        np.testing.assert_allclose(
            temporal_importance(scores, AGG_MEAN_ABS), [2.0, 0.0, 2.0], atol=1e-15
        )

    def test_l2_oracle(self):
        scores = np.array([[3.0, -4.0], [0.0, 0.0]])
        np.testing.assert_allclose(
            temporal_importance(scores, AGG_L2),
            [np.sqrt(25.0 / 2.0), 0.0],
            atol=1e-15,
        )

    def test_sign_invariance(self, rng):
        scores = rng.normal(size=(5, 7))
        for agg in (AGG_MEAN_ABS, AGG_L2):
            np.testing.assert_allclose(
                temporal_importance(scores, agg),
                temporal_importance(-scores, agg),
                atol=1e-15,
            )

    def test_row_permutation_equivariance(self, rng):
        scores = rng.normal(size=(6, 3))
        perm = rng.permutation(6)
        np.testing.assert_allclose(
            temporal_importance(scores[perm]),
            temporal_importance(scores)[perm],
            atol=1e-15,
        )

    def test_rejects_non_matrix(self):
        with pytest.raises(ContractError):
            temporal_importance(np.zeros(5))

    def test_rejects_unknown_aggregation(self):
        with pytest.raises(ConfigError):
            temporal_importance(np.zeros((2, 2)), "sum")

    def test_mean_importance(self):
        curves = [np.array([1.0, 3.0]), np.array([3.0, 5.0])]
        np.testing.assert_allclose(mean_importance(curves), [2.0, 4.0], atol=1e-15)

    def test_mean_importance_rejects_mixed_lengths(self):
        with pytest.raises(DataError, match="different lengths"):
            mean_importance([np.zeros(3), np.zeros(4)])

    def test_mean_importance_rejects_empty(self):
        with pytest.raises(ContractError):
            mean_importance([])


class TestImportanceCsv:
    def test_layout_and_determinism(self, tmp_path):
        curve = np.array([0.5, 0.125, 2.0])
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_importance_csv(p1, curve)
        write_importance_csv(p2, curve)
        assert p1.read_bytes() == p2.read_bytes()
        lines = p1.read_text().splitlines()
        assert lines[0] == "step,importance"
        assert lines[1] == "0,0.5"
        assert lines[3] == "2,2.0"

    def test_values_round_trip_through_float(self, tmp_path, rng):
        curve = rng.random(10)
        path = tmp_path / "c.csv"
        write_importance_csv(path, curve)
        rows = path.read_text().splitlines()[1:]
        back = np.array([float(r.split(",")[1]) for r in rows])
        np.testing.assert_array_equal(back, curve)
