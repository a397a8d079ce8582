"""Data model and ingestion tests."""

import numpy as np
import pytest

from bpoe import (
    AffineScenarioModel,
    BadParameter,
    BadProbabilities,
    BilinearModel,
    DimensionMismatch,
    FiniteDistribution,
    MalformedFile,
    NetworkFlowModel,
    NewsvendorModel,
    ScenarioSet,
    load_scenarios,
    network_flow_model,
    push_forward,
)

EX1_CSV = "prob,b,a1\n0.5,-1,0\n0.5,-1,1\n"


class TestFiniteDistribution:
    def test_valid(self):
        d = FiniteDistribution([1.0, -2.0], [0.25, 0.75])
        assert d.mean() == pytest.approx(-1.25)
        assert len(d) == 2

    def test_ties_allowed(self):
        d = FiniteDistribution([1.0, 1.0], [0.5, 0.5])
        assert len(d) == 2

    def test_nonpositive_prob_rejected(self):
        with pytest.raises(BadProbabilities):
            FiniteDistribution([1.0, 2.0], [0.0, 1.0])

    def test_bad_sum_rejected(self):
        with pytest.raises(BadProbabilities):
            FiniteDistribution([1.0, 2.0], [0.5, 0.6])

    def test_scaled(self):
        d = FiniteDistribution([1.0, -2.0], [0.5, 0.5])
        assert np.allclose(d.scaled(2.0).values, [2.0, -4.0])
        with pytest.raises(BadParameter):
            d.scaled(-1.0)

    def test_immutable(self):
        d = FiniteDistribution([1.0, -2.0], [0.5, 0.5])
        with pytest.raises(ValueError):
            d.values[0] = 3.0


class TestLoadScenarios:
    def test_csv_two_outcomes(self, tmp_path):
        path = tmp_path / "ex1.csv"
        path.write_text(EX1_CSV)
        scenarios, model = load_scenarios(path)
        assert isinstance(model, AffineScenarioModel)
        # g(xi, x) = b + a * x reproduces x * xi - 1 on outcomes {0, 1}
        assert model.eval(scenarios.scenarios[0], [1.5]) == pytest.approx(-1.0)
        assert model.eval(scenarios.scenarios[1], [1.5]) == pytest.approx(0.5)

    def test_csv_single_constant_row(self, tmp_path):
        path = tmp_path / "const.csv"
        path.write_text("prob,b,a1\n1.0,5,0\n")
        scenarios, model = load_scenarios(path)
        dist = push_forward(model, scenarios, [123.0])
        assert dist.values.tolist() == [5.0]
        assert dist.probs.tolist() == [1.0]

    def test_csv_bad_probability_sum(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("prob,b,a1\n0.4,-1,0\n0.5,-1,1\n")
        with pytest.raises(BadProbabilities):
            load_scenarios(path)

    def test_csv_negative_probability(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("prob,b,a1\n-0.5,-1,0\n1.5,-1,1\n")
        with pytest.raises(BadProbabilities):
            load_scenarios(path)

    def test_csv_renormalizes_tiny_drift(self, tmp_path):
        path = tmp_path / "drift.csv"
        path.write_text("prob,b,a1\n0.5000000001,-1,0\n0.5,-1,1\n")
        scenarios, _ = load_scenarios(path)
        assert scenarios.probs.sum() == pytest.approx(1.0, abs=1e-12)

    def test_csv_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("p,b,a1\n1.0,0,0\n")
        with pytest.raises(MalformedFile):
            load_scenarios(path)

    def test_csv_bad_arity(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("prob,b,a1\n1.0,0\n")
        with pytest.raises(MalformedFile):
            load_scenarios(path)

    def test_csv_non_numeric(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("prob,b,a1\n1.0,zero,0\n")
        with pytest.raises(MalformedFile):
            load_scenarios(path)

    def test_json_mirror(self, tmp_path):
        path = tmp_path / "ex1.json"
        path.write_text(
            '{"scenarios": [{"prob": 0.5, "b": -1, "a": [0]},'
            ' {"prob": 0.5, "b": -1, "a": [1]}]}'
        )
        scenarios, model = load_scenarios(path)
        dist = push_forward(model, scenarios, [1.5])
        assert np.allclose(dist.values, [-1.0, 0.5])

    def test_json_malformed(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"rows": []}')
        with pytest.raises(MalformedFile):
            load_scenarios(path)


class TestNetworkFlowModel:
    def test_full_survival_value(self):
        scenarios, model = network_flow_model(0.1)
        assert model.eval([1, 1, 1, 1], [2.3]) == pytest.approx(1.0 - 2 * 2.3)

    def test_full_survival_probability(self):
        scenarios, _ = network_flow_model(0.1)
        idx = np.flatnonzero((scenarios.scenarios == 1.0).all(axis=1))[0]
        assert scenarios.probs[idx] == pytest.approx(0.6561, abs=1e-12)

    def test_failed_backbone_is_constant(self):
        _, model = network_flow_model(0.1)
        for x in (0.5, 2.0, 17.0):
            assert model.eval([0, 1, 1, 1], [x]) == pytest.approx(1.0)

    @pytest.mark.parametrize("rho", [0.05, 0.1, 0.3, 0.49, 0.9])
    def test_probabilities_sum_to_one(self, rho):
        scenarios, _ = network_flow_model(rho)
        assert abs(scenarios.probs.sum() - 1.0) <= 1e-12

    def test_rho_out_of_range(self):
        for rho in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(BadParameter):
                network_flow_model(rho)


class TestPushForward:
    def test_two_outcome_values(self, bernoulli_instance):
        scenarios, model = bernoulli_instance
        dist = push_forward(model, scenarios, [1.5])
        assert np.allclose(dist.values, [-1.0, 0.5])
        assert np.allclose(dist.probs, [0.5, 0.5])

    def test_network_three_distinct_levels(self):
        scenarios, model = network_flow_model(0.1)
        x = 2.3587
        dist = push_forward(model, scenarios, [x])
        levels = {round(v, 9) for v in dist.values}
        assert levels == {
            round(1 - 2 * x, 9),
            round(1 - x, 9),
            1.0,
        }
        assert len(dist) == 16  # ties are never merged

    def test_order_and_probs_preserved(self):
        rng = np.random.default_rng(7)
        nu = 9
        data = np.column_stack([rng.normal(size=nu), rng.normal(size=(nu, 2))])
        probs = rng.dirichlet(np.ones(nu))
        scenarios = ScenarioSet(data, probs)
        model = AffineScenarioModel(2)
        x = np.array([0.3, -1.2])
        dist = push_forward(model, scenarios, x)
        expected = data[:, 0] + data[:, 1:] @ x
        assert np.array_equal(dist.values, expected)
        assert np.array_equal(dist.probs, probs)

    def test_dimension_mismatch(self, bernoulli_instance):
        scenarios, model = bernoulli_instance
        with pytest.raises(DimensionMismatch):
            push_forward(model, scenarios, [1.0, 2.0])


class TestModelGradients:
    def test_affine_gradient_is_coefficient_vector(self):
        rng = np.random.default_rng(3)
        model = AffineScenarioModel(4)
        xi = np.concatenate([[1.0], rng.normal(size=4)])
        for x in rng.normal(size=(5, 4)):
            assert np.array_equal(model.grad(xi, x), xi[1:])

    def test_bilinear(self):
        model = BilinearModel(offset=-1.0)
        assert model.eval([0.5], [2.0]) == pytest.approx(0.0)
        assert model.grad([0.5], [2.0]).tolist() == [0.5]

    def test_newsvendor(self):
        model = NewsvendorModel(beta=2.0)
        assert model.eval([1.0], [3.0]) == pytest.approx(4.0)
        assert model.grad([1.0], [3.0]).tolist() == [2.0]
        assert model.eval([3.0], [1.0]) == pytest.approx(0.0)
        assert model.grad([3.0], [1.0]).tolist() == [0.0]

    def test_network_gradient_matches_coefficient(self):
        _, model = network_flow_model(0.2)
        assert model.grad([1, 1, 1, 1], [1.0]).tolist() == [-2.0]
        assert model.grad([1, 1, 0, 1], [1.0]).tolist() == [-1.0]
        assert model.grad([1, 1, 1, 0], [1.0]).tolist() == [-1.0]
        assert model.grad([0, 0, 1, 1], [1.0]).tolist() == [0.0]
