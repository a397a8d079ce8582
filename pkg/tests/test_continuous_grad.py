"""Counter-based sampling and Monte Carlo gradient estimation."""

import numpy as np
import pytest

from bpoe import (
    BadParameter,
    BilinearModel,
    F_integrand,
    FiniteResampler,
    NormalSampler,
    ScenarioSet,
    UniformSampler,
    WrongRegime,
    counter_uniform01,
    mc_gradient,
)


class TestCounterStream:
    def test_range_and_determinism(self):
        idx = np.arange(1000)
        u = counter_uniform01(123, idx)
        assert np.all((0.0 <= u) & (u < 1.0))
        assert np.array_equal(u, counter_uniform01(123, idx))

    def test_seed_and_slot_change_the_stream(self):
        idx = np.arange(1000)
        base = counter_uniform01(7, idx)
        assert not np.array_equal(base, counter_uniform01(8, idx))
        assert not np.array_equal(base, counter_uniform01(7, idx, slot=1))

    def test_order_independent(self):
        # the draw at an index does not depend on which block produced it
        full = counter_uniform01(5, np.arange(100))
        shuffled = counter_uniform01(5, np.array([40, 3, 99]))
        assert shuffled.tolist() == [full[40], full[3], full[99]]

    def test_roughly_uniform(self):
        u = counter_uniform01(11, np.arange(200_000))
        assert u.mean() == pytest.approx(0.5, abs=5e-3)
        assert u.var() == pytest.approx(1.0 / 12.0, abs=5e-3)


class TestSamplers:
    @pytest.mark.parametrize(
        "sampler", [UniformSampler(-1.0, 1.0), NormalSampler()]
    )
    def test_draw_matches_block(self, sampler):
        block = sampler.draw_block(42, 0, 50)
        for i in (0, 7, 49):
            assert np.array_equal(sampler.draw(42, i), block[i])
        # blocks tile without overlap artifacts
        assert np.array_equal(sampler.draw_block(42, 10, 5), block[10:15])

    def test_uniform_support(self):
        s = UniformSampler(2.0, 3.0)
        block = s.draw_block(0, 0, 10_000)
        assert block.min() >= 2.0 and block.max() < 3.0
        assert block.mean() == pytest.approx(2.5, abs=0.02)

    def test_uniform_bad_interval(self):
        with pytest.raises(BadParameter):
            UniformSampler(1.0, 1.0)

    def test_normal_moments(self):
        z = NormalSampler().draw_block(3, 0, 200_000)[:, 0]
        assert z.mean() == pytest.approx(0.0, abs=0.01)
        assert z.std() == pytest.approx(1.0, abs=0.01)

    def test_finite_resampler_frequencies(self):
        scenarios = ScenarioSet([[0.0], [1.0], [2.0]], [0.2, 0.3, 0.5])
        rows = FiniteResampler(scenarios).draw_block(9, 0, 100_000)[:, 0]
        for value, prob in zip((0.0, 1.0, 2.0), (0.2, 0.3, 0.5)):
            assert (rows == value).mean() == pytest.approx(prob, abs=0.01)


class TestIntegrand:
    def test_zero_branch(self):
        assert F_integrand(-3.0, [5.0, -2.0], 0.5).tolist() == [0.0, 0.0]

    def test_boundary_goes_to_zero(self):
        assert F_integrand(-2.0, [5.0], 0.5).tolist() == [0.0]

    def test_active_branch(self):
        assert F_integrand(1.0, [5.0, -2.0], 0.5).tolist() == [2.5, -1.0]

    def test_bad_gamma(self):
        with pytest.raises(BadParameter):
            F_integrand(1.0, [1.0], 0.0)


class TestMcGradient:
    """g(xi, x) = x * xi - 1 with xi uniform on [-1, 1]; closed-form
    gradient 1/x^2 and unique minimizer 1/(x - 1)."""

    SAMPLER = UniformSampler(-1.0, 1.0)
    MODEL = BilinearModel(offset=-1.0)

    def test_matches_closed_form(self):
        est = mc_gradient(self.SAMPLER, self.MODEL, [2.0], 100_000, seed=1)
        tol = max(4.0 * float(est.stderr[0]), 5e-3)
        assert float(est.mean[0]) == pytest.approx(0.25, abs=tol)
        assert est.gamma_hat == pytest.approx(1.0, abs=0.02)

    def test_deterministic(self):
        a = mc_gradient(self.SAMPLER, self.MODEL, [2.0], 10_000, seed=4)
        b = mc_gradient(self.SAMPLER, self.MODEL, [2.0], 10_000, seed=4)
        assert np.array_equal(a.mean, b.mean)
        assert a.gamma_hat == b.gamma_hat

    def test_stderr_shrinks_with_n(self):
        small = mc_gradient(self.SAMPLER, self.MODEL, [2.0], 10_000, seed=2)
        large = mc_gradient(self.SAMPLER, self.MODEL, [2.0], 160_000, seed=2)
        ratio = float(small.stderr[0] / large.stderr[0])
        assert ratio == pytest.approx(4.0, rel=0.2)

    def test_consistency_across_seeds(self):
        means = [
            float(mc_gradient(self.SAMPLER, self.MODEL, [3.0], 50_000, seed=s).mean[0])
            for s in range(5)
        ]
        assert float(np.median(means)) == pytest.approx(1.0 / 9.0, abs=3e-3)

    def test_diagnostics(self):
        est = mc_gradient(self.SAMPLER, self.MODEL, [2.0], 50_000, seed=6)
        d = est.diagnostics
        assert d.mean_g < 0.0
        assert d.atom_fraction <= 10.0 / est.n_samples
        assert d.gamma_width <= 1e-3
        eps, frac = d.positive_mass
        assert eps > 0.0 and 0.0 < frac < 0.5

    def test_wrong_regime_all_positive(self):
        model = BilinearModel(offset=1.0)
        with pytest.raises(WrongRegime):
            mc_gradient(self.SAMPLER, model, [0.0], 1000, seed=0)

    def test_wrong_regime_no_positive(self):
        with pytest.raises(WrongRegime):
            mc_gradient(self.SAMPLER, self.MODEL, [0.5], 1000, seed=0)

    def test_too_few_samples(self):
        with pytest.raises(BadParameter):
            mc_gradient(self.SAMPLER, self.MODEL, [2.0], 1, seed=0)
