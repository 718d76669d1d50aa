import math

import numpy as np
import pytest
from scipy import stats

from platformtrials import (
    MapPriorModel,
    MapSettings,
    MixturePrior,
    NoNonConcurrentControlsError,
    TrialConfig,
    ValidationError,
    derive_map_prior,
    robustify,
    simulate_trial,
)
from platformtrials.mapprior import ncc_periods, ncc_sources
from platformtrials.mcmc import ChainSettings

FAST_CHAIN = ChainSettings(burn_in=1000, draws=3000)


def staggered_binary(seed=1, **over):
    base = dict(endpoint="binary", num_arms=2, n_arm=150, entry_times=(0, 150),
                control_response=0.3, effects=(1.2, 1.5), lambda_=(0.0, 0.0, 0.0))
    base.update(over)
    return simulate_trial(TrialConfig(**base), seed=seed)


class TestMixturePrior:
    def test_logpdf_matches_scipy(self):
        prior = MixturePrior(((0.6, -1.0, 0.5), (0.4, 2.0, 1.5)))
        for x in (-2.0, 0.0, 0.7, 3.5):
            oracle = math.log(0.6 * stats.norm.pdf(x, -1.0, 0.5)
                              + 0.4 * stats.norm.pdf(x, 2.0, 1.5))
            assert prior.logpdf(x) == pytest.approx(oracle, abs=1e-10)

    def test_mean_is_weighted_average(self):
        prior = MixturePrior(((0.25, -2.0, 1.0), (0.75, 2.0, 1.0)))
        assert prior.mean == pytest.approx(1.0, abs=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError, match="sum to 1"):
            MixturePrior(((0.5, 0.0, 1.0), (0.4, 1.0, 1.0)))
        with pytest.raises(ValueError, match="positive"):
            MixturePrior(((1.0, 0.0, 0.0),))
        with pytest.raises(ValueError, match="1 to 4"):
            MixturePrior(())


class TestRobustify:
    def test_weight_zero_is_identity(self):
        prior = MixturePrior(((1.0, 0.3, 0.8),))
        assert robustify(prior, 0.0, 10.0) is prior

    def test_weight_one_replaces_with_vague(self):
        prior = MixturePrior(((1.0, 0.3, 0.8),))
        out = robustify(prior, 1.0, 10.0)
        assert out.components == ((1.0, 0.0, 10.0),)

    def test_partial_weight_rescales(self):
        prior = MixturePrior(((0.7, 0.3, 0.8), (0.3, -0.1, 1.2)))
        out = robustify(prior, 0.1, 31.622776601683793)
        assert len(out.components) == 3
        w = [c[0] for c in out.components]
        assert w[0] == pytest.approx(0.63, abs=1e-12)
        assert w[1] == pytest.approx(0.27, abs=1e-12)
        assert w[2] == pytest.approx(0.10, abs=1e-12)
        assert out.components[2][1:] == (0.0, 31.622776601683793)

    def test_bad_weight_rejected(self):
        prior = MixturePrior(((1.0, 0.0, 1.0),))
        with pytest.raises(ValueError):
            robustify(prior, 1.5, 10.0)


class TestNccExtraction:
    def test_periods_before_entry_only(self):
        data = staggered_binary()
        pre = ncc_periods(data, 2)
        first_concurrent = data.concurrent_periods(2)[0]
        assert pre and all(p < first_concurrent for p in pre)
        assert ncc_periods(data, 1) == []

    def test_per_period_source_counts(self):
        data = staggered_binary()
        sources = ncc_sources(data, 2, opt=2)
        ctrl = data.treatment == 0
        for src, p in zip(sources, ncc_periods(data, 2)):
            m = ctrl & (data.period == p)
            assert src["n"] == int(m.sum())
            assert src["events"] == float(data.response[m].sum())

    def test_opt1_pools_everything(self):
        data = staggered_binary()
        per = ncc_sources(data, 2, opt=2)
        pooled = ncc_sources(data, 2, opt=1)
        assert len(pooled) == 1
        assert pooled[0]["n"] == sum(s["n"] for s in per)
        assert pooled[0]["events"] == sum(s["events"] for s in per)

    def test_continuous_sources_have_spread(self):
        config = TrialConfig(endpoint="continuous", num_arms=2, n_arm=100,
                             entry_times=(0, 100), control_response=0.0,
                             effects=(0.3, 0.3), lambda_=(0.0,) * 3, sigma=1.0)
        data = simulate_trial(config, seed=2)
        for src in ncc_sources(data, 2, opt=2):
            assert set(src) == {"mean", "sd", "n"}
            assert src["sd"] > 0

    def test_no_ncc_raises(self):
        data = staggered_binary()
        with pytest.raises(NoNonConcurrentControlsError,
                           match="no non-concurrent controls available"):
            ncc_sources(data, 1, opt=2)


class TestDeriveMapPrior:
    def test_single_source_opt_equivalence(self):
        sources = [{"events": 30.0, "n": 100}]
        p1 = derive_map_prior(sources, MapSettings(opt=1), seed=5, chain=FAST_CHAIN)
        p2 = derive_map_prior(sources, MapSettings(opt=2), seed=5, chain=FAST_CHAIN)
        assert abs(p1.mean - p2.mean) < 0.05

    def test_tight_heterogeneity_prior_concentrates_on_pooled_logit(self):
        # tau pinned near zero: predictive centre ~ pooled empirical logit
        sources = [{"events": 28.0, "n": 100}, {"events": 34.0, "n": 100},
                   {"events": 30.0, "n": 100}]
        prior = derive_map_prior(sources, MapSettings(prior_prec_tau=1e6),
                                 seed=6, chain=FAST_CHAIN)
        pooled = math.log(92 / (300 - 92))
        assert abs(prior.mean - pooled) < 0.05

    def test_symmetric_sources_give_symmetric_prior(self):
        sources = [{"mean": 0.8, "sd": 1.0, "n": 200},
                   {"mean": -0.8, "sd": 1.0, "n": 200}]
        prior = derive_map_prior(sources, MapSettings(), seed=7, binary=False,
                                 chain=FAST_CHAIN)
        assert abs(prior.mean) < 0.05

    def test_deterministic_given_seed(self):
        sources = [{"events": 25.0, "n": 80}]
        a = derive_map_prior(sources, MapSettings(), seed=9, chain=FAST_CHAIN)
        b = derive_map_prior(sources, MapSettings(), seed=9, chain=FAST_CHAIN)
        assert a.components == b.components

    def test_more_sources_tighter_prior(self):
        few = [{"events": 30.0, "n": 100}]
        many = [{"events": 30.0, "n": 100} for _ in range(5)]
        p_few = derive_map_prior(few, MapSettings(), seed=10, chain=FAST_CHAIN)
        p_many = derive_map_prior(many, MapSettings(), seed=10, chain=FAST_CHAIN)

        def spread(p):
            m = p.mean
            second = sum(w * (sd * sd + (mu - m) ** 2) for w, mu, sd in p.components)
            return math.sqrt(second)

        assert spread(p_many) < spread(p_few)


class TestMapSettings:
    def test_validation_names_fields(self):
        with pytest.raises(ValidationError, match="opt"):
            MapSettings(opt=3)
        with pytest.raises(ValidationError, match="prior_prec_tau"):
            MapSettings(prior_prec_tau=-1.0)
        with pytest.raises(ValidationError, match="weight"):
            MapSettings(weight=1.5)


@pytest.fixture(scope="module")
def fitted():
    data = staggered_binary(seed=3)
    return MapPriorModel(burn_in=800, draws=2500, seed=4).fit(data, 2)


class TestMapPriorModel:

    def test_output_contract(self, fitted):
        out = fitted.result_.to_output_dict()
        assert list(out) == ["p_val", "treat_effect", "lower_ci", "upper_ci",
                             "reject_h0"]

    def test_interval_and_decision_consistent(self, fitted):
        res = fitted.result_
        assert res.lower_ci < res.treat_effect < res.upper_ci
        assert res.reject_h0 == (res.p_val < 0.025)
        assert 0.0 <= res.p_val <= 1.0

    def test_diagnostics_expose_priors(self, fitted):
        d = fitted.result_.diagnostics
        assert "map_prior" in d and "prior" in d
        comps = d["prior"]["components"]
        # robustified: last component is the vague one at zero
        assert comps[-1]["mean"] == 0.0
        assert comps[-1]["weight"] == pytest.approx(0.1, abs=1e-9)

    def test_effect_close_to_truth_on_big_trial(self):
        config = TrialConfig(endpoint="binary", num_arms=2, n_arm=600,
                             entry_times=(0, 600), control_response=0.3,
                             effects=(1.0, 2.0), lambda_=(0.0,) * 3)
        data = simulate_trial(config, seed=8)
        est = MapPriorModel(burn_in=800, draws=2500, seed=11).fit(data, 2)
        assert est.treat_effect_ == pytest.approx(math.log(2.0), abs=0.35)

    def test_requires_ncc(self):
        data = staggered_binary(seed=5)
        with pytest.raises(NoNonConcurrentControlsError):
            MapPriorModel(burn_in=200, draws=400, seed=1).fit(data, 1)

    def test_weight_one_ignores_history(self):
        # fully vague prior: decision should track the concurrent data alone
        data = staggered_binary(seed=6)
        est = MapPriorModel(weight=1.0, burn_in=800, draws=2500, seed=12).fit(data, 2)
        cc = data.concurrent_periods(2)
        m = np.isin(data.period, cc)
        p1 = data.response[m & (data.treatment == 2)].mean()
        p0 = data.response[m & (data.treatment == 0)].mean()
        crude = math.log(p1 / (1 - p1)) - math.log(p0 / (1 - p0))
        assert est.treat_effect_ == pytest.approx(crude, abs=0.25)
