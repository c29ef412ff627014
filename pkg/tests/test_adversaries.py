"""Constructive adversaries: repetition counts, decision rules, reductions."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from btpeval import exact, metrics
from btpeval.adversaries import (
    CrossComparatorAdversary,
    MatchTestUnlinkAdversary,
    PalSamplerAdversary,
    PalSamplerConfig,
    ReductionUnlinkAdversary,
    SamplerIrrAdversary,
    blind_al_adversary,
    compute_n_delta,
)
from btpeval.errors import ConfigError, ContractError, VariationTooHighError
from btpeval.games import GameParams, _UnlinkSpec, run_pal_irr_game, run_unlink_game
from btpeval.metrics import MatchRateStats
from btpeval.population import SamplingOracle
from btpeval.rng import substream
from btpeval.schemes import LEAK_AD, LEAK_BOTH, LEAK_PI, leak_view


class TestNDelta:
    def test_worked_example(self):
        # mean 0.5, sigma 0.1 (C = 0.2), delta 0.16, gamma 0.5:
        # mu = 0.25, target = 0.34/0.84 = 0.404762..., and
        # 0.75^3 = 0.421875 >= target > 0.75^4 = 0.316406...
        cfg = PalSamplerConfig.from_stats(MatchRateStats(0.5, 0.1), 0.16, 0.5)
        assert cfg.mu == pytest.approx(0.25)
        assert cfg.n_delta == 4
        assert (1 - cfg.mu) ** 4 < (0.5 - 0.16) / (1 - 0.16) <= (1 - cfg.mu) ** 3

    def test_delta_below_c_squared_rejected(self):
        with pytest.raises(VariationTooHighError):
            PalSamplerConfig.from_stats(MatchRateStats(0.5, 0.1), 0.03, 0.5)

    def test_gamma_not_above_delta_rejected(self):
        with pytest.raises(ConfigError):
            PalSamplerConfig.from_stats(MatchRateStats(0.5, 0.1), 0.16, 0.16)
        with pytest.raises(ConfigError):
            PalSamplerConfig.from_stats(MatchRateStats(0.5, 0.1), 0.16, 1.0)

    def test_degenerate_mu_one(self):
        assert compute_n_delta(1.0, 0.1, 0.5) == 1

    @given(st.data())
    @settings(max_examples=200)
    def test_minimality_property(self, data):
        mean = data.draw(st.floats(0.05, 0.95))
        c = data.draw(st.floats(0.0, 0.99))
        sigma = c * mean
        delta = data.draw(st.floats(c * c + 1e-6, 0.999, exclude_min=False))
        gamma = data.draw(st.floats(delta + 1e-6, 0.9999))
        mu = mean - sigma / math.sqrt(delta)
        if not 0.0 < mu <= 1.0:
            return
        n = compute_n_delta(mu, delta, gamma)
        big_l = math.log1p(-mu) if mu < 1.0 else float("-inf")
        big_t = math.log((gamma - delta) / (1.0 - delta))
        assert n * big_l < big_t
        if n > 1:
            assert (n - 1) * big_l >= big_t


class TestPalSampler:
    def test_needs_full_template(self, fc_scheme, default_pop):
        cfg = PalSamplerConfig.from_stats(MatchRateStats(0.2, 0.02), 0.16, 0.5)
        adv = PalSamplerAdversary(cfg)
        with pytest.raises(ContractError):
            run_pal_irr_game(fc_scheme, default_pop, LEAK_PI, adv, trials=2,
                             seed=0)

    def test_query_cap_is_n_delta(self, fc_scheme, default_pop):
        stats = metrics.exact_pt_match_stats(fc_scheme, default_pop)
        cfg = PalSamplerConfig.from_stats(stats, 0.16, 0.5)
        trials = 400
        result = run_pal_irr_game(fc_scheme, default_pop, LEAK_BOTH,
                                  PalSamplerAdversary(cfg), trials=trials,
                                  seed=1)
        assert result.queries["adv_phase2"] <= trials * cfg.n_delta
        assert result.queries["adv_phase1"] == 0
        assert result.flagged == 0

    def test_wins_above_target(self, fc_scheme, default_pop):
        stats = metrics.exact_pt_match_stats(fc_scheme, default_pop)
        cfg = PalSamplerConfig.from_stats(stats, 0.16, 0.5)
        result = run_pal_irr_game(fc_scheme, default_pop, LEAK_BOTH,
                                  PalSamplerAdversary(cfg), trials=3000,
                                  seed=2)
        assert result.win_rate.point > 1.0 - 0.5


class TestMatchTestAdversary:
    def test_needs_full_template(self, fc_scheme, default_pop):
        with pytest.raises(ContractError):
            run_unlink_game(fc_scheme, default_pop, LEAK_PI,
                            MatchTestUnlinkAdversary(), trials=2, seed=0)

    @pytest.mark.parametrize("forced_b", [0, 1])
    def test_conditional_success_is_one_minus_half_mr(self, fc_scheme,
                                                      default_pop, forced_b):
        mr, _ = exact.enumerator(fc_scheme, default_pop).pt_match_stats()
        spec = _UnlinkSpec(fc_scheme, default_pop, LEAK_BOTH,
                           MatchTestUnlinkAdversary(), 10**6,
                           f"cond{forced_b}", force_b=forced_b)
        trials = 8000
        wins, answers, flagged, _, _ = spec.run_range(31, 0, trials)
        rate = (answers == forced_b).mean()
        target = 1.0 - mr / 2.0
        se = math.sqrt(target * (1 - target) / trials)
        assert abs(rate - target) <= 4 * se

    def test_advantage_equals_one_minus_mr(self, fc_scheme, default_pop):
        mr, _ = exact.enumerator(fc_scheme, default_pop).pt_match_stats()
        result = run_unlink_game(fc_scheme, default_pop, LEAK_BOTH,
                                 MatchTestUnlinkAdversary(), trials=10000,
                                 seed=33, level=0.99)
        assert result.advantage.ci_low <= 1.0 - mr <= result.advantage.ci_high

    def test_degenerate_always_match_scheme(self, default_pop):
        from toy_schemes import AlwaysMatchScheme

        result = run_unlink_game(AlwaysMatchScheme(7), default_pop, LEAK_BOTH,
                                 MatchTestUnlinkAdversary(), trials=6000,
                                 seed=35, level=0.99)
        assert result.advantage.point < 0.05


class TestCrossComparator:
    def test_pi_only_leak_degenerates(self, fc_scheme, default_pop):
        # fresh digests of independent codewords carry no linkage signal
        result = run_unlink_game(fc_scheme, default_pop, LEAK_PI,
                                 CrossComparatorAdversary(), trials=8000,
                                 seed=37)
        assert result.advantage.point < 0.03

    def test_unknown_rule_rejected(self):
        with pytest.raises(ConfigError):
            CrossComparatorAdversary("nope")

    def test_distinct_pair_sampling(self, fc_scheme, default_pop):
        adv = CrossComparatorAdversary()
        params = GameParams(fc_scheme, default_pop)
        rng = substream(0, "cc")
        oracle = SamplingOracle(default_pop, substream(1, "cc"), 100)
        x, x0, x1, state = adv.phase1(params, LEAK_BOTH, oracle, rng)
        assert oracle.query_count == 3


class SpyView:
    """Raises on any field access; proves a view was never inspected."""

    def __getattr__(self, name):
        raise AssertionError(f"view field {name} was read")


class CountingInner(SamplerIrrAdversary):
    def __init__(self, **kw):
        super().__init__(**kw)
        self.calls = 0

    def phase2(self, state, view, oracle, rng):
        self.calls += 1
        return super().phase2(state, view, oracle, rng)


class TestReductionAdversary:
    def _phase1(self, scheme, pop, inner, tau, leak=LEAK_AD):
        adv = ReductionUnlinkAdversary(inner, tau)
        params = GameParams(scheme, pop)
        rng = substream(2, "red")
        oracle = SamplingOracle(pop, substream(3, "red"), 100)
        return adv, adv.phase1(params, leak, oracle, rng), rng, oracle

    def test_first_view_never_inspected(self, fc_scheme, default_pop):
        inner = SamplerIrrAdversary(num_queries=4, fallback_tau=1)
        adv, (x, x0, x1, state), rng, oracle = self._phase1(
            fc_scheme, default_pop, inner, tau=1)
        view_prime = leak_view(fc_scheme.pie(x0, rng), LEAK_AD)
        bit = adv.phase2(state, SpyView(), view_prime, oracle, rng)
        assert bit in (0, 1)

    def test_overlap_branch_skips_inner(self, fc_scheme, default_pop):
        # 2*tau >= n: every ball pair intersects, so only coins are thrown
        inner = CountingInner(num_queries=4, fallback_tau=4)
        result = run_unlink_game(fc_scheme, default_pop, LEAK_AD,
                                 ReductionUnlinkAdversary(inner, tau=4),
                                 trials=300, seed=39)
        assert inner.calls == 0
        assert result.advantage.point < 0.15

    def test_blind_inner_consistent_with_zero(self, fc_scheme, default_pop):
        inner = blind_al_adversary(default_pop, 1)
        result = run_unlink_game(fc_scheme, default_pop, LEAK_AD,
                                 ReductionUnlinkAdversary(inner, tau=1),
                                 trials=8000, seed=41, level=0.99)
        ov = metrics.overlap_rates(default_pop, 1)
        m1 = metrics.extremal_mr(default_pop, 1)
        lower = -(ov.p_tau - ov.q_tau) * m1.value
        assert result.advantage.point >= lower - 3 * 2 * result.win_rate.std_error


class TestSamplerAdversary:
    def test_success_cannot_beat_blind_optimum(self, fc_scheme, default_pop):
        from btpeval.games import run_al_irr_game

        result = run_al_irr_game(fc_scheme, default_pop, LEAK_AD, 1,
                                 SamplerIrrAdversary(num_queries=16,
                                                     fallback_tau=1),
                                 trials=6000, seed=43, level=0.99)
        assert result.advantage.ci_low <= 0.0
        assert result.queries["adv_phase2"] == 6000 * 16

    def test_bad_config(self):
        with pytest.raises(ConfigError):
            SamplerIrrAdversary(num_queries=0)
