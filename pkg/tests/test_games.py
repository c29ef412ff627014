"""Game protocol mechanics: fidelity, budgets, determinism, known rates."""

import numpy as np
import pytest

from btpeval import metrics
from btpeval.adversaries import (
    CoinFlipUnlinkAdversary,
    CrossComparatorAdversary,
    MatchTestUnlinkAdversary,
    ReadViewAdversary,
    blind_al_adversary,
    blind_pal_adversary,
)
from btpeval.errors import ProtocolError
from btpeval.games import (
    IrrAdversary,
    UnlinkAdversary,
    est_cross_match_rates,
    run_al_irr_game,
    run_coupled_irr_trials,
    run_pal_irr_game,
    run_unlink_game,
    trace_irr_trial,
    trace_unlink_trial,
)
from btpeval.population import FeatureElement, Population
from btpeval.schemes import LEAK_AD, LEAK_BOTH, LEAK_PI, PlaintextScheme, RotationScheme


class GreedySampler(IrrAdversary):
    """Queries past any budget; used to exercise the abort path."""

    name = "greedy"

    def phase1(self, params, leak, tau, oracle, rng):
        return None

    def phase2(self, state, view, oracle, rng):
        while True:
            oracle.sample(0)


class BadBitAdversary(UnlinkAdversary):
    name = "bad-bit"

    def phase1(self, params, leak, oracle, rng):
        x = oracle.sample(0)
        return x, x, x, None

    def phase2(self, state, view, view_prime, oracle, rng):
        return 2


class UnrotateAdversary(UnlinkAdversary):
    """Rotation-specific distinguisher: invert the leaked template and
    compare with the submitted features."""

    name = "unrotate"

    def phase1(self, params, leak, oracle, rng):
        pop = params.population
        users = [int(rng.integers(pop.num_users)) for _ in range(3)]
        x, x0, x1 = (oracle.sample(u) for u in users)
        return x, x0, x1, (x, x0, x1)

    def phase2(self, state, view, view_prime, oracle, rng):
        x, x0, x1 = state
        recovered = view_prime.pi.rotate(-view_prime.alpha)
        if recovered == x0:
            return 0
        if recovered == x1:
            return 1
        return int(rng.integers(2))


class TestProtocolFidelity:
    def test_irr_step_order(self, fc_scheme, default_pop):
        trace = trace_irr_trial(fc_scheme, default_pop, LEAK_PI, 1,
                                blind_al_adversary(default_pop, 1))
        assert trace == ["phase1", "challenge", "phase2", "decide"]

    def test_pal_step_order(self, fc_scheme, default_pop):
        trace = trace_irr_trial(fc_scheme, default_pop, LEAK_BOTH, None,
                                blind_pal_adversary(fc_scheme, default_pop),
                                pal=True)
        assert trace == ["phase1", "challenge", "phase2", "decide"]

    def test_unlink_step_order(self, fc_scheme, default_pop):
        trace = trace_unlink_trial(fc_scheme, default_pop, LEAK_BOTH,
                                   MatchTestUnlinkAdversary())
        assert trace == ["phase1", "challenge", "phase2", "decide"]

    def test_bad_guess_bit_raises(self, fc_scheme, default_pop):
        with pytest.raises(ProtocolError):
            run_unlink_game(fc_scheme, default_pop, LEAK_BOTH,
                            BadBitAdversary(), trials=3, seed=0)


class TestBudgets:
    def test_exhausted_trial_is_flagged_loss(self, fc_scheme, default_pop):
        result = run_al_irr_game(fc_scheme, default_pop, LEAK_PI, 1,
                                 GreedySampler(), trials=5, seed=0, budget=10)
        assert result.flagged == 5
        assert result.wins == 0
        assert result.queries["adv_phase2"] == 50  # budget consumed, then cut

    def test_blind_adversary_uses_no_queries(self, fc_scheme, default_pop):
        result = run_al_irr_game(fc_scheme, default_pop, LEAK_PI, 1,
                                 blind_al_adversary(default_pop, 1),
                                 trials=50, seed=0)
        assert result.queries["adv_phase1"] == 0
        assert result.queries["adv_phase2"] == 0
        assert result.queries["challenger"] == 50


class TestDeterminism:
    def test_same_seed_same_result(self, fc_scheme, default_pop):
        kw = dict(trials=300, seed=7, record_transcripts=True)
        a = run_unlink_game(fc_scheme, default_pop, LEAK_BOTH,
                            MatchTestUnlinkAdversary(), **kw)
        b = run_unlink_game(fc_scheme, default_pop, LEAK_BOTH,
                            MatchTestUnlinkAdversary(), **kw)
        assert a.wins == b.wins
        assert a.transcript_digests == b.transcript_digests

    def test_jobs_invariance(self, fc_scheme, default_pop):
        kw = dict(trials=1200, seed=9, record_transcripts=True)
        a = run_unlink_game(fc_scheme, default_pop, LEAK_BOTH,
                            MatchTestUnlinkAdversary(), jobs=1, **kw)
        b = run_unlink_game(fc_scheme, default_pop, LEAK_BOTH,
                            MatchTestUnlinkAdversary(), jobs=2, **kw)
        assert a.wins == b.wins
        assert a.transcript_digests == b.transcript_digests

    def test_seed_changes_outcomes(self, fc_scheme, default_pop):
        a = run_unlink_game(fc_scheme, default_pop, LEAK_BOTH,
                            MatchTestUnlinkAdversary(), trials=500, seed=1)
        b = run_unlink_game(fc_scheme, default_pop, LEAK_BOTH,
                            MatchTestUnlinkAdversary(), trials=500, seed=2)
        assert a.wins != b.wins


class TestKnownRates:
    def test_plaintext_read_pi_always_wins(self, default_pop):
        scheme = PlaintextScheme(7, tau=0)
        result = run_al_irr_game(scheme, default_pop, LEAK_PI, 0,
                                 ReadViewAdversary("pi"), trials=1500, seed=3)
        assert result.win_rate.point == 1.0
        m0 = metrics.extremal_mr(default_pop, 0)
        assert result.advantage.point == pytest.approx(1.0 - m0.value)

    def test_fc_read_alpha_wins_at_zero_codeword_rate(self, fc_scheme,
                                                      default_pop):
        # exact win probability over the codeword draw: the guess equals
        # the feature only when the zero codeword was drawn
        result = run_al_irr_game(fc_scheme, default_pop, LEAK_AD, 0,
                                 ReadViewAdversary("alpha"), trials=8000,
                                 seed=5, level=0.99)
        assert result.win_rate.ci_low <= 1 / 16 <= result.win_rate.ci_high

    def test_blind_al_advantage_near_zero(self, fc_scheme, default_pop):
        result = run_al_irr_game(fc_scheme, default_pop, LEAK_PI, 1,
                                 blind_al_adversary(default_pop, 1),
                                 trials=8000, seed=7, level=0.99)
        assert result.advantage.ci_low <= 0.0 <= result.advantage.ci_high
        assert result.baseline_mode == "exact"

    def test_blind_pal_advantage_near_zero(self, fc_scheme, default_pop):
        result = run_pal_irr_game(fc_scheme, default_pop, LEAK_PI,
                                  blind_pal_adversary(fc_scheme, default_pop),
                                  trials=8000, seed=9, level=0.99)
        assert result.advantage.ci_low <= 0.0 <= result.advantage.ci_high

    def test_coin_flip_advantage_shrinks(self, fc_scheme, default_pop):
        small = run_unlink_game(fc_scheme, default_pop, LEAK_BOTH,
                                CoinFlipUnlinkAdversary(), trials=200, seed=11)
        large = run_unlink_game(fc_scheme, default_pop, LEAK_BOTH,
                                CoinFlipUnlinkAdversary(), trials=20000, seed=11)
        assert large.advantage.point < 0.02
        assert large.advantage.half_width < small.advantage.half_width

    def test_unrotate_adversary_links_rotation_templates(self):
        rng = np.random.default_rng(1)
        vals = rng.choice(128, size=16, replace=False)
        pop = Population(n=7, flip_prob=0.0, seed=0,
                         centers=tuple(FeatureElement(7, int(v)) for v in vals))
        scheme = RotationScheme(7, tau=0)
        result = run_unlink_game(scheme, pop, LEAK_BOTH, UnrotateAdversary(),
                                 trials=6000, seed=13, level=0.99)
        # wrong only when the two candidate users coincide: advantage 1 - 1/U
        expected = 1.0 - 1.0 / pop.num_users
        assert result.advantage.point > 0.85
        assert result.advantage.ci_low <= expected <= result.advantage.ci_high


class TestCoupledTrials:
    def test_inclusions_and_pal_equality_for_fc(self, fc_scheme, default_pop):
        res = run_coupled_irr_trials(fc_scheme, default_pop, LEAK_PI, 1,
                                     blind_al_adversary(default_pop, 1),
                                     trials=4000, seed=15)
        v = res.inclusion_violations()
        assert v == {"fl_subset_al": 0, "al_subset_pal": 0}
        # at tau = t the acceptance test IS the distance test
        assert np.array_equal(res.wins_al, res.wins_pal)

    def test_read_alpha_coupling(self, fc_scheme, default_pop):
        res = run_coupled_irr_trials(fc_scheme, default_pop, LEAK_AD, 1,
                                     ReadViewAdversary("alpha"),
                                     trials=4000, seed=17)
        v = res.inclusion_violations()
        assert v == {"fl_subset_al": 0, "al_subset_pal": 0}


class TestCrossMatchRates:
    def test_always_zero_rule(self, fc_scheme, default_pop):
        res = est_cross_match_rates(fc_scheme, default_pop, LEAK_BOTH,
                                    CrossComparatorAdversary("always-0"),
                                    trials=400, seed=19)
        assert res.fcmr.point == 1.0
        assert res.fncmr.point == 0.0
        assert res.identity_advantage == pytest.approx(0.0)

    def test_always_one_rule(self, fc_scheme, default_pop):
        res = est_cross_match_rates(fc_scheme, default_pop, LEAK_BOTH,
                                    CrossComparatorAdversary("always-1"),
                                    trials=400, seed=21)
        assert res.fcmr.point == 0.0
        assert res.fncmr.point == 1.0
        assert res.identity_advantage == pytest.approx(0.0)

    def test_error_rates_hit_their_exact_values(self, fc_scheme, default_pop):
        # with the match-test rule on a scheme whose templates accept
        # their own feature, the only route to a false answer is the
        # double-acceptance coin, taken exactly when the cross-user probe
        # is accepted: FCMR = FNCMR = fmr_bp / 2
        from btpeval import exact

        target = exact.enumerator(fc_scheme, default_pop).fmr_bp() / 2.0
        res = est_cross_match_rates(fc_scheme, default_pop, LEAK_BOTH,
                                    CrossComparatorAdversary(), trials=8000,
                                    seed=25, level=0.99)
        assert res.fcmr.ci_low <= target <= res.fcmr.ci_high
        assert res.fncmr.ci_low <= target <= res.fncmr.ci_high

    def test_default_rule_identity_matches_game(self, fc_scheme, default_pop):
        res = est_cross_match_rates(fc_scheme, default_pop, LEAK_BOTH,
                                    CrossComparatorAdversary(), trials=6000,
                                    seed=23)
        se_adv = res.unlink_advantage.half_width / metrics.z_value(0.95)
        se = (res.fcmr.std_error ** 2 + res.fncmr.std_error ** 2
              + se_adv ** 2) ** 0.5
        assert res.identity_gap <= 3 * se + 1e-9
        assert res.identity_advantage > 0.5
