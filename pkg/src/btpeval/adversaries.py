"""Built-in adversaries for the inversion and distinguishing games.

Baselines (blind argmax, view readers, coin flip) pin the trivial ends of
the advantage scale.  The constructive adversaries realize the
unachievability arguments: the repeated-sampling inverter wins the
full-leakage acceptance game whenever per-template match rates
concentrate, and the match-test distinguisher converts template
accept/reject behavior into linkage with advantage 1 - MR.  The reduction
wrapper turns any inversion adversary into a distinguisher, which is what
the unlinkability-implies-irreversibility bound exercises.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import exact
from .errors import ConfigError, ContractError, VariationTooHighError
from .games import GameParams, IrrAdversary, UnlinkAdversary
from .metrics import MatchRateStats, extremal_mr, extremal_rmr
from .population import FeatureElement, hamming_distance, neighborhood_overlap
from .schemes import LEAK_BOTH


# --------------------------------------------------------------------------
# repeated-sampling inverter


def compute_n_delta(mu: float, delta: float, gamma: float) -> int:
    """Smallest N >= 1 with (1 - mu)^N < (gamma - delta) / (1 - delta).

    Evaluated in log space so tiny mu cannot underflow the power.
    """
    if not 0.0 < mu <= 1.0:
        raise ConfigError(f"mu must be in (0, 1], got {mu}")
    target = (gamma - delta) / (1.0 - delta)
    if not 0.0 < target < 1.0:
        raise ConfigError(f"(gamma-delta)/(1-delta) = {target} out of range")
    if mu == 1.0:
        return 1
    big_l = math.log1p(-mu)
    big_t = math.log(target)
    n = max(1, math.floor(big_t / big_l))
    while n * big_l >= big_t:
        n += 1
    while n > 1 and (n - 1) * big_l < big_t:
        n -= 1
    return n


@dataclass(frozen=True)
class PalSamplerConfig:
    """Parameters of the repeated-sampling inverter.

    Requires C^2 < delta < gamma < 1 where C is the variation coefficient
    of the per-template match rate; mu = mean - sigma / sqrt(delta) is the
    rate floor Chebyshev guarantees with probability >= 1 - delta, and
    n_delta the number of sampling rounds that makes the residual failure
    probability small enough for an overall win rate above 1 - gamma.
    """

    mr_mean: float
    sigma: float
    delta: float
    gamma: float
    mu: float
    n_delta: int

    @classmethod
    def from_stats(cls, stats: MatchRateStats, delta: float,
                   gamma: float) -> "PalSamplerConfig":
        if stats.mean <= 0.0:
            raise ConfigError("mean match rate must be positive")
        c2 = stats.variation_coeff ** 2
        if delta <= c2:
            raise VariationTooHighError(
                f"delta = {delta} must exceed C^2 = {c2:.6f}"
            )
        if not delta < gamma < 1.0:
            raise ConfigError(f"need delta < gamma < 1, got {delta}, {gamma}")
        mu = stats.chebyshev_threshold(delta)
        n_delta = compute_n_delta(mu, delta, gamma)
        return cls(mr_mean=stats.mean, sigma=stats.std_dev, delta=delta,
                   gamma=gamma, mu=mu, n_delta=n_delta)

    def __post_init__(self):
        if not 0.0 < self.mu <= 1.0:
            raise ConfigError(f"mu = {self.mu} out of (0, 1]")
        if self.n_delta < 1:
            raise ConfigError("n_delta must be >= 1")


class PalSamplerAdversary(IrrAdversary):
    """Full-leakage inverter: resample random users' captures until the
    comparator accepts one against the leaked template, up to n_delta
    rounds; needs the whole template to run the acceptance test."""

    name = "pal-sampler"

    def __init__(self, cfg: PalSamplerConfig):
        self.cfg = cfg

    def phase1(self, params, leak, tau, oracle, rng):
        if leak != LEAK_BOTH:
            raise ContractError("the sampling inverter needs both template parts")
        return params

    def phase2(self, state, view, oracle, rng):
        params: GameParams = state
        scheme, pop = params.scheme, params.population
        x_prime = None
        for _ in range(self.cfg.n_delta):
            v = int(rng.integers(pop.num_users))
            x_prime = oracle.sample(v)
            if scheme.pic(view.pi, scheme.pir(view.alpha, x_prime)):
                return x_prime
        return x_prime


# --------------------------------------------------------------------------
# blind and reading baselines


class BlindArgmaxAdversary(IrrAdversary):
    """Ignores the leaked view and always answers a fixed best-rate feature."""

    name = "blind"

    def __init__(self, guess: FeatureElement):
        self.guess = guess

    def phase1(self, params, leak, tau, oracle, rng):
        return None

    def phase2(self, state, view, oracle, rng):
        return self.guess


def blind_al_adversary(pop, tau: int) -> BlindArgmaxAdversary:
    """Blind baseline for the distance game: argmax of the match rate."""
    return BlindArgmaxAdversary(extremal_mr(pop, tau).witness)


def blind_pal_adversary(scheme, pop) -> BlindArgmaxAdversary:
    """Blind baseline for the acceptance game: argmax of the reverse match rate."""
    return BlindArgmaxAdversary(extremal_rmr(scheme, pop).witness)


class ReadViewAdversary(IrrAdversary):
    """Returns one leaked field verbatim as the guess (only meaningful for
    schemes whose template fields live in the feature space)."""

    def __init__(self, which: str):
        if which not in ("pi", "alpha"):
            raise ConfigError("which must be 'pi' or 'alpha'")
        self.which = which
        self.name = f"read-{'pi' if which == 'pi' else 'alpha'}"

    def phase1(self, params, leak, tau, oracle, rng):
        return None

    def phase2(self, state, view, oracle, rng):
        value = view.pi if self.which == "pi" else view.alpha
        if self.which == "pi" and not view.has_pi:
            raise ContractError("view does not carry the identifier")
        if self.which == "alpha" and not view.has_ad:
            raise ContractError("view does not carry the auxiliary data")
        if not isinstance(value, FeatureElement):
            raise ContractError(f"leaked {self.which} is not a feature element")
        return value


class SamplerIrrAdversary(IrrAdversary):
    """Oracle-driven candidate picker: draws `num_queries` captures from
    random users and answers the candidate with the highest exact match
    rate at the game threshold.  Works for any leak set (never reads the
    view), so its success can only approach the blind optimum from below.
    """

    name = "sampler"

    def __init__(self, num_queries: int = 16, fallback_tau: int = 0):
        if num_queries < 1:
            raise ConfigError("num_queries must be >= 1")
        self.num_queries = num_queries
        self.fallback_tau = fallback_tau
        self._scores = {}

    def phase1(self, params, leak, tau, oracle, rng):
        return (params, self.fallback_tau if tau is None else tau)

    def phase2(self, state, view, oracle, rng):
        params, tau = state
        pop = params.population
        best, best_score = None, -1.0
        for _ in range(self.num_queries):
            cand = oracle.sample(int(rng.integers(pop.num_users)))
            key = (cand.value, tau)
            score = self._scores.get(key)
            if score is None:
                score = exact.mr_of_feature(pop, cand, tau)
                self._scores[key] = score
            if score > best_score:
                best, best_score = cand, score
        return best


# --------------------------------------------------------------------------
# distinguishers


def _match_test_decision(scheme, view_prime, x0, x1, rng) -> int:
    """Accept/reject probing of the second template: a non-match on x1
    pins the mated case, a non-match on x0 pins the non-mated case,
    double acceptance falls back to a coin."""
    r1 = scheme.pic(view_prime.pi, scheme.pir(view_prime.alpha, x1))
    if not r1:
        return 0
    r0 = scheme.pic(view_prime.pi, scheme.pir(view_prime.alpha, x0))
    if not r0:
        return 1
    return int(rng.integers(2))


class MatchTestUnlinkAdversary(UnlinkAdversary):
    """Distinguisher that submits three independent random captures and
    decides by testing the second template against x1 then x0."""

    name = "match-test"

    def phase1(self, params, leak, oracle, rng):
        if leak != LEAK_BOTH:
            raise ContractError("the match-test distinguisher needs both parts")
        pop = params.population
        users = [int(rng.integers(pop.num_users)) for _ in range(3)]
        x, x0, x1 = (oracle.sample(u) for u in users)
        return x, x0, x1, (params, x, x0, x1)

    def phase2(self, state, view, view_prime, oracle, rng):
        params, x, x0, x1 = state
        return _match_test_decision(params.scheme, view_prime, x0, x1, rng)


class CoinFlipUnlinkAdversary(UnlinkAdversary):
    """Pure guessing baseline."""

    name = "coin"

    def phase1(self, params, leak, oracle, rng):
        pop = params.population
        users = [int(rng.integers(pop.num_users)) for _ in range(3)]
        x, x0, x1 = (oracle.sample(u) for u in users)
        return x, x0, x1, None

    def phase2(self, state, view, view_prime, oracle, rng):
        return int(rng.integers(2))


def match_test_rule(params, state_xs, view, view_prime, oracle, rng) -> int:
    """Default cross-comparator rule; degrades to a coin when the leak set
    hides a field the acceptance test needs."""
    if not (view_prime.has_pi and view_prime.has_ad):
        return int(rng.integers(2))
    _, x0, x1 = state_xs
    return _match_test_decision(params.scheme, view_prime, x0, x1, rng)


def always_zero_rule(params, state_xs, view, view_prime, oracle, rng) -> int:
    return 0


def always_one_rule(params, state_xs, view, view_prime, oracle, rng) -> int:
    return 1


def coin_rule(params, state_xs, view, view_prime, oracle, rng) -> int:
    return int(rng.integers(2))


COMPARATOR_RULES = {
    "match-test": match_test_rule,
    "always-0": always_zero_rule,
    "always-1": always_one_rule,
    "coin": coin_rule,
}


class CrossComparatorAdversary(UnlinkAdversary):
    """The error-rate probe: phase 1 picks a distinct user pair, samples
    the first user twice (x and x0) and the second once (x1); phase 2
    applies a pluggable decision rule to the views."""

    def __init__(self, rule: str = "match-test"):
        if rule not in COMPARATOR_RULES:
            raise ConfigError(
                f"unknown comparator rule {rule!r}; choose from "
                f"{sorted(COMPARATOR_RULES)}"
            )
        self.rule_name = rule
        self.name = f"cross-comparator[{rule}]"

    def phase1(self, params, leak, oracle, rng):
        pop = params.population
        if pop.num_users < 2:
            raise ConfigError("cross-comparison needs at least two users")
        u = int(rng.integers(pop.num_users))
        v = int(rng.integers(pop.num_users - 1))
        if v >= u:
            v += 1
        x = oracle.sample(u)
        x0 = oracle.sample(u)
        x1 = oracle.sample(v)
        return x, x0, x1, (params, (x, x0, x1))

    def phase2(self, state, view, view_prime, oracle, rng):
        params, xs = state
        return COMPARATOR_RULES[self.rule_name](params, xs, view, view_prime,
                                                oracle, rng)


class ReductionUnlinkAdversary(UnlinkAdversary):
    """Wraps an inversion adversary into a distinguisher.

    Phase 1 runs the inner phase 1 and submits three independent random
    captures.  Phase 2 only acts when the challenge balls around x0 and x1
    are disjoint: it asks the inner adversary to invert the second
    template and votes for whichever challenge feature the guess lands
    near; everything else is a coin.  The first view is never inspected.
    """

    def __init__(self, inner: IrrAdversary, tau: int):
        if tau < 0:
            raise ConfigError("tau must be >= 0")
        self.inner = inner
        self.tau = tau
        self.name = f"reduction[{getattr(inner, 'name', 'custom')}]"

    def phase1(self, params, leak, oracle, rng):
        inner_state = self.inner.phase1(params, leak, self.tau, oracle, rng)
        pop = params.population
        users = [int(rng.integers(pop.num_users)) for _ in range(3)]
        x, x0, x1 = (oracle.sample(u) for u in users)
        return x, x0, x1, ((x, x0, x1), inner_state)

    def phase2(self, state, view, view_prime, oracle, rng):
        (x, x0, x1), inner_state = state
        if neighborhood_overlap(x0, x1, self.tau):
            return int(rng.integers(2))
        guess = self.inner.phase2(inner_state, view_prime, oracle, rng)
        if hamming_distance(x0, guess) <= self.tau:
            return 0
        if hamming_distance(x1, guess) <= self.tau:
            return 1
        return int(rng.integers(2))
