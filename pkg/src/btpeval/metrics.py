"""Recognition and protection metrics: Monte Carlo estimators + exact modes.

Every estimator here has an exhaustive twin in `exact` that the tests hold
it to.  Estimators draw all randomness from streams derived via
(seed, label, chunk_index) with a fixed chunk size, so a result depends
only on (inputs, seed, trials) and never on how chunks were scheduled
across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from . import exact
from .errors import ConfigError, ModeError
from .population import FeatureElement, Population
from .rng import substream
from .schemes import BtpScheme

CHUNK_TRIALS = 1024


# --------------------------------------------------------------------------
# interval arithmetic


def z_value(level: float) -> float:
    if not 0.0 < level < 1.0:
        raise ConfigError(f"confidence level must be in (0,1), got {level}")
    return float(norm.ppf(0.5 + level / 2.0))


def wilson_interval(wins: int, trials: int, level: float = 0.95) -> tuple:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return (0.0, 1.0)
    z = z_value(level)
    phat = wins / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials))
    half /= denom
    lo = 0.0 if wins == 0 else max(0.0, center - half)
    hi = 1.0 if wins == trials else min(1.0, center + half)
    return (lo, hi)


def normal_interval(wins: int, trials: int, level: float = 0.95) -> tuple:
    """Wald interval; kept for comparison, clipped to [0, 1]."""
    if trials <= 0:
        return (0.0, 1.0)
    phat = wins / trials
    half = z_value(level) * math.sqrt(phat * (1 - phat) / trials)
    return (max(0.0, phat - half), min(1.0, phat + half))


INTERVAL_METHODS = {
    "wilson": wilson_interval,
    "normal": normal_interval,
}


def proportion_se(phat: float, trials: int) -> float:
    if trials <= 0:
        return float("inf")
    return math.sqrt(max(phat * (1.0 - phat), 0.0) / trials)


@dataclass(frozen=True)
class AdvantageEstimate:
    """A point estimate with its interval and oracle-query accounting."""

    point: float
    trials: int
    ci_low: float
    ci_high: float
    queries_used: int = 0
    method: str = "wilson"

    def __post_init__(self):
        if self.trials < 0:
            raise ConfigError("trials must be >= 0")
        if not (self.ci_low - 1e-12 <= self.point <= self.ci_high + 1e-12):
            raise ConfigError(
                f"interval [{self.ci_low}, {self.ci_high}] excludes point {self.point}"
            )

    @classmethod
    def from_counts(cls, wins: int, trials: int, level: float = 0.95,
                    queries_used: int = 0,
                    method: str = "wilson") -> "AdvantageEstimate":
        try:
            interval = INTERVAL_METHODS[method]
        except KeyError:
            raise ConfigError(
                f"unknown interval method {method!r}; choose from "
                f"{sorted(INTERVAL_METHODS)}"
            ) from None
        lo, hi = interval(wins, trials, level)
        return cls(point=wins / trials if trials else 0.0, trials=trials,
                   ci_low=lo, ci_high=hi, queries_used=queries_used,
                   method=method)

    @classmethod
    def exact_value(cls, value: float) -> "AdvantageEstimate":
        return cls(point=value, trials=0, ci_low=value, ci_high=value,
                   method="exact")

    def shifted(self, offset: float) -> "AdvantageEstimate":
        return AdvantageEstimate(
            point=self.point + offset, trials=self.trials,
            ci_low=self.ci_low + offset, ci_high=self.ci_high + offset,
            queries_used=self.queries_used, method=self.method,
        )

    @property
    def half_width(self) -> float:
        return (self.ci_high - self.ci_low) / 2.0

    @property
    def std_error(self) -> float:
        return proportion_se(self.point, self.trials)

    def to_dict(self) -> dict:
        return {
            "estimate": self.point,
            "ci": [self.ci_low, self.ci_high],
            "trials": self.trials,
            "queries": self.queries_used,
            "method": self.method,
        }


def absolute_advantage(win_rate: AdvantageEstimate) -> AdvantageEstimate:
    """Map a win-rate estimate through |2w - 1|.

    The map is non-monotone at w = 1/2; an interval straddling it becomes
    [0, max endpoint image].
    """
    lo2, hi2 = 2 * win_rate.ci_low - 1, 2 * win_rate.ci_high - 1
    point = abs(2 * win_rate.point - 1)
    if lo2 <= 0.0 <= hi2:
        lo, hi = 0.0, max(abs(lo2), abs(hi2))
    else:
        lo, hi = sorted((abs(lo2), abs(hi2)))
    return AdvantageEstimate(point=point, trials=win_rate.trials, ci_low=lo,
                             ci_high=hi, queries_used=win_rate.queries_used,
                             method=win_rate.method)


def entropy_bits(rate: float) -> float:
    """-log2 of a rate; infinite for rates <= 0."""
    if rate <= 0.0:
        return float("inf")
    return -math.log2(rate)


# --------------------------------------------------------------------------
# chunked deterministic trial runner


def _kernel_call(args):
    kernel, seed, label, chunk_index, m = args
    return kernel(substream(seed, label, chunk_index), m)


def _run_chunks(kernel, trials: int, seed: int, label: str, jobs: int = 1):
    """Run `trials` trials in fixed-size chunks; returns the list of chunk
    results in chunk order (scheduling independent)."""
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    tasks = []
    for ci, lo in enumerate(range(0, trials, CHUNK_TRIALS)):
        tasks.append((kernel, seed, label, ci, min(CHUNK_TRIALS, trials - lo)))
    if jobs <= 1 or len(tasks) == 1:
        return [_kernel_call(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(_kernel_call, tasks))


def _count_rate(kernel, trials, seed, label, level, jobs) -> AdvantageEstimate:
    wins = sum(_run_chunks(kernel, trials, seed, label, jobs))
    return AdvantageEstimate.from_counts(
        wins, trials, level, queries_used=trials * kernel.queries_per_trial
    )


# --------------------------------------------------------------------------
# trial kernels (top-level, picklable)


@dataclass
class _BaselineFnmrKernel:
    pop: Population
    tau: int
    queries_per_trial: int = 2

    def __call__(self, rng, m):
        us = rng.integers(self.pop.num_users, size=m)
        x = self.pop.sample_batch(us, rng)
        y = self.pop.sample_batch(us, rng)
        return int((np.bitwise_count(x ^ y) > self.tau).sum())


@dataclass
class _BaselineFmrKernel:
    pop: Population
    tau: int
    queries_per_trial: int = 2

    def __call__(self, rng, m):
        us, vs = _distinct_pairs(rng, self.pop.num_users, m)
        x = self.pop.sample_batch(us, rng)
        y = self.pop.sample_batch(vs, rng)
        return int((np.bitwise_count(x ^ y) <= self.tau).sum())


def _distinct_pairs(rng, num_users, m):
    us = rng.integers(num_users, size=m)
    vs = rng.integers(num_users - 1, size=m)
    vs = vs + (vs >= us)
    return us, vs


@dataclass
class _SchemeFnmrKernel:
    scheme: BtpScheme
    pop: Population
    queries_per_trial: int = 2

    def __call__(self, rng, m):
        n = self.pop.n
        us = rng.integers(self.pop.num_users, size=m)
        probes = self.pop.sample_batch(us, rng)
        enrolls = self.pop.sample_batch(us, rng)
        wins = 0
        for i in range(m):
            pt = self.scheme.pie(FeatureElement(n, int(enrolls[i])), rng)
            vid = self.scheme.pir(pt.alpha, FeatureElement(n, int(probes[i])))
            if not self.scheme.pic(pt.pi, vid):
                wins += 1
        return wins


@dataclass
class _FmrTpKernel:
    scheme: BtpScheme
    pop: Population
    factor: str
    queries_per_trial: int = 3

    def __call__(self, rng, m):
        n = self.pop.n
        us, vs = _distinct_pairs(rng, self.pop.num_users, m)
        probes = self.pop.sample_batch(us, rng)
        enr_u = self.pop.sample_batch(us, rng)
        enr_v = self.pop.sample_batch(vs, rng)
        wins = 0
        for i in range(m):
            pt_u = self.scheme.pie(FeatureElement(n, int(enr_u[i])), rng)
            pt_v = self.scheme.pie(FeatureElement(n, int(enr_v[i])), rng)
            x = FeatureElement(n, int(probes[i]))
            if self.factor == "ad":
                win = self.scheme.pic(pt_v.pi, self.scheme.pir(pt_u.alpha, x))
            else:
                win = self.scheme.pic(pt_u.pi, self.scheme.pir(pt_v.alpha, x))
            wins += win
        return wins


@dataclass
class _FmrBpKernel:
    scheme: BtpScheme
    pop: Population
    queries_per_trial: int = 2

    def __call__(self, rng, m):
        n = self.pop.n
        us, vs = _distinct_pairs(rng, self.pop.num_users, m)
        probes = self.pop.sample_batch(us, rng)
        enrolls = self.pop.sample_batch(vs, rng)
        wins = 0
        for i in range(m):
            pt = self.scheme.pie(FeatureElement(n, int(enrolls[i])), rng)
            vid = self.scheme.pir(pt.alpha, FeatureElement(n, int(probes[i])))
            wins += self.scheme.pic(pt.pi, vid)
        return wins


@dataclass
class _FmrDivKernel:
    scheme: BtpScheme
    pop: Population
    queries_per_trial: int = 3

    def __call__(self, rng, m):
        n = self.pop.n
        us = rng.integers(self.pop.num_users, size=m)
        probes = self.pop.sample_batch(us, rng)
        enr_old = self.pop.sample_batch(us, rng)
        enr_new = self.pop.sample_batch(us, rng)
        wins = 0
        for i in range(m):
            pt_old = self.scheme.pie(FeatureElement(n, int(enr_old[i])), rng)
            pt_new = self.scheme.pie(FeatureElement(n, int(enr_new[i])), rng)
            vid = self.scheme.pir(pt_new.alpha, FeatureElement(n, int(probes[i])))
            wins += self.scheme.pic(pt_old.pi, vid)
        return wins


@dataclass
class _MrKernel:
    pop: Population
    x: FeatureElement
    tau: int
    queries_per_trial: int = 1

    def __call__(self, rng, m):
        us = rng.integers(self.pop.num_users, size=m)
        draws = self.pop.sample_batch(us, rng)
        return int((np.bitwise_count(draws ^ np.uint64(self.x.value)) <= self.tau).sum())


@dataclass
class _RmrKernel:
    scheme: BtpScheme
    pop: Population
    x: FeatureElement
    queries_per_trial: int = 1

    def __call__(self, rng, m):
        n = self.pop.n
        us = rng.integers(self.pop.num_users, size=m)
        enrolls = self.pop.sample_batch(us, rng)
        wins = 0
        for i in range(m):
            pt = self.scheme.pie(FeatureElement(n, int(enrolls[i])), rng)
            wins += self.scheme.pic(pt.pi, self.scheme.pir(pt.alpha, self.x))
        return wins


@dataclass
class _PtRateKernel:
    scheme: BtpScheme
    pop: Population
    pt: object
    queries_per_trial: int = 1

    def __call__(self, rng, m):
        n = self.pop.n
        us = rng.integers(self.pop.num_users, size=m)
        probes = self.pop.sample_batch(us, rng)
        wins = 0
        for i in range(m):
            vid = self.scheme.pir(self.pt.alpha, FeatureElement(n, int(probes[i])))
            wins += self.scheme.pic(self.pt.pi, vid)
        return wins


@dataclass
class _PtStatsKernel:
    scheme: BtpScheme
    pop: Population
    trials_inner: int

    @property
    def queries_per_trial(self):
        return 1 + self.trials_inner

    def __call__(self, rng, m):
        n = self.pop.n
        rates = np.empty(m)
        for i in range(m):
            u = int(rng.integers(self.pop.num_users))
            pt = self.scheme.pie(self.pop.sample(u, rng), rng)
            us = rng.integers(self.pop.num_users, size=self.trials_inner)
            probes = self.pop.sample_batch(us, rng)
            wins = 0
            for pv in probes:
                vid = self.scheme.pir(pt.alpha, FeatureElement(n, int(pv)))
                wins += self.scheme.pic(pt.pi, vid)
            rates[i] = wins / self.trials_inner
        return rates


# --------------------------------------------------------------------------
# public estimators


def est_baseline_rates(pop: Population, tau: int, trials: int, seed: int = 0,
                       level: float = 0.95, jobs: int = 1) -> tuple:
    """(FNMR, FMR) of the raw distance comparator at threshold tau."""
    if pop.num_users < 2:
        raise ConfigError("FMR needs at least two users")
    fnmr = _count_rate(_BaselineFnmrKernel(pop, tau), trials, seed,
                       f"fnmr_d<={tau}", level, jobs)
    fmr = _count_rate(_BaselineFmrKernel(pop, tau), trials, seed,
                      f"fmr_d<={tau}", level, jobs)
    return fnmr, fmr


def est_scheme_fnmr(scheme, pop, trials, seed=0, level=0.95, jobs=1):
    return _count_rate(_SchemeFnmrKernel(scheme, pop), trials, seed,
                       "fnmr_scheme", level, jobs)


def est_fmr_tp(scheme, pop, factor: str, trials, seed=0, level=0.95, jobs=1):
    """False match rate for total performance; factor is "ad" or "pi"."""
    if factor not in ("ad", "pi"):
        raise ConfigError(f"factor must be 'ad' or 'pi', got {factor!r}")
    if pop.num_users < 2:
        raise ConfigError("total-performance FMR needs at least two users")
    return _count_rate(_FmrTpKernel(scheme, pop, factor), trials, seed,
                       f"fmr_tp_{factor}", level, jobs)


def est_fmr_bp(scheme, pop, trials, seed=0, level=0.95, jobs=1):
    if pop.num_users < 2:
        raise ConfigError("biometric-performance FMR needs at least two users")
    return _count_rate(_FmrBpKernel(scheme, pop), trials, seed,
                       "fmr_bp", level, jobs)


def est_fmr_div(scheme, pop, trials, seed=0, level=0.95, jobs=1):
    return _count_rate(_FmrDivKernel(scheme, pop), trials, seed,
                       "fmr_div", level, jobs)


def est_mr_of_feature(pop, x, tau, trials, seed=0, level=0.95, jobs=1):
    return _count_rate(_MrKernel(pop, x, tau), trials, seed,
                       f"mr_x_{x.value}_tau{tau}", level, jobs)


def mr_of_feature(pop: Population, x: FeatureElement, tau: int) -> float:
    """Exact per-feature match rate; delegates to the closed-form oracle."""
    return exact.mr_of_feature(pop, x, tau)


def rmr_of_feature(scheme, pop, x, trials, seed=0, level=0.95, jobs=1):
    return _count_rate(_RmrKernel(scheme, pop, x), trials, seed,
                       f"rmr_x_{x.value}", level, jobs)


def pt_match_rate(scheme, pop, pt, trials, seed=0, level=0.95, jobs=1):
    return _count_rate(_PtRateKernel(scheme, pop, pt), trials, seed,
                       "pt_rate", level, jobs)


# --------------------------------------------------------------------------
# extremal features and overlap rates


@dataclass(frozen=True)
class MValue:
    """A maximum of a per-feature rate with the witness that attains it.

    mode "exact" means a full feature scan; "lower_bound" means the
    maximum was taken over a candidate set only.
    """

    value: float
    witness: FeatureElement
    mode: str


def extremal_mr(pop: Population, tau: int, seed: int = 0,
                candidate_draws: int = 256) -> MValue:
    """max over x of MR(x), exact for n <= 12, candidate-set beyond."""
    if pop.n <= exact.EXACT_N_CAP:
        vec = exact.mr_vector(pop, tau)
        best = int(np.argmax(vec))
        return MValue(float(vec[best]), FeatureElement(pop.n, best), "exact")
    rng = substream(seed, "extremal-mr-candidates")
    candidates = list(pop.centers)
    candidates += [pop.sample_mixture(rng) for _ in range(candidate_draws)]
    scored = [(exact.mr_of_feature(pop, c, tau), c) for c in candidates]
    value, witness = max(scored, key=lambda t: t[0])
    return MValue(value, witness, "lower_bound")


def extremal_rmr(scheme: BtpScheme, pop: Population, seed: int = 0,
                 trials: int = 4000, candidate_draws: int = 64,
                 jobs: int = 1) -> MValue:
    """max over x of rMR(x), exact via enumeration for n <= 10."""
    if pop.n <= exact.ENUM_N_CAP:
        vec = exact.enumerator(scheme, pop).rmr_vector()
        best = int(np.argmax(vec))
        return MValue(float(vec[best]), FeatureElement(pop.n, best), "exact")
    rng = substream(seed, "extremal-rmr-candidates")
    candidates = list(pop.centers)
    candidates += [pop.sample_mixture(rng) for _ in range(candidate_draws)]
    best_val, best_x = -1.0, None
    for c in candidates:
        est = rmr_of_feature(scheme, pop, c, trials, seed=seed, jobs=jobs)
        if est.point > best_val:
            best_val, best_x = est.point, c
    return MValue(best_val, best_x, "lower_bound")


@dataclass(frozen=True)
class OverlapRates:
    """Extremes over x of the ball-intersection probability at radius tau."""

    p_tau: float
    q_tau: float
    witness_max: FeatureElement
    witness_min: FeatureElement
    mode: str = "exact"


def overlap_rates(pop: Population, tau: int) -> OverlapRates:
    """Exact (p_tau, q_tau) by scanning all features; n <= 12."""
    vec = exact.overlap_vector(pop, tau)
    imax, imin = int(np.argmax(vec)), int(np.argmin(vec))
    return OverlapRates(float(vec[imax]), float(vec[imin]),
                        FeatureElement(pop.n, imax), FeatureElement(pop.n, imin))


@dataclass(frozen=True)
class OverlapEstimate:
    p_tau: AdvantageEstimate
    q_tau: AdvantageEstimate
    witness_max: FeatureElement
    witness_min: FeatureElement


def est_overlap_rates(pop: Population, tau: int, trials: int, seed: int = 0,
                      level: float = 0.95) -> OverlapEstimate:
    """Monte Carlo (p_tau, q_tau): select the extremal features on one half
    of the budget, re-estimate their rates unbiasedly on the other half."""
    if pop.n > exact.EXACT_N_CAP:
        raise ModeError("overlap estimation scans all features; n <= 12 only")
    size = 1 << pop.n
    xs = np.arange(size, dtype=np.uint64)
    t_sel = trials // 2
    t_est = trials - t_sel
    if t_sel < 1 or t_est < 1:
        raise ConfigError("trials too small to split into select/estimate halves")

    def draw(rng, m):
        us = rng.integers(pop.num_users, size=m)
        return pop.sample_batch(us, rng)

    sel = draw(substream(seed, "overlap-select"), t_sel)
    counts = np.zeros(size, dtype=np.int64)
    for lo in range(0, size, 512):
        hi = min(lo + 512, size)
        counts[lo:hi] = (
            np.bitwise_count(sel[None, :] ^ xs[lo:hi, None]) <= 2 * tau
        ).sum(axis=1)
    imax, imin = int(np.argmax(counts)), int(np.argmin(counts))

    est = draw(substream(seed, "overlap-estimate"), t_est)
    wins_max = int((np.bitwise_count(est ^ xs[imax]) <= 2 * tau).sum())
    wins_min = int((np.bitwise_count(est ^ xs[imin]) <= 2 * tau).sum())
    return OverlapEstimate(
        p_tau=AdvantageEstimate.from_counts(wins_max, t_est, level,
                                            queries_used=trials),
        q_tau=AdvantageEstimate.from_counts(wins_min, t_est, level,
                                            queries_used=trials),
        witness_max=FeatureElement(pop.n, imax),
        witness_min=FeatureElement(pop.n, imin),
    )


# --------------------------------------------------------------------------
# per-template match-rate statistics


@dataclass(frozen=True)
class MatchRateStats:
    """Mean and population standard deviation of per-template match rates."""

    mean: float
    std_dev: float

    def __post_init__(self):
        if not 0.0 <= self.mean <= 1.0 + 1e-12:
            raise ConfigError(f"mean rate {self.mean} outside [0, 1]")
        if self.std_dev < 0.0:
            raise ConfigError("standard deviation must be >= 0")

    @property
    def variation_coeff(self) -> float:
        if self.mean <= 0.0:
            raise ConfigError("variation coefficient undefined for zero mean")
        return self.std_dev / self.mean

    def chebyshev_threshold(self, delta: float) -> float:
        """Rate floor held with probability >= 1 - delta over template draws."""
        if delta <= 0.0:
            raise ConfigError("delta must be positive")
        return self.mean - self.std_dev / math.sqrt(delta)


@dataclass(frozen=True, eq=False)
class PtMatchStatsResult:
    stats: MatchRateStats
    trials_outer: int
    trials_inner: int
    mean_ci: tuple
    std_ci: tuple
    queries_used: int
    rates: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        s = self.stats
        cv = None
        if s.mean > 0.0:
            cv = s.variation_coeff
        return {
            "mean": s.mean,
            "std_dev": s.std_dev,
            "variation_coeff": cv,
            "mean_ci": list(self.mean_ci),
            "std_ci": list(self.std_ci),
            "trials_outer": self.trials_outer,
            "trials_inner": self.trials_inner,
        }


def pt_match_stats(scheme, pop, trials_outer: int, trials_inner: int,
                   seed: int = 0, level: float = 0.95,
                   jobs: int = 1) -> PtMatchStatsResult:
    """Draw templates, rate each against random captures, summarize.

    The spread of the estimated rates overstates the true template-to-
    template deviation by the inner binomial noise; the reported std_dev
    subtracts that noise term (clipped at zero).
    """
    if trials_inner < 2:
        raise ConfigError("trials_inner must be >= 2")
    kernel = _PtStatsKernel(scheme, pop, trials_inner)
    parts = _run_chunks(kernel, trials_outer, seed, "pt_stats", jobs)
    rates = np.concatenate(parts)
    no = len(rates)
    mean = float(rates.mean())
    z = z_value(level)
    if no > 1:
        se_mean = float(rates.std(ddof=1)) / math.sqrt(no)
    else:
        se_mean = float("inf")
    s2 = float(rates.var(ddof=1)) if no > 1 else 0.0
    noise = float(np.mean(rates * (1.0 - rates))) / (trials_inner - 1)
    sigma2 = max(s2 - noise, 0.0)
    sigma = math.sqrt(sigma2)
    centered = rates - mean
    m4 = float(np.mean(centered ** 4))
    se_s2 = math.sqrt(max(m4 - s2 * s2, 0.0) / no) if no > 0 else float("inf")
    lo2, hi2 = max(sigma2 - z * se_s2, 0.0), sigma2 + z * se_s2
    return PtMatchStatsResult(
        stats=MatchRateStats(mean=min(mean, 1.0), std_dev=sigma),
        trials_outer=no,
        trials_inner=trials_inner,
        mean_ci=(mean - z * se_mean, mean + z * se_mean),
        std_ci=(math.sqrt(lo2), math.sqrt(hi2)),
        queries_used=no * kernel.queries_per_trial,
        rates=rates,
    )


def exact_pt_match_stats(scheme, pop) -> MatchRateStats:
    """Enumeration twin of `pt_match_stats`."""
    mean, sigma = exact.enumerator(scheme, pop).pt_match_stats()
    return MatchRateStats(mean=mean, std_dev=sigma)
