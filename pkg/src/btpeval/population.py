"""Hamming feature space, user population model, and the sampling oracle.

The feature space is the n-cube {0,1}^n with the Hamming distance (a
semimetric: non-negative, zero exactly on equal points, symmetric).  Each
user u owns a center template c_u; a fresh capture from u flips every bit
of c_u independently with probability p.  `SamplingOracle` wraps the
population behind a query-counted interface so games can charge adversary
queries against a budget.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceededError, ConfigError, DimensionError
from .rng import substream


@dataclass(frozen=True, slots=True)
class FeatureElement:
    """A packed bit vector in {0,1}^n.

    Bit i of `value` is coordinate i, so the bitstring rendering puts
    coordinate 0 leftmost: FeatureElement(7, 0b0000101) <-> "1010000".
    """

    n: int
    value: int

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError(f"feature dimension must be >= 1, got {self.n}")
        if not 0 <= self.value < (1 << self.n):
            raise ConfigError(f"value {self.value} out of range for {self.n} bits")

    @classmethod
    def from_bits(cls, bits) -> "FeatureElement":
        bits = list(bits)
        value = sum(1 << i for i, b in enumerate(bits) if b)
        return cls(len(bits), value)

    @classmethod
    def from_string(cls, s: str) -> "FeatureElement":
        if set(s) - {"0", "1"}:
            raise ConfigError(f"not a bitstring: {s!r}")
        return cls.from_bits(int(c) for c in s)

    def bit(self, i: int) -> int:
        return (self.value >> i) & 1

    @property
    def bits(self) -> tuple:
        return tuple((self.value >> i) & 1 for i in range(self.n))

    def __xor__(self, other: "FeatureElement") -> "FeatureElement":
        if self.n != other.n:
            raise DimensionError(f"dimension mismatch: {self.n} != {other.n}")
        return FeatureElement(self.n, self.value ^ other.value)

    def rotate(self, r: int) -> "FeatureElement":
        """Cyclic coordinate shift: coordinate i moves to (i + r) mod n."""
        r %= self.n
        mask = (1 << self.n) - 1
        v = ((self.value << r) | (self.value >> (self.n - r))) & mask if r else self.value
        return FeatureElement(self.n, v)

    def __str__(self) -> str:
        return "".join(str((self.value >> i) & 1) for i in range(self.n))


def hamming_distance(a: FeatureElement, b: FeatureElement) -> int:
    """Number of differing coordinates; the semimetric of the space."""
    if a.n != b.n:
        raise DimensionError(f"dimension mismatch: {a.n} != {b.n}")
    return (a.value ^ b.value).bit_count()


def neighborhood_overlap(x0: FeatureElement, x1: FeatureElement, tau: int) -> bool:
    """Whether the radius-tau balls around x0 and x1 intersect.

    On the Hamming cube two balls of radius tau intersect exactly when
    d(x0, x1) <= 2*tau (walk from x0 toward x1 and stop at a midpoint).
    """
    if tau < 0:
        raise ConfigError(f"tau must be >= 0, got {tau}")
    return hamming_distance(x0, x1) <= 2 * tau


@dataclass(frozen=True)
class Population:
    """The user set with its per-user capture distributions.

    `centers` holds one template per user; `flip_prob` is the per-bit
    capture noise.  Immutable after construction and safe to share across
    workers; all sampling goes through caller-supplied Generators.
    """

    n: int
    flip_prob: float
    seed: int
    centers: tuple

    def __post_init__(self):
        if self.num_users < 2:
            raise ConfigError(f"need at least 2 users, got {self.num_users}")
        if not 0.0 <= self.flip_prob < 0.5:
            raise ConfigError(f"flip_prob must be in [0, 0.5), got {self.flip_prob}")
        for c in self.centers:
            if c.n != self.n:
                raise DimensionError(f"center has {c.n} bits, expected {self.n}")

    @property
    def num_users(self) -> int:
        return len(self.centers)

    def center(self, u: int) -> FeatureElement:
        return self.centers[u]

    def _noise_mask(self, rng: np.random.Generator) -> int:
        bits = rng.random(self.n) < self.flip_prob
        if not bits.any():
            return 0
        return int((bits * (1 << np.arange(self.n, dtype=np.uint64))).sum())

    def sample(self, u: int, rng: np.random.Generator) -> FeatureElement:
        """One capture from user u: the center with independent bit flips."""
        c = self.centers[u]
        return FeatureElement(self.n, c.value ^ self._noise_mask(rng))

    def sample_mixture(self, rng: np.random.Generator) -> FeatureElement:
        """One capture from a uniformly random user."""
        return self.sample(int(rng.integers(self.num_users)), rng)

    def sample_batch(self, us: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Vectorized captures (packed uint64 values) for a user-index array."""
        m = len(us)
        bits = rng.random((m, self.n)) < self.flip_prob
        powers = (1 << np.arange(self.n, dtype=np.uint64))
        masks = (bits.astype(np.uint64) * powers).sum(axis=1)
        cvals = np.array([c.value for c in self.centers], dtype=np.uint64)
        return cvals[np.asarray(us)] ^ masks

    def feature_probability(self, u: int, x: FeatureElement) -> float:
        """P(X_u = x) = p^d * (1-p)^(n-d) with d = d(x, c_u)."""
        d = hamming_distance(x, self.centers[u])
        p = self.flip_prob
        return (p ** d) * ((1.0 - p) ** (self.n - d))

    def to_config(self) -> dict:
        return {
            "n": self.n,
            "U": self.num_users,
            "p": self.flip_prob,
            "seed": self.seed,
            "centers": [str(c) for c in self.centers],
        }

    @classmethod
    def from_config(cls, cfg: dict) -> "Population":
        if "centers" in cfg and cfg["centers"] is not None:
            centers = tuple(FeatureElement.from_string(s) for s in cfg["centers"])
            pop = cls(
                n=int(cfg["n"]),
                flip_prob=float(cfg["p"]),
                seed=int(cfg.get("seed", 0)),
                centers=centers,
            )
            if "U" in cfg and int(cfg["U"]) != pop.num_users:
                raise ConfigError(
                    f"config says U={cfg['U']} but {pop.num_users} centers listed"
                )
            return pop
        return generate_population(
            n=int(cfg["n"]),
            num_users=int(cfg["U"]),
            flip_prob=float(cfg["p"]),
            seed=int(cfg.get("seed", 0)),
        )


def generate_population(
    n: int, num_users: int, flip_prob: float, seed: int
) -> Population:
    """Draw `num_users` centers independently and uniformly from {0,1}^n.

    Deterministic given `seed`; the centers come from a stream derived
    from (seed, "population") so later consumers of the same seed do not
    disturb them.
    """
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    if num_users < 2:
        raise ConfigError(f"U must be >= 2, got {num_users}")
    if not 0.0 <= flip_prob < 0.5:
        raise ConfigError(f"p must be in [0, 0.5), got {flip_prob}")
    rng = substream(seed, "gen")
    centers = []
    for _ in range(num_users):
        bits = rng.integers(0, 2, size=n)
        value = int((bits.astype(np.uint64) * (1 << np.arange(n, dtype=np.uint64))).sum())
        centers.append(FeatureElement(n, value))
    return Population(n=n, flip_prob=flip_prob, seed=seed, centers=tuple(centers))


class SamplingOracle:
    """Query-counted access to the population's capture distributions.

    One oracle per game role per trial; `query_count` is monotone and may
    never pass `query_budget`.
    """

    def __init__(self, population: Population, rng: np.random.Generator,
                 query_budget: int = 10**6):
        self.population = population
        self.rng = rng
        self.query_budget = int(query_budget)
        self.query_count = 0

    def sample(self, u: int) -> FeatureElement:
        if not 0 <= u < self.population.num_users:
            raise IndexError(f"unknown user {u}")
        if self.query_count >= self.query_budget:
            raise BudgetExceededError(
                f"query budget of {self.query_budget} exhausted"
            )
        self.query_count += 1
        return self.population.sample(u, self.rng)

    @property
    def remaining(self) -> int:
        return self.query_budget - self.query_count
