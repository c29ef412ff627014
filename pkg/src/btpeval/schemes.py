"""Template-protection schemes and the leak-set machinery.

A scheme is four algorithms: `gen` (handled by scheme construction from a
config), `pie` (randomized encoder: feature element -> protected template
(pi, alpha)), `pir` (deterministic: auxiliary data + fresh capture ->
verification identifier), and `pic` (deterministic: reference identifier +
verification identifier -> match / non-match).

Three reference schemes are provided:

* fuzzy commitment over a linear code: pi is a 128-bit digest of a random
  codeword w, alpha = x XOR w; verification decodes x' XOR alpha and
  matches exactly when the probe lies within the decoding radius of the
  enrolled feature.
* cyclic rotation: a cancelable transform that is a Hamming isometry and
  is trivially invertible from the full template (a deliberately weak
  baseline for irreversibility experiments).
* plaintext: stores the feature verbatim; the worst case.
"""

from __future__ import annotations

import hashlib
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError, ContractError, DimensionError
from .population import FeatureElement, hamming_distance


class _RejectId:
    """Distinguished verification identifier for decode failure.

    A singleton object outside every identifier space, so it can never
    collide with a digest or a feature element.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "REJECT"


REJECT = _RejectId()


@dataclass(frozen=True, slots=True)
class ProtectedTemplate:
    """The stored pair: reference identifier `pi` and auxiliary data `alpha`."""

    pi: object
    alpha: object


@dataclass(frozen=True, slots=True)
class LeakSet:
    """Nonempty subset of {PI, AD}: which template parts the adversary sees."""

    pi: bool
    ad: bool

    def __post_init__(self):
        if not (self.pi or self.ad):
            raise ContractError("leak set must be nonempty")

    @classmethod
    def parse(cls, s: str) -> "LeakSet":
        parts = {p.strip().lower() for p in s.replace(",", "+").split("+") if p.strip()}
        unknown = parts - {"pi", "ad"}
        if unknown or not parts:
            raise ConfigError(f"cannot parse leak set {s!r} (use pi, ad, or pi+ad)")
        return cls(pi="pi" in parts, ad="ad" in parts)

    def __str__(self) -> str:
        return "+".join(p for p, on in (("pi", self.pi), ("ad", self.ad)) if on)


LEAK_PI = LeakSet(pi=True, ad=False)
LEAK_AD = LeakSet(pi=False, ad=True)
LEAK_BOTH = LeakSet(pi=True, ad=True)


@dataclass(frozen=True, slots=True)
class PtView:
    """What the adversary actually receives: the leaked template fields."""

    pi: object = None
    alpha: object = None
    has_pi: bool = False
    has_ad: bool = False

    def __post_init__(self):
        if not (self.has_pi or self.has_ad):
            raise ContractError("view must carry at least one field")


def leak_view(pt, leak: LeakSet) -> PtView:
    """Project a protected template onto a leak set.

    Also accepts an existing view, in which case the requested fields must
    be present (so re-projecting with the same leak set is the identity).
    """
    if isinstance(pt, PtView):
        if (leak.pi and not pt.has_pi) or (leak.ad and not pt.has_ad):
            raise ContractError("view does not carry the requested fields")
        src_pi, src_ad = pt.pi, pt.alpha
    else:
        src_pi, src_ad = pt.pi, pt.alpha
    return PtView(
        pi=src_pi if leak.pi else None,
        alpha=src_ad if leak.ad else None,
        has_pi=leak.pi,
        has_ad=leak.ad,
    )


def _int_to_bytes(value: int, n_bits: int) -> bytes:
    return value.to_bytes((n_bits + 7) // 8, "little")


def blake128(data: bytes) -> bytes:
    """Default 128-bit digest used for pseudonymous identifiers."""
    return hashlib.blake2b(data, digest_size=16).digest()


@dataclass(frozen=True)
class LinearCode:
    """Binary linear [n, k] code with an exhaustive bounded-distance decoder.

    Codewords are packed ints (coordinate i = bit i).  Construction
    enumerates all 2^k codewords, measures the true minimum distance, and
    refuses decoding radii t with 2t + 1 > d_min.
    """

    n_code: int
    k_code: int
    generator_rows: tuple
    t: int

    def __post_init__(self):
        if self.k_code < 1 or self.n_code < 1:
            raise ConfigError("code dimensions must be positive")
        if self.k_code > 16:
            raise ConfigError("codeword enumeration is capped at k <= 16")
        if len(self.generator_rows) != self.k_code:
            raise ConfigError("generator must have k rows")
        for row in self.generator_rows:
            if not 0 <= row < (1 << self.n_code):
                raise ConfigError("generator row out of range")
        object.__setattr__(self, "_codewords", tuple(self._enumerate()))
        dmin = min(w.bit_count() for w in self._codewords[1:])
        object.__setattr__(self, "min_distance", dmin)
        if 2 * self.t + 1 > dmin:
            raise ConfigError(
                f"decoding radius t={self.t} too large for minimum distance {dmin}"
            )
        table = None
        if self.n_code <= 16:
            ys = np.arange(1 << self.n_code, dtype=np.uint64)
            table = np.full(1 << self.n_code, -1, dtype=np.int32)
            for idx, w in enumerate(self._codewords):
                table[np.bitwise_count(ys ^ np.uint64(w)) <= self.t] = idx
        object.__setattr__(self, "_decode_table", table)

    def _enumerate(self):
        for m in range(1 << self.k_code):
            w = 0
            for i in range(self.k_code):
                if (m >> i) & 1:
                    w ^= self.generator_rows[i]
            yield w

    @property
    def codewords(self) -> tuple:
        return self._codewords

    def encode(self, message: int) -> int:
        if not 0 <= message < (1 << self.k_code):
            raise ConfigError(f"message {message} out of range")
        return self._codewords[message]

    def decode_int(self, y: int):
        """Unique codeword within distance t of y, or None."""
        if self._decode_table is not None:
            idx = int(self._decode_table[y])
            return None if idx < 0 else self._codewords[idx]
        for w in self._codewords:
            if (w ^ y).bit_count() <= self.t:
                return w
        return None

    @classmethod
    def from_bitstrings(cls, rows, t: int) -> "LinearCode":
        n_code = len(rows[0])
        packed = []
        for row in rows:
            if len(row) != n_code:
                raise ConfigError("generator rows have unequal length")
            packed.append(FeatureElement.from_string(row).value)
        return cls(n_code=n_code, k_code=len(rows), generator_rows=tuple(packed), t=t)


@lru_cache(maxsize=None)
def hamming_7_4(t: int = 1) -> LinearCode:
    """The perfect [7,4,3] code used by the default fuzzy commitment."""
    return LinearCode.from_bitstrings(
        ["1000110", "0100101", "0010011", "0001111"], t=t
    )


def bounded_distance_decode(code: LinearCode, y: FeatureElement):
    """Decode y to the unique codeword within distance t, or None (reject)."""
    if y.n != code.n_code:
        raise DimensionError(f"received word has {y.n} bits, code expects {code.n_code}")
    w = code.decode_int(y.value)
    return None if w is None else FeatureElement(code.n_code, w)


class BtpScheme(ABC):
    """Contract shared by all schemes; `pir` and `pic` are deterministic."""

    name: str
    feature_dim: int

    @abstractmethod
    def pie(self, x: FeatureElement, rng: np.random.Generator) -> ProtectedTemplate:
        """Randomized enrollment: feature element -> protected template."""

    @abstractmethod
    def pir(self, alpha, x_prime: FeatureElement):
        """Deterministic verification identifier from (alpha, fresh capture)."""

    @abstractmethod
    def pic(self, pi, pi_prime) -> bool:
        """True for match, False for non-match."""

    @abstractmethod
    def pie_support(self, x: FeatureElement):
        """All (probability, template) outcomes of pie(x); exact enumeration hook."""

    def guaranteed_match_radius(self):
        """Largest tau with: d(x, x') <= tau implies pic accepts a template of x.

        None when the scheme carries no such guarantee.
        """
        return None

    def threshold_compatible(self, tau: int) -> bool:
        r = self.guaranteed_match_radius()
        return r is not None and tau <= r

    def describe(self) -> dict:
        return {"scheme": self.name, "n": self.feature_dim}

    def _check_dim(self, x: FeatureElement):
        if x.n != self.feature_dim:
            raise DimensionError(
                f"feature has {x.n} bits, scheme expects {self.feature_dim}"
            )


class FuzzyCommitmentScheme(BtpScheme):
    """Code-offset construction: pi = H(w), alpha = x XOR w for random w.

    With the perfect [7,4] default, verification matches exactly when
    d(x, x') <= t, independent of the codeword draw.
    """

    name = "fc"

    def __init__(self, code: LinearCode, hash_fn=blake128):
        self.code = code
        self.feature_dim = code.n_code
        self.hash_fn = hash_fn
        self._digests = tuple(
            hash_fn(_int_to_bytes(w, code.n_code)) for w in code.codewords
        )
        self._digest_of = dict(zip(code.codewords, self._digests))

    def pie(self, x, rng):
        self._check_dim(x)
        m = int(rng.integers(1 << self.code.k_code))
        w = self.code.codewords[m]
        return ProtectedTemplate(
            pi=self._digests[m], alpha=FeatureElement(x.n, x.value ^ w)
        )

    def pir(self, alpha, x_prime):
        self._check_dim(x_prime)
        if alpha.n != self.feature_dim:
            raise DimensionError("auxiliary data has wrong length")
        w = self.code.decode_int(x_prime.value ^ alpha.value)
        if w is None:
            return REJECT
        return self._digest_of[w]

    def pic(self, pi, pi_prime):
        if pi is REJECT or pi_prime is REJECT:
            return False
        return pi == pi_prime

    def pie_support(self, x):
        self._check_dim(x)
        p = 1.0 / (1 << self.code.k_code)
        return [
            (p, ProtectedTemplate(pi=self._digests[m],
                                  alpha=FeatureElement(x.n, x.value ^ w)))
            for m, w in enumerate(self.code.codewords)
        ]

    def guaranteed_match_radius(self):
        return self.code.t

    def describe(self):
        return {
            "scheme": self.name,
            "n": self.feature_dim,
            "code": {"n": self.code.n_code, "k": self.code.k_code, "t": self.code.t},
        }


class RotationScheme(BtpScheme):
    """Cancelable transform: pi = rotate(x, r), alpha = r, match on distance.

    Rotations are Hamming isometries, so recognition survives the
    transform; the full template inverts trivially via rotate(pi, -alpha).
    """

    name = "rot"

    def __init__(self, n: int, tau: int):
        if n < 1:
            raise ConfigError("n must be >= 1")
        if tau < 0:
            raise ConfigError("tau must be >= 0")
        self.feature_dim = n
        self.tau = tau

    def pie(self, x, rng):
        self._check_dim(x)
        r = int(rng.integers(self.feature_dim))
        return ProtectedTemplate(pi=x.rotate(r), alpha=r)

    def pir(self, alpha, x_prime):
        self._check_dim(x_prime)
        return x_prime.rotate(int(alpha))

    def pic(self, pi, pi_prime):
        if pi is REJECT or pi_prime is REJECT:
            return False
        return hamming_distance(pi, pi_prime) <= self.tau

    def pie_support(self, x):
        self._check_dim(x)
        p = 1.0 / self.feature_dim
        return [
            (p, ProtectedTemplate(pi=x.rotate(r), alpha=r))
            for r in range(self.feature_dim)
        ]

    def guaranteed_match_radius(self):
        return self.tau

    def describe(self):
        return {"scheme": self.name, "n": self.feature_dim, "tau": self.tau}


class PlaintextScheme(BtpScheme):
    """No protection at all: pi is the feature, alpha an empty sentinel."""

    name = "plain"

    def __init__(self, n: int, tau: int):
        if n < 1:
            raise ConfigError("n must be >= 1")
        if tau < 0:
            raise ConfigError("tau must be >= 0")
        self.feature_dim = n
        self.tau = tau

    def pie(self, x, rng):
        self._check_dim(x)
        return ProtectedTemplate(pi=x, alpha=None)

    def pir(self, alpha, x_prime):
        self._check_dim(x_prime)
        return x_prime

    def pic(self, pi, pi_prime):
        if pi is REJECT or pi_prime is REJECT:
            return False
        return hamming_distance(pi, pi_prime) <= self.tau

    def pie_support(self, x):
        self._check_dim(x)
        return [(1.0, ProtectedTemplate(pi=x, alpha=None))]

    def guaranteed_match_radius(self):
        return self.tau

    def describe(self):
        return {"scheme": self.name, "n": self.feature_dim, "tau": self.tau}


class BrokenScheme(BtpScheme):
    """Negative control: the comparator rejects everything, so even the
    enrolled feature fails verification.  Exists to exercise the
    hypothesis gates of the theorem checkers."""

    name = "broken"

    def __init__(self, n: int):
        if n < 1:
            raise ConfigError("n must be >= 1")
        self.feature_dim = n

    def pie(self, x, rng):
        self._check_dim(x)
        return ProtectedTemplate(pi=blake128(_int_to_bytes(x.value, x.n)),
                                 alpha=None)

    def pir(self, alpha, x_prime):
        self._check_dim(x_prime)
        return REJECT

    def pic(self, pi, pi_prime):
        return False

    def pie_support(self, x):
        self._check_dim(x)
        return [(1.0, self.pie(x, None))]


def build_scheme(cfg: dict, n: int) -> BtpScheme:
    """Instantiate a scheme from its JSON config block."""
    name = cfg.get("scheme")
    if name == "fc":
        code_cfg = cfg.get("code", {})
        if "generator" in code_cfg:
            code = LinearCode.from_bitstrings(
                code_cfg["generator"], t=int(code_cfg.get("t", 1))
            )
        elif code_cfg.get("n", 7) == 7 and code_cfg.get("k", 4) == 4:
            code = hamming_7_4(t=int(code_cfg.get("t", 1)))
        else:
            raise ConfigError(
                "fc needs an explicit generator matrix for codes other than [7,4]"
            )
        if code.n_code != n:
            raise ConfigError(
                f"code length {code.n_code} must equal feature dimension {n}"
            )
        return FuzzyCommitmentScheme(code)
    if name == "rot":
        return RotationScheme(n=n, tau=int(cfg.get("tau", 1)))
    if name == "plain":
        return PlaintextScheme(n=n, tau=int(cfg.get("tau", 1)))
    if name == "broken":
        return BrokenScheme(n=n)
    raise ConfigError(f"unknown scheme {name!r} (choose fc, rot, plain, or broken)")
