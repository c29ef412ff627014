"""Exception types shared across the package."""


class BtpEvalError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(BtpEvalError):
    """A configuration value violates its documented range or shape."""


class DimensionError(BtpEvalError):
    """Two bit vectors (or a vector and its space) disagree on length."""


class BudgetExceededError(BtpEvalError):
    """A sampling-oracle query was attempted past the allowed budget."""


class ContractError(BtpEvalError):
    """A protocol-level precondition was violated (empty leak set,
    adversary used with an incompatible leak set, and so on)."""


class VariationTooHighError(ContractError):
    """The match-rate variation coefficient is too large for the
    requested sampler parameters (delta <= C^2)."""


class ModeError(BtpEvalError):
    """An exact enumeration was requested at a scale where it is not
    supported; callers should fall back to the Monte Carlo variant."""


class ProtocolError(BtpEvalError):
    """An adversary returned a value outside the game's alphabet."""
