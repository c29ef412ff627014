"""Security-game evaluation framework for biometric template protection.

The package models a Hamming feature space with noisy per-user capture
distributions, three reference protection schemes (fuzzy commitment,
cancelable rotation, plaintext), the irreversibility and unlinkability
games with their constructive adversaries, exact enumeration oracles for
every metric at desk scale, and empirical checkers for the four relation
theorems connecting the notions.
"""

from .errors import (
    BtpEvalError,
    BudgetExceededError,
    ConfigError,
    ContractError,
    DimensionError,
    ModeError,
    ProtocolError,
    VariationTooHighError,
)
from .population import (
    FeatureElement,
    Population,
    SamplingOracle,
    generate_population,
    hamming_distance,
    neighborhood_overlap,
)
from .schemes import (
    LEAK_AD,
    LEAK_BOTH,
    LEAK_PI,
    REJECT,
    BtpScheme,
    FuzzyCommitmentScheme,
    LeakSet,
    LinearCode,
    PlaintextScheme,
    ProtectedTemplate,
    PtView,
    RotationScheme,
    bounded_distance_decode,
    build_scheme,
    hamming_7_4,
    leak_view,
)

__version__ = "0.1.0"
