"""Query-limited sparse adversarial attacks against hard-label models."""

from .inference import (FormatError, WeightedNet, WeightedNetOracle, forward,
                        load_dataset, load_weighted_net, predict, read_idx_images,
                        read_idx_labels, validate)
from .oracles import (BudgetExhausted, ClippedOracle, HyperplaneOracle,
                      MaskLogicOracle, Oracle, QueryLedger, SphereOracle,
                      adversarial_fn)
from .pipeline import (PROFILES, AttackConfig, AttackRecord, ConfigError, SkipRecord,
                       attack, default_config)
from .signopt import (BoundaryFit, InitFailure, SignOptConfig, g_eval,
                      initial_direction_search, sign_grad_estimate, signopt_descend)
from .sparsify import ThresholdResult, bin_mask, finalize_delta, threshold_search
from .unimportance import (TrialEvidence, accumulate_beta, build_unimportance,
                           normalize_weights, run_trial)

__version__ = "0.1.0"

__all__ = [
    "AttackConfig", "AttackRecord", "BoundaryFit", "BudgetExhausted", "ClippedOracle", "ConfigError",
    "FormatError", "HyperplaneOracle", "InitFailure", "MaskLogicOracle", "Oracle",
    "PROFILES", "QueryLedger", "SignOptConfig", "SkipRecord", "SphereOracle",
    "ThresholdResult", "TrialEvidence", "WeightedNet", "WeightedNetOracle",
    "accumulate_beta", "adversarial_fn", "attack", "bin_mask", "build_unimportance",
    "default_config", "finalize_delta", "forward", "g_eval",
    "initial_direction_search", "load_dataset", "load_weighted_net",
    "normalize_weights", "predict", "read_idx_images", "read_idx_labels",
    "run_trial", "sign_grad_estimate", "signopt_descend", "threshold_search",
    "validate",
]
