"""Two-tier trust-gated request simulator (broker agent + provider agent)."""

from .trust_core import (
    DOMAIN_LAYER,
    TABLE_I_PARAMS,
    USER_LAYER,
    ActionClass,
    LayerParams,
    TrustLedger,
    action_weight,
    passes_threshold,
    replay,
    update_trust,
)

__version__ = "0.1.0"

__all__ = [
    "ActionClass",
    "LayerParams",
    "TrustLedger",
    "action_weight",
    "update_trust",
    "passes_threshold",
    "replay",
    "TABLE_I_PARAMS",
    "USER_LAYER",
    "DOMAIN_LAYER",
]
