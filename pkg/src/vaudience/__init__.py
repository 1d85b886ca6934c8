"""Virtual audience toolkit: shared reaction state, broadcast server, local synthesis."""

from .state import (
    AggregateSummary,
    AudienceState,
    Mode,
    ReactionKind,
    Role,
    StateDelta,
    aggregate,
    apply_delta,
    apply_update,
    diff,
)

__version__ = "0.1.0"

__all__ = [
    "AggregateSummary",
    "AudienceState",
    "Mode",
    "ReactionKind",
    "Role",
    "StateDelta",
    "aggregate",
    "apply_delta",
    "apply_update",
    "diff",
    "__version__",
]
