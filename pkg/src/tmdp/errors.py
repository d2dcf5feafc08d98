"""Exception types shared across the package."""

from __future__ import annotations


class TmdpError(Exception):
    """Base class for all package errors."""


class RejectedInputError(TmdpError, ValueError):
    """Input outside the documented domain of an operation."""


class ConfigError(TmdpError, ValueError):
    """Inconsistent or unresolvable configuration."""


class NonAbsorbingChainError(TmdpError):
    """(I - Q) is singular: the chain has a recurrent transient class."""

    def __init__(self, recurrent_states: tuple) -> None:
        self.recurrent_states = tuple(recurrent_states)
        super().__init__(
            "chain is not absorbing; recurrent transient class: "
            f"{list(self.recurrent_states)}"
        )


class DegenerateStateError(TmdpError):
    """A state carries zero expected transition count under every chain."""

    def __init__(self, states: tuple) -> None:
        self.states = tuple(states)
        super().__init__(f"states unreachable under all chains: {list(self.states)}")


class DegenerateClusteringError(TmdpError):
    """Fewer distinct points than requested clusters."""


class InitializationError(TmdpError):
    """Sampler initialization point has non-finite log density."""


class DiagnosticsUnavailableError(TmdpError):
    """Convergence diagnostics need at least two chains."""


class StorageError(TmdpError):
    """Run store is unwritable or a manifest transition is illegal."""
