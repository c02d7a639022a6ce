"""Shared exception types."""

from __future__ import annotations


class DivergenceError(RuntimeError):
    """A numeric update produced non-finite values.

    Carries whatever context is known at the raise site; the training loop
    fills in step/entity/heuristic before propagating.
    """

    def __init__(self, message, *, step=None, entity_id=None, heuristic=None, trace=None):
        super().__init__(message)
        self.step = step
        self.entity_id = entity_id
        self.heuristic = heuristic
        self.trace = trace

    def __str__(self):
        base = super().__str__()
        ctx = []
        if self.step is not None:
            ctx.append(f"step={self.step}")
        if self.entity_id is not None:
            ctx.append(f"entity={self.entity_id}")
        if self.heuristic is not None:
            ctx.append(f"heuristic={self.heuristic}")
        return f"{base} ({', '.join(ctx)})" if ctx else base


class ConfigError(ValueError):
    """Invalid or unknown configuration input."""


class DataError(ValueError):
    """Malformed dataset input; message names the offending row/column."""
