"""Exception hierarchy.

``ConfigError`` subclasses signal bad user input (the CLI maps them to exit
code 2); everything else deriving from ``LsbmError`` is a runtime failure.
"""

from __future__ import annotations


class LsbmError(Exception):
    pass


class ConfigError(LsbmError, ValueError):
    pass


class InvalidParams(ConfigError):
    """Raised by ``validate_params`` with every violated invariant attached."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations)
        super().__init__(f"{len(self.violations)} invariant violation(s): {lines}")


class DegenerateP(ConfigError):
    pass


class SizeMismatch(ConfigError):
    pass


class LengthMismatch(ConfigError):
    pass


class SingleCluster(ConfigError):
    pass


class BadBudget(ConfigError):
    pass


class OutOfRange(ConfigError):
    pass


class UnknownModel(ConfigError):
    pass


class EmptyInput(ConfigError):
    pass


class GraphFormatError(ConfigError):
    pass


class NoConvergence(LsbmError, RuntimeError):
    pass


class DisjointSupportRow(LsbmError):
    def __init__(self, row: int):
        self.row = row
        super().__init__(f"row {row} has disjoint supports")
