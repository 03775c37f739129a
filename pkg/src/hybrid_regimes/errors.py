"""Exception hierarchy.

Every error carries an exit code used by the command-line front end:
2 for configuration problems, 3 for bad or missing data, 4 for numerical
failures. ``stage`` is filled in by the pipeline so messages name the step
that failed.
"""
from __future__ import annotations


class RegimeError(Exception):
    exit_code = 1

    def __init__(self, message: str, stage: str | None = None):
        super().__init__(message)
        self.stage = stage

    def __str__(self) -> str:
        msg = super().__str__()
        return f"[{self.stage}] {msg}" if self.stage else msg


class ConfigError(RegimeError):
    exit_code = 2


class DataError(RegimeError):
    exit_code = 3


class NumericalError(RegimeError):
    exit_code = 4


# panel
class UnparsableDate(DataError):
    pass


class UnparsableValue(DataError):
    pass


class DuplicateDate(DataError):
    pass


class DuplicateColumn(DataError):
    pass


class RaggedRow(DataError):
    pass


class LeadingMissing(DataError):
    pass


class ColumnAllMissing(DataError):
    pass


class MissingValues(DataError):
    pass


class EmptySide(DataError):
    pass


class ZeroVariance(DataError):
    pass


class ColumnMismatch(DataError):
    pass


# pca / clustering / classification
class DimensionMismatch(DataError):
    pass


class TooFewDistinctPoints(DataError):
    pass


class SingleCluster(DataError):
    pass


class ClassError(DataError):
    """Wrong number of classes, or too few samples in one of them."""


class FoldMissingClass(DataError):
    pass


class SingularCovariance(NumericalError):
    pass


class NonConvergence(NumericalError):
    pass


# backtest
class DateMisalignment(DataError):
    pass


class MissingAsset(DataError):
    pass


class MissingArtifact(DataError):
    pass
