"""Exception types shared across the package."""

from __future__ import annotations


class BundleLearnError(Exception):
    """Base class for every package-specific error."""


class DimensionMismatch(BundleLearnError):
    """Vector or matrix dimensions do not agree."""


class RankDeficient(BundleLearnError):
    """Design matrix is numerically rank deficient.

    ``rank`` carries the numerical rank m < n so callers can decide between
    collinearity reduction and ridge initialization.
    """

    def __init__(self, rank: int, n: int, message: str | None = None) -> None:
        self.rank = rank
        self.n = n
        super().__init__(message or f"design has numerical rank {rank} < {n}")


class StateNotFullRank(BundleLearnError):
    """The operation needs a full-rank state with a valid covariance."""


class NotSymmetric(BundleLearnError):
    """Matrix is not symmetric within tolerance."""


class NotPositiveDefinite(BundleLearnError):
    """Matrix has an eigenvalue at or below the positive-definiteness tolerance."""


class ZeroBias(BundleLearnError):
    """The estimation error is the zero vector, so the request is vacuous or impossible."""


class AnchorParallel(BundleLearnError):
    """Anchor bundle is parallel to the estimation error; its orthogonal part vanishes."""


class SignViolation(BundleLearnError):
    """Inputs violate a documented sign precondition."""


class DegenerateInteraction(BundleLearnError):
    """Interaction coefficient is zero; use the interaction-free construction."""


class SingularAugmentedZ(BundleLearnError):
    """Augmented information matrix is singular; some pair count is missing."""


class StrategyInfeasible(BundleLearnError):
    """Strategy cannot produce bundles for the given scenario."""


class ParseError(BundleLearnError):
    """Corpus input could not be parsed.

    ``line`` and ``column`` are 1-based positions; ``reason`` is human-readable.
    """

    def __init__(self, line: int, column: int, reason: str) -> None:
        self.line = line
        self.column = column
        self.reason = reason
        super().__init__(f"line {line}, column {column}: {reason}")


class DuplicateItemInRecord(BundleLearnError):
    """A corpus record lists the same item more than once."""

    def __init__(self, line: int, item: str) -> None:
        self.line = line
        self.item = item
        super().__init__(f"line {line}: duplicate item {item!r}")


class NeverFullRank(BundleLearnError):
    """Replay ended before the information matrix reached full rank.

    ``report`` holds the partial diagnostics collected up to the end.
    """

    def __init__(self, message: str, report=None) -> None:
        self.report = report
        super().__init__(message)


class SinkWriteFailure(BundleLearnError):
    """Writing an export to its sink failed."""


class ConfigError(BundleLearnError):
    """A configuration document failed validation.

    ``path`` is the dotted key path into the document.
    """

    def __init__(self, path: str, reason: str) -> None:
        self.path = path
        self.reason = reason
        super().__init__(f"{path}: {reason}")
