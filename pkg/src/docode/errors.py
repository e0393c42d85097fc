"""Exception hierarchy.

Input problems derive from :class:`ValidationError` (also a ``ValueError``),
failures while fitting or estimating derive from :class:`EstimationError`.
The CLI maps the two families to distinct exit codes.
"""

from __future__ import annotations


class DocodeError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(DocodeError, ValueError):
    """Malformed or inconsistent input."""

    def __init__(self, message: str, *, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EstimationError(DocodeError):
    """Estimation could not proceed on otherwise well-formed data."""


# taxonomy
class ParseError(ValidationError):
    pass


class OverlapError(ValidationError):
    pass


class EmptyCategoryError(ValidationError):
    pass


class EmptyTokenError(ValidationError):
    def __init__(self, message: str = "empty token", *, index: int | None = None):
        self.index = index
        if index is not None:
            message = f"{message} at position {index}"
        super().__init__(message)


class EmptySequenceError(ValidationError):
    pass


# ingest
class AlignmentError(ValidationError):
    pass


class ProbabilityRangeError(ValidationError):
    pass


class ArmError(ValidationError):
    pass


class UnpairedError(ValidationError):
    def __init__(self, pair_ids):
        self.pair_ids = sorted(pair_ids)
        super().__init__(f"unpaired or malformed pair ids: {', '.join(self.pair_ids)}")


class KindError(ValidationError):
    pass


class MissingSourceError(ValidationError):
    pass


# covariates
class UnterminatedLiteralError(ValidationError):
    pass


class UnterminatedCommentError(ValidationError):
    pass


# outcomes
class EmptyMapError(ValidationError):
    pass


class ZeroMaxError(ValidationError):
    pass


# stats
class LengthMismatchError(ValidationError):
    pass


class EmptyInputError(ValidationError):
    pass


class ZeroResamplesError(ValidationError):
    pass


class EdgeMismatchError(ValidationError):
    pass


class ZeroVarianceError(EstimationError, ValueError):
    pass


# causal
class CycleError(ValidationError):
    pass


class MissingNodeError(ValidationError):
    pass


class SingleArmError(EstimationError, ValueError):
    pass


class NonFiniteError(EstimationError, ValueError):
    pass


class RankDeficiencyError(EstimationError):
    pass


class EmptyCellError(EstimationError):
    def __init__(self, arm: int, stratum):
        self.arm = arm
        self.stratum = stratum
        super().__init__(f"no units with T={arm} in stratum {stratum!r}")


# refutation
class SubsetTooSmallError(EstimationError):
    pass


# report
class IoError(DocodeError, OSError):
    pass
