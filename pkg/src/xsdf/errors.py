"""Exception types shared across the xsdf package.

Every error carries a human-readable message naming the offending input
(row, cell, date, dimension) so CLI users can act on it directly.
"""


class XsdfError(Exception):
    """Base class for all xsdf errors."""


# --- data / parsing ---------------------------------------------------------

class ParseError(XsdfError):
    """A file or field could not be parsed (bad date, bad number, bad header)."""


class MissingCell(XsdfError):
    """The date x asset x signal grid has a hole."""


class DuplicateKey(XsdfError):
    """The same (date, asset[, signal]) key appears more than once."""


# --- alignment --------------------------------------------------------------

class NoOverlap(XsdfError):
    """Signal and return panels share no usable (t, t+1) pair."""


class AssetMismatch(XsdfError):
    """Signal and return panels do not cover the same assets in the same order."""


class DateMisalignment(XsdfError):
    """Two dated series that must share dates do not."""


class CoverageGap(XsdfError):
    """A state series does not cover every backtest date it is asked to split."""


class InsufficientHistory(XsdfError):
    """Not enough aligned history before the requested out-of-sample start."""


# --- shapes / numerics ------------------------------------------------------

class DimensionMismatch(XsdfError):
    """Array shapes are inconsistent with each other."""


class NotSquare(XsdfError):
    """A spillover matrix (or flattened vector) is not square / not a perfect square."""


class ZeroMatrix(XsdfError):
    """The mean managed-return matrix is numerically zero; no direction to estimate."""


class SingularMoment(XsdfError):
    """A moment matrix is numerically singular; use the ridge path instead."""


class SingularCovariance(XsdfError):
    """A covariance matrix required to be invertible is singular."""


class NotPsd(XsdfError):
    """A covariance matrix is not positive semidefinite."""


class RankDeficient(XsdfError):
    """A regression design matrix is rank deficient."""


class AllMonthsRankDeficient(XsdfError):
    """Every monthly cross-section in a panel regression is rank deficient."""


class TooShort(XsdfError):
    """A series is too short for the requested statistic."""


class LabelMismatch(XsdfError):
    """A label vector does not match the asset dimension."""


class DegenerateWeights(UserWarning):
    """Weights are numerically zero; leverage rescaling was skipped."""
