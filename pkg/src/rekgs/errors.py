class ArgumentError(ValueError):
    """Invalid input: dimension mismatch, zero row/column, bad configuration."""


class RankDeficiencyError(ArgumentError):
    """Columns that were required to be independent are not."""


class SubspaceError(ArgumentError):
    """An initial vector violates the subspace precondition of its algorithm."""
