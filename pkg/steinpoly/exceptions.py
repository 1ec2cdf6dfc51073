"""Steinpoly exceptions."""


class SteinPolyError(Exception):
    """Base class for every error raised by steinpoly."""


class InvalidArgument(SteinPolyError, ValueError):
    """Argument outside of its documented range."""


class DomainError(SteinPolyError, ValueError):
    """Point outside of the support or of the instrument domain."""


class UnsupportedOperation(SteinPolyError):
    """Operation not defined for this family kind or dimension."""


class NoPolynomialBasis(SteinPolyError):
    """(phi, psi) pair matches none of the polynomial classes."""


class NotAnEigenfunction(SteinPolyError):
    """Stein-Markov image is not proportional to the polynomial."""


class OperatorMismatch(SteinPolyError):
    """Exact operator application left a rational remainder."""


class NotPearsonOrd(SteinPolyError):
    """Base law does not satisfy the Pearson / Ord relation."""


class NumericalFailure(SteinPolyError):
    """Quadrature or lattice summation did not converge."""

    def __init__(self, message, diagnostics=None):
        """Keep the convergence diagnostics next to the message."""
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class IllConditionedGrid(NumericalFailure):
    """Projection grid has too few distinct coordinate values."""


class TruncationTooSmall(NumericalFailure):
    """Tail mass beyond the lattice truncation is too large."""


class SchemaError(SteinPolyError, ValueError):
    """Document or CSV header does not match the expected schema."""


class ParseError(SchemaError):
    """Malformed numeric field in a CSV file."""

    def __init__(self, message, line=None):
        """Keep the offending line number."""
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class EmptyDataset(SchemaError):
    """CSV file without data rows."""


class RankDeficient(SteinPolyError):
    """Regressor matrix rank is below the number of basis terms."""
