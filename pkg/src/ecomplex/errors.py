"""Exception hierarchy shared by every ecomplex module."""


class EcomplexError(ValueError):
    """Base class for all domain errors raised by ecomplex."""


# ingest

class ParseError(EcomplexError):
    """A file could not be parsed; carries path and line when known."""

    def __init__(self, message, path=None, line=None, column=None):
        self.path = path
        self.line = line
        self.column = column
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column!r}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class MissingColumn(ParseError):
    pass


class MalformedDate(ParseError):
    pass


class OrderViolation(MalformedDate):
    """delist_date does not come strictly after list_date."""


class DuplicateFirmId(ParseError):
    pass


class BlankLabel(ParseError):
    """Rows with an empty region or industry; ``count`` rows were rejected."""

    def __init__(self, message, path=None, lines=()):
        self.lines = tuple(lines)
        self.count = len(self.lines)
        super().__init__(message, path=path)


class DuplicateKey(ParseError):
    pass


class NonNumericCell(ParseError):
    pass


class EmptyYear(EcomplexError):
    pass


# advantage / complexity

class ZeroMarginal(EcomplexError):
    pass


class EmptyAfterExclusion(EcomplexError):
    pass


class DisconnectedNetwork(EcomplexError):
    def __init__(self, message, components=()):
        self.components = [tuple(c) for c in components]
        super().__init__(message)


class DegenerateSpectrum(EcomplexError):
    pass


class NotConverged(EcomplexError):
    def __init__(self, max_iter, residual):
        self.max_iter = max_iter
        self.residual = residual
        super().__init__(
            f"fitness iteration did not converge in {max_iter} iterations "
            f"(last residual {residual:.3e})"
        )


class NumericalUnderflow(EcomplexError):
    pass


# stats

class ConstantInput(EcomplexError):
    pass


class InsufficientData(EcomplexError):
    pass


class EmptyInput(EcomplexError):
    pass


class InsufficientYears(EcomplexError):
    pass


class NonpositiveDenominator(EcomplexError):
    pass


class RankDeficient(EcomplexError):
    pass


# harness

class DegenerateShape(EcomplexError):
    pass


class DimensionTooLarge(EcomplexError):
    pass


class Singular(EcomplexError):
    pass


# cli

class ConfigError(EcomplexError):
    pass


class NonpositiveValue(EcomplexError):
    """A logarithm was requested for a value <= 0."""
