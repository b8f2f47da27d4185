"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the function."""


class NumericError(ArithmeticError):
    """An iterative routine failed to converge or produced a non-finite value."""


class ConfigError(ValueError):
    """A configuration object violates its invariants."""


class CalibrationError(RuntimeError):
    """Threshold calibration could not bracket or reach its target."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace or [])


class SeriesParseError(ValueError):
    """A series file does not match its declared schema."""

    def __init__(self, message, line=None, path=None):
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        prefix = f"{':'.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.line = line
        self.path = path


class MissingSeriesError(FileNotFoundError):
    """The requested series file does not exist; callers may fall back to synthetic data."""
