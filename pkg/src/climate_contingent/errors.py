"""Exception hierarchy shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class ConfigError(ValueError):
    """Experiment configuration failed validation.

    ``field`` holds the dotted path of the offending entry when known.
    """

    def __init__(self, message, field=None):
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}" if field else message)


class DataError(ValueError):
    """Climate projection data is malformed or does not cover a request."""


class IngestionError(DataError):
    pass


class DataCoverageError(DataError):
    def __init__(self, missing):
        self.missing = list(missing)
        shown = ", ".join(str(k) for k in self.missing[:20])
        more = "" if len(self.missing) <= 20 else f" (+{len(self.missing) - 20} more)"
        super().__init__(f"missing (location, scenario, year) keys: {shown}{more}")


class InfeasibleError(ValueError):
    """Optimization bounds admit no solution."""


class StructuringError(InfeasibleError):
    """A bond term sheet cannot reach its NPV target within rate bounds."""
