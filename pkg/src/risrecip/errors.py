"""Exception hierarchy shared by all modules."""


class RisError(Exception):
    """Base class for domain errors (CLI exit code 1)."""


class ConfigurationError(RisError, ValueError):
    pass


class ControlRangeError(RisError, ValueError):
    pass


class UnreachablePhaseError(RisError, ValueError):
    pass


class SingularityError(RisError, ArithmeticError):
    pass


class ScheduleError(RisError, ValueError):
    pass


class FitError(RisError, ValueError):
    pass


class ScenarioParseError(RisError, ValueError):
    """Scenario/schedule file problem, with location diagnostics."""

    def __init__(self, message, path=None, line=None, field=None):
        self.path = path
        self.line = line
        self.field = field
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = ": ".join([", ".join(where)]) + ": " if where else ""
        super().__init__(prefix + message)
