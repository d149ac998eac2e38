"""Exception hierarchy.

Anything deriving from :class:`ValidationError` maps to CLI exit code 2,
:class:`LimitError` to exit code 3.
"""


class FJSPError(Exception):
    pass


class ValidationError(FJSPError, ValueError):
    pass


class ParseError(ValidationError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class IngestError(ValidationError):
    def __init__(self, message: str, row: int | None = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class ParameterError(ValidationError):
    pass


class HorizonError(ValidationError):
    pass


class CorrelationError(ValidationError):
    pass


class ScheduleError(ValidationError):
    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        shown = "; ".join(self.problems[:5])
        more = f" (+{len(self.problems) - 5} more)" if len(self.problems) > 5 else ""
        super().__init__(f"invalid schedule: {shown}{more}")


class SelectionError(ValidationError):
    pass


class ReportError(ValidationError):
    pass


class LimitError(FJSPError):
    """Refusal because a combinatorial or size guard was exceeded."""
