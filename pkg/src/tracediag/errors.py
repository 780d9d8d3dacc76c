"""Exception hierarchy shared by every stage of the toolchain."""


class TraceError(Exception):
    """Base class for all tracediag errors."""


class ParseError(TraceError, ValueError):
    """Malformed trace or manifest input."""

    def __init__(self, line, reason):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")

    def __eq__(self, other):
        if not isinstance(other, ParseError):
            return NotImplemented
        return (self.line, self.reason) == (other.line, other.reason)

    def __hash__(self):
        return hash((self.line, self.reason))


class UnknownMetric(TraceError, LookupError):
    pass


class LengthMismatch(TraceError, ValueError):
    pass


class WindowTooSmall(TraceError, ValueError):
    pass


class NoComparableWindows(TraceError, ValueError):
    pass


class SchemaMismatch(TraceError, ValueError):
    pass


class EmptyInput(TraceError, ValueError):
    pass


class InvalidFault(TraceError, ValueError):
    pass


class InvalidRun(TraceError, ValueError):
    """Raised by validation helpers when a run breaks its invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        shown = ", ".join(f"{v.rule}@{v.index}" for v in self.violations[:5])
        more = "" if len(self.violations) <= 5 else f" (+{len(self.violations) - 5} more)"
        super().__init__(f"invalid run: {shown}{more}")
