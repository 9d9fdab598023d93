class AbundanzaError(Exception):
    """Base class; ``exit_code`` is what the command line returns for it."""

    exit_code = 1


class DomainError(AbundanzaError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""

    exit_code = 2


class ConfigError(AbundanzaError):
    exit_code = 2


class InputFormatError(AbundanzaError):
    exit_code = 2

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TieDetected(AbundanzaError):
    """Two critical epsilons could not be separated at the maximum precision."""

    exit_code = 2

    def __init__(self, pairs, precision):
        self.pairs = tuple(pairs)
        self.precision = precision
        super().__init__(
            f"critical epsilons {self.pairs} overlap at {precision} bits"
        )


class PrecisionError(AbundanzaError):
    """A certified decision stayed ambiguous; carries the offending ball."""

    exit_code = 3

    def __init__(self, message, ball=None, precision=None, n=None):
        self.ball = ball
        self.precision = precision
        self.n = n
        super().__init__(message)


class ResourceBudgetError(AbundanzaError):
    exit_code = 4

    def __init__(self, requested, allowed, what="sieve entries"):
        self.requested = requested
        self.allowed = allowed
        super().__init__(f"{what}: requested {requested}, budget allows {allowed}")


class UnexpectedViolation(AbundanzaError):
    """A scan certified a counterexample where none was expected."""

    exit_code = 1

    def __init__(self, criterion, values):
        self.criterion = criterion
        self.values = tuple(values)
        super().__init__(f"{criterion}: certified violations at {list(self.values)[:10]}")
