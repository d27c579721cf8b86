"""Exception types raised across the package."""


class DomainError(ValueError):
    """Argument outside the domain of a function (x <= 0, s at a pole, ...)."""


class PoleError(DomainError):
    pass


class ContractError(ValueError):
    """A precondition of an operation was violated by its inputs."""


class UnsupportedModeError(ValueError):
    pass


class NumericError(ArithmeticError):
    """A numerical procedure failed to reach its tolerance.

    ``estimates`` holds the last two estimates produced before giving up.
    """

    def __init__(self, message, estimates=()):
        super().__init__(message)
        self.estimates = tuple(estimates)


class DegeneracyError(NumericError):
    pass


class IntegrityError(RuntimeError):
    pass


class ReportParseError(ValueError):
    def __init__(self, message, offset):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class ZeroFileError(ValueError):
    def __init__(self, message, line):
        super().__init__(f"line {line}: {message}")
        self.line = line
