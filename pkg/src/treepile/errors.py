"""Exception hierarchy shared by every module and mapped to CLI exit codes."""


class TreepileError(Exception):
    exit_code = 1


class ValidationError(TreepileError):
    """Malformed tree, configuration or argument."""

    exit_code = 2


class CapExceeded(TreepileError):
    """A resource cap (state count, monoid size, symbolic size) was hit."""

    exit_code = 3

    def __init__(self, message, found=None):
        super().__init__(message)
        self.found = found


class HypothesisUnmet(TreepileError):
    """The input violates the hypothesis of a closed-form result."""

    exit_code = 4


class NotErgodic(TreepileError):
    exit_code = 4


class InternalError(TreepileError):
    exit_code = 1
