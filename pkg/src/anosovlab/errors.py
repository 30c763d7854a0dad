"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class AnosovError(Exception):
    exit_code = 1


class InvalidInputError(AnosovError, ValueError):
    exit_code = 2


class NumericError(AnosovError, ArithmeticError):
    exit_code = 3


class CapacityError(AnosovError):
    exit_code = 4
