"""Exception hierarchy.

Input problems derive from :class:`InvalidInputError` (CLI exit code 2);
numerical breakdowns derive from :class:`NumericalError` (exit code 3).
"""


class KinebodyError(Exception):
    pass


class InvalidInputError(KinebodyError, ValueError):
    pass


class InvalidArgumentError(InvalidInputError):
    pass


class DimensionMismatchError(InvalidInputError):
    pass


class SchemaError(InvalidInputError):
    pass


class InvariantViolationError(InvalidInputError):
    pass


class InvalidHierarchyError(InvariantViolationError):
    pass


class ParseError(InvalidInputError):
    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)
        self.path = path
        self.line = line


class NumericalError(KinebodyError, ArithmeticError):
    pass


class DegenerateInputError(NumericalError):
    pass


class DegenerateRayError(DegenerateInputError):
    pass


class InfeasibleBoneError(NumericalError):
    pass


class NoDetectionError(NumericalError):
    pass


class StitchError(NumericalError):
    pass


class DivergenceError(NumericalError):
    pass
