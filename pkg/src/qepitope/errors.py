"""Exception hierarchy shared by every module."""


class QepitopeError(Exception):
    """Base class for all errors raised by this package."""


class SizeError(QepitopeError, ValueError):
    pass


class ShapeError(QepitopeError, ValueError):
    pass


class WiringError(QepitopeError, ValueError):
    """Gate addresses a qubit that is out of range or used twice."""


class ConfigurationError(QepitopeError, ValueError):
    pass


class DegenerateProblemError(QepitopeError, ValueError):
    """Input has a single class, so the optimisation or metric is undefined."""


class NumericalError(QepitopeError, ArithmeticError):
    pass


class ParseError(QepitopeError, ValueError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class StateError(QepitopeError, RuntimeError):
    """Object used before it was fitted."""


class ConvergenceWarning(UserWarning):
    pass
