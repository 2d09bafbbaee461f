"""Exception hierarchy shared by every module.

All errors raised on purpose by the library derive from ``ImmersionError``;
the CLI maps them to exit code 2 and a JSON record on standard error.
"""


class ImmersionError(Exception):
    """Base class. ``details`` is serialised verbatim into CLI error reports."""

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details

    def to_dict(self):
        return {"error": type(self).__name__, "message": str(self), **self.details}


class InvalidInput(ImmersionError, ValueError):
    pass


class WrongSignature(ImmersionError, ValueError):
    pass


class OutOfClass(ImmersionError, ValueError):
    pass


class EpsilonMismatch(ImmersionError, ValueError):
    pass


class NearBranchDegenerate(ImmersionError, ArithmeticError):
    pass


class AxisOutOfRange(ImmersionError, IndexError):
    pass


class ShapeMismatch(ImmersionError, ValueError):
    pass


class SingularMetricAt(ImmersionError, ArithmeticError):
    def __init__(self, message, point=None, **details):
        super().__init__(message, point=None if point is None else list(point), **details)
        self.point = point


class NonFiniteState(ImmersionError, ArithmeticError):
    pass


class PathOutOfChart(ImmersionError, IndexError):
    pass


class NotLorentzAt(ImmersionError, ValueError):
    def __init__(self, message, point=None, **details):
        super().__init__(message, point=None if point is None else list(point), **details)
        self.point = point


class SingularFrameAt(ImmersionError, ArithmeticError):
    def __init__(self, message, point=None, **details):
        super().__init__(message, point=None if point is None else list(point), **details)
        self.point = point


class SingularFstar(ImmersionError, ValueError):
    pass


class MixedSignature(ImmersionError, ValueError):
    pass


class NotLorentzBlock(ImmersionError, ValueError):
    pass


class ChartMismatch(ImmersionError, ValueError):
    pass


class NotProper(ImmersionError, ValueError):
    pass


class UnknownFixture(ImmersionError, KeyError):
    def __str__(self):
        return self.args[0]


class BadParams(ImmersionError, ValueError):
    pass


class ManifestError(ImmersionError, ValueError):
    pass
