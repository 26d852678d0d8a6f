"""Exception types shared by the numerical kernel and the check runner."""


class YbxError(Exception):
    """Base class for every error raised by this package."""


class SingularArgument(YbxError, ValueError):
    """An argument sits on (or too close to) the singular set of a function."""

    def __init__(self, what, value=None):
        self.what = what
        self.value = value
        msg = what if value is None else f"{what} (argument {value!r})"
        super().__init__(msg)


class InvalidModulus(YbxError, ValueError):
    pass


class TruncationFailure(YbxError, ArithmeticError):
    """A q-series did not reach its stopping threshold within max_terms."""


class UnsupportedOrder(YbxError, ValueError):
    pass


class UnsupportedCase(YbxError, ValueError):
    pass


class LegError(YbxError, ValueError):
    """Bad leg specification for a tensor embedding."""


class ShapeMismatch(YbxError, ValueError):
    pass


class ExtrapolationUnstable(YbxError, ArithmeticError):
    pass


class SamplingExhausted(YbxError, RuntimeError):
    pass


class UnknownCheck(YbxError, KeyError):
    def __str__(self):
        return f"unknown check id: {self.args[0]}"
