"""Exception hierarchy shared by all chansel modules."""

from __future__ import annotations


class ChanselError(Exception):
    """Base class for every error raised by this package."""


# --- channel subsets ---------------------------------------------------------

class EmptySubsetError(ChanselError):
    pass


class IndexOutOfRangeError(ChanselError):
    def __init__(self, index: int, n_channels: int):
        if index < 0:
            message = f"channel index {index} is negative"
        else:
            message = f"channel index {index} out of range for {n_channels} channels"
        super().__init__(message)
        self.index = index
        self.n_channels = n_channels


class AllZeroMaskError(ChanselError):
    pass


# --- trial-set container format ----------------------------------------------

class BadMagicError(ChanselError):
    pass


class HeaderParseError(ChanselError):
    pass


class PayloadLengthMismatchError(ChanselError):
    def __init__(self, expected: int, got: int):
        super().__init__(f"payload truncated: expected {expected} bytes, got {got}")
        self.expected = expected
        self.got = got


class NonFiniteSampleError(ChanselError):
    pass


# --- CSV import ----------------------------------------------------------------

class RaggedRowsError(ChanselError):
    def __init__(self, message: str, row: int):
        super().__init__(message)
        self.row = row


class BadLabelError(ChanselError):
    pass


class BadNumberError(ChanselError):
    def __init__(self, row: int, col: int, text: str):
        super().__init__(f"row {row}, column {col}: cannot parse {text!r} as a number")
        self.row = row
        self.col = col


# --- synthetic generation -------------------------------------------------------

class SpecInvalidError(ChanselError):
    pass


# --- evaluators ------------------------------------------------------------------

class ClassTooSmallError(ChanselError):
    def __init__(self, class_id: int, count: int, n_folds: int):
        super().__init__(
            f"class {class_id} has only {count} trials, needs at least {n_folds} for {n_folds}-fold CV"
        )
        self.class_id = class_id
        self.count = count


class SingularCovarianceError(ChanselError):
    pass


# --- external evaluator protocol --------------------------------------------------

class ProtocolTimeoutError(ChanselError):
    pass


class ProtocolMalformedError(ChanselError):
    def __init__(self, message: str, line: str | None = None):
        super().__init__(message)
        self.line = line


class EvaluatorError(ChanselError):
    """The external evaluator replied ok=false for a request."""


class AccuracyOutOfRangeError(ChanselError):
    def __init__(self, accuracy: float):
        super().__init__(f"evaluator reported accuracy {accuracy!r} outside [0, 1]")
        self.accuracy = accuracy


class ProcessExitedError(ChanselError):
    def __init__(self, code: int | None):
        super().__init__(f"external evaluator process exited (code {code})")
        self.code = code


# --- selectors ----------------------------------------------------------------------

class LengthMismatchError(ChanselError):
    pass


class WidthMismatchError(ChanselError):
    pass


class DegenerateSamplingError(ChanselError):
    pass


class EmptyRegionError(ChanselError):
    pass


class UnknownNameError(ChanselError):
    def __init__(self, label: str):
        super().__init__(f"channel name {label!r} not present in the montage")
        self.label = label


class TooManyChannelsError(ChanselError):
    def __init__(self, n_channels: int, guard: int):
        super().__init__(
            f"{n_channels} channels means {2 ** n_channels - 1} subsets; guard is {guard} "
            "(pass force=True to run anyway)"
        )
        self.n_channels = n_channels
        self.guard = guard


class SelectionAbortedError(ChanselError):
    """A candidate evaluation failed mid-search; carries the completed steps."""

    def __init__(self, message: str, partial_trace=None):
        super().__init__(message)
        self.partial_trace = partial_trace
