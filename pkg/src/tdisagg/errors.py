"""Exception hierarchy.

Two families matter to callers: ``InputError`` (bad data or arguments) and
``NumericalError`` (the data are well formed but a solve failed). The CLI maps
them to exit codes 1 and 2.
"""


class TDisaggError(Exception):
    """Base class for every error raised by tdisagg."""


class InputError(TDisaggError, ValueError):
    pass


class NumericalError(TDisaggError, ArithmeticError):
    pass


# frame / CSV
class MalformedHeader(InputError):
    pass


class NonNumericField(InputError):
    def __init__(self, row, column, value):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f"row {row}: column {column!r} is not numeric: {value!r}")


class DuplicateKey(InputError):
    def __init__(self, index, grain):
        self.index = index
        self.grain = grain
        super().__init__(f"duplicate (index, grain) key: ({index}, {grain})")


class LengthMismatch(InputError):
    pass


class MissingColumn(InputError):
    pass


class ValidationFailed(InputError):
    def __init__(self, report):
        self.report = report
        lines = [f"{code}: {msg}" for code, msg, _ in report.errors]
        super().__init__("input failed validation:\n  " + "\n  ".join(lines))


# completion / conversion
class AllXMissing(InputError):
    pass


class IncompleteFrame(InputError):
    pass


# models / rho
class RankDeficient(NumericalError):
    pass


class SingularV(NumericalError):
    pass


class SingularSystem(NumericalError):
    pass


class RhoOutOfRange(InputError):
    pass


class NoFiniteCandidate(NumericalError):
    pass


class NonPositiveVariance(NumericalError):
    pass


# ensemble
class EmptyMemberSet(InputError):
    pass


class AllMembersFailed(NumericalError):
    pass


# post-estimation
class NegativeTarget(InputError):
    pass


# retropolarizer
class InsufficientObservations(InputError):
    pass


class DegenerateIndicator(InputError):
    pass
