"""Exception hierarchy.

Every error raised by the package derives from :class:`PrognosticLogitError`.
The two intermediate classes map onto CLI exit codes: input problems
(:class:`ValidationError`, exit 2) and fitting problems (:class:`FitError`,
exit 3).
"""


class PrognosticLogitError(Exception):
    """Base class for all package errors."""


class ValidationError(PrognosticLogitError, ValueError):
    """Bad input data or arguments."""


class FitError(PrognosticLogitError, ArithmeticError):
    """A model could not be fitted or an estimate is undefined."""


# -- trial data ---------------------------------------------------------------

class MissingColumn(ValidationError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"column {column!r} not found in header")


class MissingValue(ValidationError):
    def __init__(self, row, column):
        self.row, self.column = row, column
        super().__init__(f"row {row}: empty value in column {column!r}")


class NonBinaryValue(ValidationError):
    def __init__(self, row, column, value=None):
        self.row, self.column, self.value = row, column, value
        super().__init__(f"row {row}: column {column!r} must be 0 or 1, got {value!r}")


class NonFiniteScore(ValidationError):
    def __init__(self, row, value=None):
        self.row, self.value = row, value
        super().__init__(f"row {row}: prognostic score is not a finite number ({value!r})")


class DuplicateSubjectId(ValidationError):
    def __init__(self, subject_id):
        self.subject_id = subject_id
        super().__init__(f"subject_id {subject_id!r} appears more than once")


class EmptyArm(ValidationError):
    def __init__(self, arm):
        self.arm = arm
        super().__init__(f"treatment arm {arm} has no participants")


class TooFewRows(ValidationError):
    def __init__(self, n):
        self.n = n
        super().__init__(f"need at least 4 participants, got {n}")


# -- numerics / arguments -----------------------------------------------------

class OutOfRange(ValidationError):
    """An argument lies outside its admissible domain."""


class ConflictingInputs(ValidationError):
    """Mutually exclusive inputs were supplied together (or none were)."""


class UnknownScenario(ValidationError):
    def __init__(self, name, known=()):
        self.name = name
        msg = f"unknown scenario {name!r}"
        if known:
            msg += f"; choose one of {', '.join(known)}"
        super().__init__(msg)


class ConstantPredictor(ValidationError):
    """The prognostic score does not vary, so its coefficient is not identified."""


class DegenerateOutcomes(ValidationError):
    """Outcomes are all 0 or all 1; no (event, non-event) pairs exist."""


# -- fitting / inference ------------------------------------------------------

class SeparationDetected(FitError):
    """Complete or quasi-complete separation; the MLE does not exist."""


class NotConverged(FitError):
    def __init__(self, max_iter):
        self.max_iter = max_iter
        super().__init__(f"IRLS did not converge within {max_iter} iterations")


class NonPositiveVariance(FitError):
    """A variance needed for a Wald statistic is zero, negative or not finite."""


class DegenerateRate(FitError):
    """An averaged predicted probability equals 0 or 1."""


class TooManyDiscards(FitError):
    def __init__(self, discarded, requested):
        self.discarded, self.requested = discarded, requested
        super().__init__(
            f"{discarded} of {requested} bootstrap resamples failed (ceiling is 1%)"
        )


class ExcessiveFailureRate(PrognosticLogitError):
    def __init__(self, failures, replications):
        self.failures, self.replications = failures, replications
        super().__init__(
            f"{failures} of {replications} simulated trials could not be analysed (ceiling is 1%)"
        )
