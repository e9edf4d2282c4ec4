"""Exception hierarchy.

Input errors (bad files, bad rows) and computation errors (degenerate data,
non-convergence) are kept apart so the CLI can map them to distinct exit codes.
"""


class VolstatError(Exception):
    """Base class for every error raised by the package."""


class InputError(VolstatError):
    """The supplied data could not be read or violates a data invariant."""


class ComputationError(VolstatError):
    """A numerical routine could not produce a valid result."""


# --- parsing -------------------------------------------------------------

class RowError(InputError):
    def __init__(self, line, message):
        self.line = line
        super().__init__(f"line {line}: {message}")


class MalformedRow(RowError):
    pass


class NonPositivePrice(RowError):
    pass


class NegativeLevel(RowError):
    pass


class DuplicateDate(RowError):
    def __init__(self, line, date):
        self.date = date
        super().__init__(line, f"duplicate date {date}")


class EmptyInput(InputError):
    pass


class EmptyIntersection(InputError):
    pass


# --- series computations -------------------------------------------------

class TooShort(ComputationError):
    pass


class EmptyOverlap(ComputationError):
    pass


class ZeroDenominatorMean(ComputationError):
    pass


class NonPositiveRatio(ComputationError):
    pass


class SlopeUndefined(ComputationError):
    pass


# --- implied variance ----------------------------------------------------

class InvalidChain(InputError):
    pass


class EmptyChain(InvalidChain):
    pass


class NoStrikeBelowForward(ComputationError):
    pass


class TooFewStrikes(ComputationError):
    pass


class ZeroBidRun(ComputationError):
    pass


class InvalidBracket(ComputationError):
    pass


# --- distribution fitting ------------------------------------------------

class SupportViolation(ComputationError):
    pass


class DegenerateSample(ComputationError):
    pass


class EmptySample(ComputationError):
    pass


class NonConvergence(ComputationError):
    def __init__(self, iterations, grad_norm, message=""):
        self.iterations = iterations
        self.grad_norm = grad_norm
        super().__init__(
            f"no convergence after {iterations} iterations "
            f"(|grad| = {grad_norm:.3e}) {message}".rstrip()
        )


class IntegrationFailure(ComputationError):
    pass


class AllFitsFailed(ComputationError):
    pass


# --- stochastic variance models -----------------------------------------

class InvalidParams(ComputationError):
    pass


class InvalidStep(ComputationError):
    pass


class MomentDivergence(ComputationError):
    pass


class NonPositiveDecay(ComputationError):
    pass
