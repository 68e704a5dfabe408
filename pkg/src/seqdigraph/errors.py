"""Exception types shared across the package."""


class SeqDigraphError(Exception):
    pass


class MalformedLine(SeqDigraphError, ValueError):
    def __init__(self, lineno: int, line: str, reason: str):
        self.lineno = lineno
        self.line = line
        self.reason = reason
        super().__init__(f"line {lineno}: {reason}: {line!r}")


class SumMismatch(SeqDigraphError, ValueError):
    pass


class NotDigraphical(SeqDigraphError, ValueError):
    pass


class DegreeTooLarge(SeqDigraphError, ValueError):
    """Some pair has ``out_i * in_j >= 2m``, making its acceptance weight nonpositive."""


class DegenerateDenominator(SeqDigraphError, ZeroDivisionError):
    pass


class RetriesExhausted(SeqDigraphError):
    def __init__(self, attempts: int, last_failure_step: int):
        self.attempts = attempts
        self.last_failure_step = last_failure_step
        super().__init__(
            f"no simple graph after {attempts} attempts "
            f"(last failure at step {last_failure_step})"
        )


class AllRunsFailed(SeqDigraphError):
    pass


class BudgetExceeded(SeqDigraphError):
    pass


class RejectionBudgetExceeded(BudgetExceeded):
    pass


class BoundViolation(AssertionError):
    """A sampler state broke one of the residual-pair bounds."""


class DegreeConditionWarning(UserWarning):
    """``d_max**4 >= m``: asymptotic uniformity guarantees do not apply."""


class BiasWarning(UserWarning):
    pass
