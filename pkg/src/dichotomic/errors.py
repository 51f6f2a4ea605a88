"""Exception hierarchy shared by all dichotomic modules."""

from __future__ import annotations


class DichotomicError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(DichotomicError, ValueError):
    """An input violates a constructor or operation contract."""


class PositivityError(DichotomicError):
    """A transition-matrix evaluation produced an entry outside [0, 1].

    Carries the offending source/target pair and, when known, the value
    that fell out of range.
    """

    def __init__(self, s: float, t: float, value: float | None = None,
                 message: str | None = None):
        self.s = s
        self.t = t
        self.value = value
        if message is None:
            detail = f" (computed entry {value!r})" if value is not None else ""
            message = f"transition ({s!r} -> {t!r}) is not stochastic{detail}"
        super().__init__(message)


class DegenerateSourceError(DichotomicError):
    """A transition was requested from a source time where it is undefined.

    For symmetric interpolation this is a source whose distribution is
    uniform: no symmetric stochastic matrix can move the uniform vector.
    """

    def __init__(self, s: float, message: str | None = None):
        self.s = s
        if message is None:
            message = f"source time {s!r} is degenerate (uniform distribution)"
        super().__init__(message)


class SymmetryError(DichotomicError):
    """A symmetric-family precondition failed; names the offending pair."""

    def __init__(self, s: float, t: float):
        self.s = s
        self.t = t
        super().__init__(f"matrix for pair ({s!r}, {t!r}) is not symmetric")


class UndefinedConditionalError(DichotomicError):
    """Conditioning on a zero-probability state; names state and time index."""

    def __init__(self, state: int, time_index: int):
        self.state = state
        self.time_index = time_index
        super().__init__(
            f"conditional undefined: state {state} at time index {time_index} "
            "has zero probability"
        )


class UndefinedEstimateError(DichotomicError):
    """An empirical estimator has an empty conditioning cell."""

    def __init__(self, state: int, time_index: int, occupancy: tuple[int, int]):
        self.state = state
        self.time_index = time_index
        self.occupancy = occupancy
        super().__init__(
            f"no sample paths in state {state} at time index {time_index} "
            f"(occupancy counts: state1={occupancy[0]}, state2={occupancy[1]})"
        )


class CapacityError(DichotomicError):
    """A path-measure request exceeds the configured grid-size cap."""


class InconsistentSpecError(DichotomicError):
    """A pairwise spec failed its internal consistency conditions."""
