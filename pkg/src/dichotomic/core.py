"""Exact 2x2 probability algebra shared by every other module.

The state space is Z2 = {1, 2}. A distribution over it is a point in the
1-simplex, a transition is a column-stochastic 2x2 matrix (columns indexed
by the earlier state), and a transition family maps ordered time pairs
(s, t) with s <= t to such matrices. All values are validated eagerly at
construction; tiny floating-point excursions (within ``CONSTRUCTION_TOL``)
below 0 or above 1 are clipped, anything larger raises.

States are labeled 1 and 2 throughout, matching the indexing convention
``m_ij = P(state i at the later time | state j at the earlier time)`` so
that column sums equal one and ``matrix_apply(m, p_earlier) = p_later``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .errors import PositivityError, ValidationError

# Tolerance used when validating constructed values. Kept equal to the
# default tol_exact: every algebraic identity in this package is an exact
# trigonometric relation at 2x2 scale, so double precision supports it.
CONSTRUCTION_TOL = 1e-12


@dataclass(frozen=True)
class ToleranceConfig:
    """Tolerances used across the toolkit.

    tol_exact: absolute tolerance for algebraic identities.
    tol_solver: tolerance for linear solves and classification decisions.
    tol_stat: z-score bound for statistical (Monte Carlo) checks.
    """

    tol_exact: float = 1e-12
    tol_solver: float = 1e-9
    tol_stat: float = 4.0

    def __post_init__(self):
        if not (self.tol_exact > 0 and self.tol_solver > 0 and self.tol_stat > 0):
            raise ValidationError("all tolerances must be strictly positive")
        if self.tol_exact > self.tol_solver:
            raise ValidationError("tol_exact must not exceed tol_solver")


DEFAULT_TOL = ToleranceConfig()


def _checked_probability(x: float, name: str, tol: float) -> float:
    """Validate a probability, clipping excursions within tol of [0, 1]."""
    if not math.isfinite(x):
        raise ValidationError(f"{name} must be finite, got {x!r}")
    if x < -tol or x > 1.0 + tol:
        raise ValidationError(f"{name} must lie in [0, 1], got {x!r}")
    return min(1.0, max(0.0, x))


@dataclass(frozen=True)
class ProbabilityVector:
    """A distribution (p1, p2) over the two states, p1 + p2 = 1."""

    p1: float
    p2: float

    def __post_init__(self):
        p1 = _checked_probability(self.p1, "p1", CONSTRUCTION_TOL)
        p2 = _checked_probability(self.p2, "p2", CONSTRUCTION_TOL)
        if abs((p1 + p2) - 1.0) > CONSTRUCTION_TOL:
            raise ValidationError(
                f"components must sum to 1, got p1 + p2 = {p1 + p2!r}"
            )
        object.__setattr__(self, "p1", p1)
        object.__setattr__(self, "p2", p2)

    @classmethod
    def from_p1(cls, p1: float) -> "ProbabilityVector":
        return cls(p1, 1.0 - p1)

    def component(self, state: int) -> float:
        if state == 1:
            return self.p1
        if state == 2:
            return self.p2
        raise ValidationError(f"state must be 1 or 2, got {state!r}")

    def gap(self) -> float:
        """Difference p1 - p2, the coordinate along the (1, -1) eigenvector."""
        return self.p1 - self.p2

    def max_abs_difference(self, other: "ProbabilityVector") -> float:
        return max(abs(self.p1 - other.p1), abs(self.p2 - other.p2))


UNIFORM = ProbabilityVector(0.5, 0.5)


@dataclass(frozen=True)
class StochasticMatrix:
    """Column-stochastic 2x2 matrix: m11 + m21 = 1 and m12 + m22 = 1.

    Column j is the conditional distribution of the later state given
    earlier state j.
    """

    m11: float
    m12: float
    m21: float
    m22: float

    def __post_init__(self):
        vals = {}
        for name in ("m11", "m12", "m21", "m22"):
            vals[name] = _checked_probability(
                getattr(self, name), name, CONSTRUCTION_TOL
            )
        if abs(vals["m11"] + vals["m21"] - 1.0) > CONSTRUCTION_TOL:
            raise ValidationError(
                f"first column must sum to 1, got {vals['m11'] + vals['m21']!r}"
            )
        if abs(vals["m12"] + vals["m22"] - 1.0) > CONSTRUCTION_TOL:
            raise ValidationError(
                f"second column must sum to 1, got {vals['m12'] + vals['m22']!r}"
            )
        for name, v in vals.items():
            object.__setattr__(self, name, v)

    @classmethod
    def identity(cls) -> "StochasticMatrix":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def symmetric(cls, diagonal: float) -> "StochasticMatrix":
        """Symmetric doubly stochastic matrix with the given diagonal entry."""
        return cls(diagonal, 1.0 - diagonal, 1.0 - diagonal, diagonal)

    @classmethod
    def from_columns(
        cls, col1: ProbabilityVector, col2: ProbabilityVector
    ) -> "StochasticMatrix":
        return cls(col1.p1, col2.p1, col1.p2, col2.p2)

    def entry(self, i: int, j: int) -> float:
        if i not in (1, 2) or j not in (1, 2):
            raise ValidationError(f"indices must be 1 or 2, got ({i!r}, {j!r})")
        return getattr(self, f"m{i}{j}")

    def column(self, j: int) -> ProbabilityVector:
        """Conditional distribution of the later state given earlier state j."""
        if j == 1:
            return ProbabilityVector(self.m11, self.m21)
        if j == 2:
            return ProbabilityVector(self.m12, self.m22)
        raise ValidationError(f"column index must be 1 or 2, got {j!r}")

    def difference_parameter(self) -> float:
        """m11 - m21, the eigenvalue on the (1, -1) eigenvector.

        For a doubly stochastic matrix this parameter multiplies under
        composition, which is what makes the symmetric-interpolation
        family satisfy Chapman-Kolmogorov.
        """
        return self.m11 - self.m21

    def max_abs_difference(self, other: "StochasticMatrix") -> float:
        return max(
            abs(self.m11 - other.m11),
            abs(self.m12 - other.m12),
            abs(self.m21 - other.m21),
            abs(self.m22 - other.m22),
        )


IDENTITY = StochasticMatrix.identity()


def matrix_apply(m: StochasticMatrix, p: ProbabilityVector) -> ProbabilityVector:
    """Propagate a distribution: returns m @ p.

    Column-stochasticity guarantees the result stays on the simplex.
    """
    return ProbabilityVector(
        m.m11 * p.p1 + m.m12 * p.p2,
        m.m21 * p.p1 + m.m22 * p.p2,
    )


def matrix_compose(later: StochasticMatrix, earlier: StochasticMatrix) -> StochasticMatrix:
    """Matrix product later @ earlier (apply ``earlier`` first)."""
    return StochasticMatrix(
        later.m11 * earlier.m11 + later.m12 * earlier.m21,
        later.m11 * earlier.m12 + later.m12 * earlier.m22,
        later.m21 * earlier.m11 + later.m22 * earlier.m21,
        later.m21 * earlier.m12 + later.m22 * earlier.m22,
    )


def is_symmetric(m: StochasticMatrix, tol: float = DEFAULT_TOL.tol_exact) -> bool:
    return abs(m.m12 - m.m21) <= tol


def is_doubly_stochastic(m: StochasticMatrix, tol: float = DEFAULT_TOL.tol_exact) -> bool:
    """Row sums also equal one (column sums hold by construction)."""
    return abs(m.m11 + m.m12 - 1.0) <= tol and abs(m.m21 + m.m22 - 1.0) <= tol


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing time instants in [0, horizon]."""

    times: tuple[float, ...]

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        if len(times) < 1:
            raise ValidationError("a time grid needs at least one point")
        if times[0] < 0.0:
            raise ValidationError(f"grid times must be nonnegative, got {times[0]!r}")
        for a, b in zip(times, times[1:]):
            if not b > a:
                raise ValidationError(
                    f"grid times must be strictly increasing, got {a!r} before {b!r}"
                )
        object.__setattr__(self, "times", times)

    @classmethod
    def from_times(cls, times: Iterable[float]) -> "TimeGrid":
        return cls(tuple(times))

    @classmethod
    def linspace(cls, start: float, stop: float, num: int) -> "TimeGrid":
        if num < 1:
            raise ValidationError(f"linspace needs at least one point, got {num}")
        if num == 1:
            return cls((float(start),))
        step = (stop - start) / (num - 1)
        return cls(tuple(start + k * step for k in range(num)))

    @property
    def horizon(self) -> float:
        return self.times[-1]

    @property
    def resolution(self) -> float:
        """Largest adjacent step; 0.0 for a single-point grid."""
        if len(self.times) < 2:
            return 0.0
        return max(b - a for a, b in zip(self.times, self.times[1:]))

    def __len__(self) -> int:
        return len(self.times)

    def __iter__(self):
        return iter(self.times)

    def __getitem__(self, index: int) -> float:
        return self.times[index]

    def pairs(self) -> Iterable[tuple[int, int]]:
        """Ordered index pairs (j, i) with j < i."""
        n = len(self.times)
        for j in range(n):
            for i in range(j + 1, n):
                yield (j, i)

    def triples(self) -> Iterable[tuple[int, int, int]]:
        """Ordered index triples (i, j, k) with i < j < k, lexicographic."""
        n = len(self.times)
        for i in range(n):
            for j in range(i + 1, n):
                for k in range(j + 1, n):
                    yield (i, j, k)


@dataclass(frozen=True)
class Trajectory:
    """A time-indexed distribution t -> ProbabilityVector."""

    evaluator: Callable[[float], ProbabilityVector]
    description: str = ""

    def __call__(self, t: float) -> ProbabilityVector:
        return self.evaluator(t)

    def gap(self, t: float) -> float:
        return self.evaluator(t).gap()


def constant_trajectory(p: ProbabilityVector) -> Trajectory:
    return Trajectory(lambda t: p, description=f"constant ({p.p1}, {p.p2})")


@dataclass(frozen=True)
class TransitionFamily:
    """A two-parameter family of transition matrices.

    ``evaluator(s, t)`` with s <= t returns the matrix carrying the
    distribution at time s to time t; it must be the identity at s == t.
    ``valid_source_domain(s)`` marks times usable as sources (singular
    sources, where no transition out of s exists, return False).
    """

    evaluator: Callable[[float, float], StochasticMatrix]
    valid_source_domain: Callable[[float], bool] = field(
        default=lambda s: True, repr=False
    )
    description: str = ""

    def __call__(self, s: float, t: float) -> StochasticMatrix:
        if t < s:
            raise ValidationError(
                f"family evaluated with reversed times: s={s!r} > t={t!r}"
            )
        try:
            return self.evaluator(s, t)
        except ValidationError as exc:
            # Entry validation failed inside the evaluator: surface it as a
            # positivity violation carrying the offending pair.
            raise PositivityError(s, t, message=f"pair ({s!r}, {t!r}): {exc}") from exc


def identity_family() -> TransitionFamily:
    """The frozen family: identity matrix at every pair."""
    return TransitionFamily(
        evaluator=lambda s, t: IDENTITY,
        description="identity (frozen dynamics)",
    )


def family_from_matrices(
    grid: TimeGrid, matrices: dict[tuple[int, int], StochasticMatrix],
    description: str = "tabulated",
) -> TransitionFamily:
    """Family defined only on a grid, from a table keyed by index pairs."""
    index = {t: k for k, t in enumerate(grid.times)}

    def evaluate(s: float, t: float) -> StochasticMatrix:
        if s == t:
            return IDENTITY
        try:
            j, i = index[s], index[t]
        except KeyError as exc:
            raise ValidationError(
                f"time {exc.args[0]!r} is not on the family's grid"
            ) from exc
        try:
            return matrices[(j, i)]
        except KeyError as exc:
            raise ValidationError(f"no matrix tabulated for pair ({s!r}, {t!r})") from exc

    return TransitionFamily(evaluator=evaluate, description=description)


def fsum(values: Sequence[float]) -> float:
    """Exact-rounding sum, used for mass checks over many weights."""
    return math.fsum(values)
