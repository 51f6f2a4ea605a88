"""Consistency analysis for two-state transition families.

This module turns the central claims about dichotomic jump processes into
executable checks:

* ``propagate`` / ``path_consistency_residual``: does propagating a
  distribution through an intermediate time agree with propagating it
  directly? For the measurement-probability (gillespie) family the
  mismatch is ``|a - 1/2| * |sin 2(t-s) * sin 2s|`` for an initial
  distribution (a, 1-a), so only the uniform initial vector survives.
* ``admissible_initial``: solves those constraints, which are affine in
  the single unknown a, and classifies the solution set.
* ``ck_residual`` / ``ck_certify``: Chapman-Kolmogorov composition
  residuals over a grid.
* ``symmetric_freeze_check``: symmetric (hence doubly stochastic)
  families leave the uniform distribution invariant forever.
* ``symmetric_interpolation`` / ``interpolation_family``: the unique
  symmetric stochastic matrix carrying traj(s) to traj(t), a Markov
  family wherever |p1 - p2| is nonvanishing and non-increasing.
* ``maximal_markov_interval``: the largest horizon on which that
  construction stays a valid stochastic family.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import (
    DEFAULT_TOL,
    IDENTITY,
    UNIFORM,
    ProbabilityVector,
    StochasticMatrix,
    TimeGrid,
    ToleranceConfig,
    Trajectory,
    TransitionFamily,
    is_symmetric,
    matrix_apply,
    matrix_compose,
)
from .errors import (
    DegenerateSourceError,
    DichotomicError,
    PositivityError,
    SymmetryError,
    ValidationError,
)

# --------------------------------------------------------------------------
# Propagation and path consistency
# --------------------------------------------------------------------------


def propagate(
    family: TransitionFamily,
    p0: ProbabilityVector,
    t: float,
    start: float = 0.0,
) -> ProbabilityVector:
    """Distribution at time t obtained by applying family(start, t) to p0."""
    return matrix_apply(family(start, t), p0)


def path_consistency_residual(
    family: TransitionFamily,
    p0: ProbabilityVector,
    s: float,
    t: float,
    start: float = 0.0,
) -> float:
    """Max-entry mismatch between direct and through-s propagation to t.

    Zero for every (s, t) exactly when the family propagates p0
    consistently; for a Chapman-Kolmogorov family it vanishes for every
    initial distribution.
    """
    if not (start < s < t):
        raise ValidationError(
            f"need start < s < t, got start={start!r}, s={s!r}, t={t!r}"
        )
    direct = matrix_apply(family(start, t), p0)
    via = matrix_apply(family(s, t), matrix_apply(family(start, s), p0))
    return direct.max_abs_difference(via)


# --------------------------------------------------------------------------
# Admissible initial distribution
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AdmissibleInitialResult:
    """Solution set of the propagation-consistency constraints in a.

    kind: "unique_point", "all_of_simplex", "empty", or "interval".
    value: the admissible initial parameter a when kind is unique_point.
    interval: (lo, hi) bounds on a when kind is interval.
    residual: worst-case propagation mismatch over the probe pairs,
        evaluated at the returned point (or at the least-infeasible a
        when the set is empty).
    """

    kind: str
    value: float | None
    residual: float
    interval: tuple[float, float] | None = None
    n_constraints: int = 0


def _affine_constraints(
    family: TransitionFamily, grid: TimeGrid
) -> list[tuple[float, float]]:
    """Coefficients (c1, c0) with residual entry = c1 * a + c0 per pair.

    The residual of propagating (a, 1-a) is affine in a; both vector
    entries are collected for every pair grid[0] < s < t.
    """
    start = grid[0]
    at0 = ProbabilityVector(0.0, 1.0)
    at1 = ProbabilityVector(1.0, 0.0)
    constraints: list[tuple[float, float]] = []
    for j, i in grid.pairs():
        s, t = grid[j], grid[i]
        if s <= start:
            continue
        direct = family(start, t)
        hop = matrix_compose(family(s, t), family(start, s))
        c0 = matrix_apply(direct, at0).p1 - matrix_apply(hop, at0).p1
        c_at1 = matrix_apply(direct, at1).p1 - matrix_apply(hop, at1).p1
        # Entries of the residual vector are (c1*a + c0) and its negative;
        # one affine constraint per pair carries all the information.
        constraints.append((c_at1 - c0, c0))
    return constraints


def _max_abs_residual(constraints: list[tuple[float, float]], a: float) -> float:
    if not constraints:
        return 0.0
    return max(abs(c1 * a + c0) for c1, c0 in constraints)


def _argmin_max_abs(constraints: list[tuple[float, float]]) -> float:
    """Minimize the (convex, piecewise-linear) worst residual over [0, 1]."""
    lo, hi = 0.0, 1.0
    for _ in range(200):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if _max_abs_residual(constraints, m1) <= _max_abs_residual(constraints, m2):
            hi = m2
        else:
            lo = m1
    return 0.5 * (lo + hi)


def admissible_initial(
    family: TransitionFamily,
    grid: TimeGrid,
    tol: ToleranceConfig = DEFAULT_TOL,
    point_width: float = 1e-6,
) -> AdmissibleInitialResult:
    """Classify which initial distributions (a, 1-a) propagate consistently.

    Assembles the affine constraints c1 * a + c0 = 0 over all probe pairs
    and intersects their tol_solver-neighborhoods with [0, 1]. A family
    satisfying Chapman-Kolmogorov on the grid yields all_of_simplex; the
    gillespie family forces the unique point a = 1/2.
    """
    if len(grid) < 3:
        raise ValidationError("admissible_initial needs a grid with >= 3 points")
    constraints = _affine_constraints(family, grid)

    lo, hi = 0.0, 1.0
    nontrivial = False
    infeasible = False
    for c1, c0 in constraints:
        if abs(c1) <= tol.tol_solver:
            if abs(c0) > tol.tol_solver:
                infeasible = True
            continue
        center = -c0 / c1
        half = tol.tol_solver / abs(c1)
        lo = max(lo, center - half)
        hi = min(hi, center + half)
        nontrivial = True

    n = len(constraints)
    if infeasible or lo > hi:
        a_best = _argmin_max_abs(constraints)
        return AdmissibleInitialResult(
            kind="empty",
            value=None,
            residual=_max_abs_residual(constraints, a_best),
            n_constraints=n,
        )
    if not nontrivial:
        return AdmissibleInitialResult(
            kind="all_of_simplex",
            value=None,
            residual=_max_abs_residual(constraints, 0.5),
            n_constraints=n,
        )
    if hi - lo <= point_width:
        # Least-squares point of the stacked constraints, clamped to the
        # feasible window: exact for consistent systems like the
        # gillespie one, stable when constraints nearly repeat.
        num = -sum(c1 * c0 for c1, c0 in constraints)
        den = sum(c1 * c1 for c1, c0 in constraints)
        a = min(hi, max(lo, num / den))
        return AdmissibleInitialResult(
            kind="unique_point",
            value=a,
            residual=_max_abs_residual(constraints, a),
            n_constraints=n,
        )
    mid = 0.5 * (lo + hi)
    return AdmissibleInitialResult(
        kind="interval",
        value=None,
        residual=_max_abs_residual(constraints, mid),
        interval=(lo, hi),
        n_constraints=n,
    )


# --------------------------------------------------------------------------
# Chapman-Kolmogorov certification
# --------------------------------------------------------------------------


def ck_residual(family: TransitionFamily, s: float, t: float, u: float) -> float:
    """Max-entry difference between family(t,u) @ family(s,t) and family(s,u)."""
    if not (s <= t <= u):
        raise ValidationError(f"need s <= t <= u, got ({s!r}, {t!r}, {u!r})")
    composed = matrix_compose(family(t, u), family(s, t))
    return composed.max_abs_difference(family(s, u))


@dataclass(frozen=True)
class EvaluationFailure:
    """First family-evaluation failure encountered during a grid scan."""

    s: float
    t: float
    mode: str
    message: str


@dataclass(frozen=True)
class CKReport:
    passed: bool
    worst_residual: float
    worst_triple: tuple[float, float, float] | None
    n_triples: int
    n_failures: int = 0
    first_failure: EvaluationFailure | None = None


def _failure_from_error(exc: DichotomicError, s: float, t: float) -> EvaluationFailure:
    if isinstance(exc, PositivityError):
        return EvaluationFailure(exc.s, exc.t, "positivity", str(exc))
    if isinstance(exc, DegenerateSourceError):
        return EvaluationFailure(exc.s, t, "degenerate_source", str(exc))
    return EvaluationFailure(s, t, "domain", str(exc))


def ck_certify(
    family: TransitionFamily,
    grid: TimeGrid,
    tol: ToleranceConfig = DEFAULT_TOL,
) -> CKReport:
    """Evaluate the composition residual on every ordered grid triple.

    Passes when every triple evaluates and the worst residual stays
    within tol_exact. Evaluation failures (positivity violations,
    degenerate sources) are folded into the report with the first
    offending pair; iteration order is fixed, so reports are
    deterministic. A grid with fewer than three points passes vacuously.
    """
    cache: dict[tuple[int, int], StochasticMatrix] = {}

    def pair_matrix(j: int, i: int) -> StochasticMatrix:
        key = (j, i)
        if key not in cache:
            cache[key] = family(grid[j], grid[i])
        return cache[key]

    worst = 0.0
    worst_triple: tuple[float, float, float] | None = None
    n_triples = 0
    n_failures = 0
    first_failure: EvaluationFailure | None = None

    for i, j, k in grid.triples():
        s, t, u = grid[i], grid[j], grid[k]
        n_triples += 1
        try:
            composed = matrix_compose(pair_matrix(j, k), pair_matrix(i, j))
            residual = composed.max_abs_difference(pair_matrix(i, k))
        except DichotomicError as exc:
            n_failures += 1
            if first_failure is None:
                first_failure = _failure_from_error(exc, s, u)
            continue
        if residual > worst:
            worst = residual
            worst_triple = (s, t, u)

    passed = n_failures == 0 and worst <= tol.tol_exact
    return CKReport(
        passed=passed,
        worst_residual=worst,
        worst_triple=worst_triple,
        n_triples=n_triples,
        n_failures=n_failures,
        first_failure=first_failure,
    )


# --------------------------------------------------------------------------
# Freeze theorem for symmetric families
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FreezeReport:
    passed: bool
    max_deviation: float
    worst_time: float | None
    n_times: int


def symmetric_freeze_check(
    family: TransitionFamily,
    t0: float,
    grid: TimeGrid,
    tol: ToleranceConfig = DEFAULT_TOL,
) -> FreezeReport:
    """Verify that a symmetric family holds the uniform vector fixed.

    A symmetric column-stochastic matrix is doubly stochastic, so it maps
    (1/2, 1/2) to itself; once the distribution is uniform it stays
    uniform at every later time. Symmetry is a precondition: it is
    verified on every grid pair from t0 onward and a SymmetryError naming
    the first failing pair is raised.
    """
    relevant = [t0, *(t for t in grid if t > t0)]
    for idx, s in enumerate(relevant):
        for t in relevant[idx + 1:]:
            if not is_symmetric(family(s, t), tol.tol_exact):
                raise SymmetryError(s, t)
    later = relevant[1:]
    max_dev = 0.0
    worst_time: float | None = None
    for t in later:
        dev = matrix_apply(family(t0, t), UNIFORM).max_abs_difference(UNIFORM)
        if dev > max_dev:
            max_dev = dev
            worst_time = t
    return FreezeReport(
        passed=max_dev <= tol.tol_exact,
        max_deviation=max_dev,
        worst_time=worst_time,
        n_times=len(later),
    )


# --------------------------------------------------------------------------
# Symmetric interpolation of a trajectory
# --------------------------------------------------------------------------


def interpolation_coefficient(
    p_source: ProbabilityVector, p_target: ProbabilityVector
) -> float:
    """Raw diagonal entry of the symmetric matrix carrying source to target.

    Returns (p1(t) - p2(s)) / (p1(s) - p2(s)) without range checks; the
    caller decides how to treat out-of-range values. The denominator must
    be nonzero.
    """
    return (p_target.p1 - p_source.p2) / p_source.gap()


def symmetric_interpolation(
    traj: Trajectory,
    s: float,
    t: float,
    tol: float = DEFAULT_TOL.tol_exact,
) -> StochasticMatrix:
    """The unique symmetric stochastic matrix with M @ traj(s) = traj(t).

    Diagonal entry (p1(t) - p2(s)) / (p1(s) - p2(s)); the identity at
    t == s. Raises DegenerateSourceError when traj(s) is uniform with
    t > s (no symmetric matrix moves the uniform vector) and
    PositivityError, carrying the computed value, when the diagonal falls
    outside [0, 1].
    """
    if t < s:
        raise ValidationError(f"need s <= t, got s={s!r}, t={t!r}")
    if t == s:
        return IDENTITY
    ps = traj(s)
    if abs(ps.gap()) <= tol:
        raise DegenerateSourceError(s)
    m11 = interpolation_coefficient(ps, traj(t))
    if m11 < -tol or m11 > 1.0 + tol:
        raise PositivityError(s, t, value=m11)
    m11 = min(1.0, max(0.0, m11))
    return StochasticMatrix.symmetric(m11)


def interpolation_family(
    traj: Trajectory,
    tol: float = DEFAULT_TOL.tol_exact,
) -> TransitionFamily:
    """Package symmetric interpolation of a trajectory as a family.

    Valid sources are the times where the trajectory is away from
    uniform. Pairs for which the interpolation formula leaves [0, 1]
    raise a positivity error at evaluation; composition consistency
    (Chapman-Kolmogorov) is guaranteed only while |p1 - p2| is
    non-increasing, which ``maximal_markov_interval`` locates.
    """
    label = traj.description or "trajectory"
    return TransitionFamily(
        evaluator=lambda s, t: symmetric_interpolation(traj, s, t, tol),
        valid_source_domain=lambda s: abs(traj.gap(s)) > tol,
        description=f"symmetric interpolation of {label}",
    )


# --------------------------------------------------------------------------
# Maximal Markov interval
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class IntervalReport:
    """Largest horizon on which symmetric interpolation stays valid.

    t_star: supremum (to within one grid step) of horizons T such that
        every pair s < t in [0, T] on the scan grid yields a valid
        stochastic matrix.
    failure_witness: first invalid pair beyond t_star, when one exists.
    failure_mode: "positivity", "degenerate_source", or "sign_flip".
    resolution: largest adjacent step of the scan grid.
    """

    t_star: float
    failure_witness: tuple[float, float] | None
    failure_mode: str | None
    resolution: float
    n_scanned: int


def maximal_markov_interval(
    traj: Trajectory,
    scan_grid: TimeGrid,
    tol: ToleranceConfig = DEFAULT_TOL,
) -> IntervalReport:
    """Scan for the horizon where symmetric interpolation first breaks.

    A pair (s, t) is valid exactly when |gap(t)| <= |gap(s)| with
    gap(s) != 0, so validity over all pairs in [0, T] is equivalent to
    |p1 - p2| being non-increasing and nonvanishing along the grid up to
    T (a vanishing point is allowed as the final target). The scan is
    grid-based: t_star is reported to within one grid step.
    """
    times = scan_grid.times
    gaps = [traj.gap(t) for t in times]
    n = len(times)
    resolution = scan_grid.resolution

    def report(t_star, witness, mode):
        return IntervalReport(
            t_star=t_star,
            failure_witness=witness,
            failure_mode=mode,
            resolution=resolution,
            n_scanned=n,
        )

    if abs(gaps[0]) <= tol.tol_exact:
        witness = (times[0], times[1]) if n > 1 else None
        return report(times[0], witness, "degenerate_source" if witness else None)

    min_abs = abs(gaps[0])
    min_idx = 0
    for i in range(1, n):
        a = abs(gaps[i])
        if a <= tol.tol_exact:
            # Valid as a target; no transition can leave it.
            if i == n - 1:
                return report(times[i], None, None)
            return report(times[i], (times[i], times[i + 1]), "degenerate_source")
        if a > min_abs + tol.tol_exact:
            s, t = times[min_idx], times[i]
            sign_flip = (gaps[min_idx] > 0) != (gaps[i] > 0)
            return report(
                times[i - 1], (s, t), "sign_flip" if sign_flip else "positivity"
            )
        if a < min_abs:
            min_abs = a
            min_idx = i
    return report(times[-1], None, None)
