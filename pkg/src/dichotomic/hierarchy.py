"""Finite-grid path measures over Z2 and the consistency hierarchy.

A path measure assigns a probability to each of the 2^n state
assignments on an n-point time grid. Its single-time marginals, pairwise
conditionals, and triple conditionals form the first three levels of the
consistency hierarchy; ``check_consistency`` verifies the first two
levels of a stand-alone pairwise specification, ``check_hierarchy``
verifies a measure against a specification together with every
third-level summation identity, and ``feasibility_solve`` decides
whether a pairwise specification extends to *any* path measure at all
(Markov or not), returning a witness measure or a Farkas-style
infeasibility certificate.

Weights are stored flat in lexicographic path order: the assignment
(s_1, ..., s_n), time-ascending with state 1 first, lives at index
sum((s_i - 1) << (n - 1 - i)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    DEFAULT_TOL,
    ProbabilityVector,
    StochasticMatrix,
    TimeGrid,
    ToleranceConfig,
    TransitionFamily,
    matrix_apply,
)
from .errors import (
    CapacityError,
    InconsistentSpecError,
    UndefinedConditionalError,
    ValidationError,
)
from .simplex import solve_phase_one

N_MAX_DEFAULT = 12

_WEIGHT_TOL = 1e-12


def path_index(states: tuple[int, ...]) -> int:
    """Flat index of a path, first time most significant, state 1 first."""
    idx = 0
    for s in states:
        if s not in (1, 2):
            raise ValidationError(f"states must be 1 or 2, got {s!r}")
        idx = (idx << 1) | (s - 1)
    return idx


def index_path(idx: int, n: int) -> tuple[int, ...]:
    return tuple(((idx >> (n - 1 - i)) & 1) + 1 for i in range(n))


def _state_bits(n: int, i: int) -> np.ndarray:
    """Bit of the state at time index i for every path index (0 = state 1)."""
    return (np.arange(2 ** n) >> (n - 1 - i)) & 1


@dataclass(frozen=True, eq=False)
class PathMeasure:
    """Joint distribution over the 2^n paths of an n-point grid."""

    grid: TimeGrid
    weights: np.ndarray
    n_max: int = N_MAX_DEFAULT

    def __post_init__(self):
        n = len(self.grid)
        if n > self.n_max:
            raise CapacityError(
                f"grid has {n} points, exceeding the cap of {self.n_max} "
                f"(2^{n} weights)"
            )
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.shape[0] != 2 ** n:
            raise ValidationError(
                f"expected {2 ** n} weights for {n} grid points, got {w.shape[0]}"
            )
        if w.min(initial=0.0) < -_WEIGHT_TOL:
            raise ValidationError(f"weights must be nonnegative, min={w.min()!r}")
        w = np.clip(w, 0.0, None)
        total = math.fsum(w.tolist())
        if abs(total - 1.0) > _WEIGHT_TOL:
            raise ValidationError(f"weights must sum to 1, got {total!r}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n_times(self) -> int:
        return len(self.grid)

    def weight_of(self, states: tuple[int, ...]) -> float:
        if len(states) != self.n_times:
            raise ValidationError(
                f"path length {len(states)} does not match grid size {self.n_times}"
            )
        return float(self.weights[path_index(states)])


def marginal(measure: PathMeasure, time_index: int) -> ProbabilityVector:
    """Single-time distribution at the given grid index."""
    n = measure.n_times
    if not 0 <= time_index < n:
        raise ValidationError(f"time index {time_index} out of range for n={n}")
    bits = _state_bits(n, time_index)
    p1 = math.fsum(measure.weights[bits == 0].tolist())
    return ProbabilityVector(p1, 1.0 - p1)


def pairwise_joint(measure: PathMeasure, i: int, j: int) -> np.ndarray:
    """Joint distribution J[a, b] = P(state a+1 at i, state b+1 at j), i > j."""
    n = measure.n_times
    if not (0 <= j < i < n):
        raise ValidationError(f"need 0 <= j < i < n, got i={i}, j={j}, n={n}")
    bi, bj = _state_bits(n, i), _state_bits(n, j)
    joint = np.empty((2, 2))
    for a in (0, 1):
        for b in (0, 1):
            joint[a, b] = math.fsum(
                measure.weights[(bi == a) & (bj == b)].tolist()
            )
    return joint


def pairwise_transition(measure: PathMeasure, i: int, j: int) -> StochasticMatrix:
    """Conditional of the state at index i given the state at index j < i.

    Raises UndefinedConditionalError when a conditioning state has zero
    probability.
    """
    joint = pairwise_joint(measure, i, j)
    cols = joint.sum(axis=0)
    for b in (0, 1):
        if cols[b] <= 0.0:
            raise UndefinedConditionalError(state=b + 1, time_index=j)
    cond = joint / cols
    return StochasticMatrix(cond[0, 0], cond[0, 1], cond[1, 0], cond[1, 1])


def _triple_joint(measure: PathMeasure, i: int, j: int, k: int) -> np.ndarray:
    """J[a, b, c] = P(a+1 at i, b+1 at j, c+1 at k) for i > j > k."""
    n = measure.n_times
    bi, bj, bk = _state_bits(n, i), _state_bits(n, j), _state_bits(n, k)
    joint = np.empty((2, 2, 2))
    for a in (0, 1):
        for b in (0, 1):
            for c in (0, 1):
                joint[a, b, c] = math.fsum(
                    measure.weights[(bi == a) & (bj == b) & (bk == c)].tolist()
                )
    return joint


def markov_closure_residual(measure: PathMeasure, i: int, j: int, k: int) -> float:
    """How far triple conditionals are from their pairwise reductions.

    Max over supported cells of |P(s1 at i | s2 at j, s3 at k) -
    P(s1 at i | s2 at j)|. Conditioning cells with zero probability impose
    no constraint and are skipped, which makes the residual well defined
    for measures with degenerate marginals (e.g. a deterministic start).
    """
    if not (0 <= k < j < i < measure.n_times):
        raise ValidationError(f"need k < j < i, got i={i}, j={j}, k={k}")
    joint3 = _triple_joint(measure, i, j, k)
    joint2 = joint3.sum(axis=0)          # P(s2 at j, s3 at k)
    joint_ij = joint3.sum(axis=2)        # P(s1 at i, s2 at j)
    pj = joint2.sum(axis=1)              # P(s2 at j)
    worst = 0.0
    for b in (0, 1):
        for c in (0, 1):
            if joint2[b, c] <= 0.0:
                continue
            for a in (0, 1):
                triple_cond = joint3[a, b, c] / joint2[b, c]
                pair_cond = joint_ij[a, b] / pj[b]
                worst = max(worst, abs(triple_cond - pair_cond))
    return float(worst)


# --------------------------------------------------------------------------
# Pairwise specifications
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PairwiseSpec:
    """Marginals at every grid time plus a transition for every ordered pair.

    Transitions are keyed by index pairs (j, i) with j < i, earlier index
    first. Construction validates shapes and per-object invariants;
    whether the transitions actually propagate the marginals (consistency
    condition on the second hierarchy level) is checked separately by
    ``check_consistency`` so that inconsistent specifications can be
    built and diagnosed.
    """

    grid: TimeGrid
    marginals: tuple[ProbabilityVector, ...]
    transitions: dict[tuple[int, int], StochasticMatrix]

    def __post_init__(self):
        n = len(self.grid)
        marginals = tuple(self.marginals)
        if len(marginals) != n:
            raise ValidationError(
                f"expected {n} marginals, got {len(marginals)}"
            )
        expected = set(self.grid.pairs())
        got = set(self.transitions.keys())
        if got != expected:
            missing = sorted(expected - got)
            extra = sorted(got - expected)
            raise ValidationError(
                f"transitions must cover every ordered pair; "
                f"missing {missing}, unexpected {extra}"
            )
        object.__setattr__(self, "marginals", marginals)
        object.__setattr__(self, "transitions", dict(self.transitions))

    def joint(self, j: int, i: int) -> np.ndarray:
        """Pairwise joint J[a, b] = T[a+1 | b+1] * marginal_j[b+1]."""
        t = self.transitions[(j, i)]
        mj = self.marginals[j]
        return np.array(
            [
                [t.m11 * mj.p1, t.m12 * mj.p2],
                [t.m21 * mj.p1, t.m22 * mj.p2],
            ]
        )


def spec_from_family(
    family: TransitionFamily,
    grid: TimeGrid,
    marginals: list[ProbabilityVector] | tuple[ProbabilityVector, ...],
) -> PairwiseSpec:
    """Tabulate a transition family on a grid together with given marginals."""
    transitions = {
        (j, i): family(grid[j], grid[i]) for j, i in grid.pairs()
    }
    return PairwiseSpec(grid, tuple(marginals), transitions)


def induced_spec(measure: PathMeasure, fill_degenerate: str = "uniform") -> PairwiseSpec:
    """The pairwise specification a measure induces.

    Conditioning states with zero probability leave their transition
    column undetermined; such columns are filled with the uniform column
    (``fill_degenerate="uniform"``, the default) or rejected
    (``fill_degenerate="error"``). Any fill choice is consistent: the
    corresponding joint constraint is 0 = 0.
    """
    if fill_degenerate not in ("uniform", "error"):
        raise ValidationError(f"unknown fill policy {fill_degenerate!r}")
    n = measure.n_times
    marginals = tuple(marginal(measure, i) for i in range(n))
    transitions: dict[tuple[int, int], StochasticMatrix] = {}
    for j, i in measure.grid.pairs():
        joint = pairwise_joint(measure, i, j)
        cols = joint.sum(axis=0)
        entries = np.empty((2, 2))
        for b in (0, 1):
            if cols[b] > 0.0:
                entries[:, b] = joint[:, b] / cols[b]
            elif fill_degenerate == "uniform":
                entries[:, b] = 0.5
            else:
                raise UndefinedConditionalError(state=b + 1, time_index=j)
        transitions[(j, i)] = StochasticMatrix(
            entries[0, 0], entries[0, 1], entries[1, 0], entries[1, 1]
        )
    return PairwiseSpec(measure.grid, marginals, transitions)


# --------------------------------------------------------------------------
# Consistency checks
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ConsistencyReport:
    """Worst violations of the first two hierarchy levels inside a spec."""

    passed: bool
    marginal_normalization: float
    column_normalization: float
    propagation: float
    worst_pair: tuple[int, int] | None


def check_consistency(
    spec: PairwiseSpec, tol: ToleranceConfig = DEFAULT_TOL
) -> ConsistencyReport:
    """Verify normalization and marginal propagation internal to a spec.

    The propagation condition requires every transition to carry the
    earlier marginal to the later one; its worst violating pair is
    reported.
    """
    marg_norm = max(
        abs((m.p1 + m.p2) - 1.0) for m in spec.marginals
    )
    col_norm = 0.0
    propagation = 0.0
    worst_pair: tuple[int, int] | None = None
    for (j, i), t in sorted(spec.transitions.items()):
        col_norm = max(
            col_norm,
            abs(t.m11 + t.m21 - 1.0),
            abs(t.m12 + t.m22 - 1.0),
        )
        dev = matrix_apply(t, spec.marginals[j]).max_abs_difference(
            spec.marginals[i]
        )
        if dev > propagation:
            propagation = dev
            worst_pair = (j, i)
    passed = (
        marg_norm <= tol.tol_solver
        and col_norm <= tol.tol_solver
        and propagation <= tol.tol_solver
    )
    return ConsistencyReport(passed, marg_norm, col_norm, propagation, worst_pair)


@dataclass(frozen=True)
class HierarchyReport:
    """Worst violations of a measure against a spec, plus level-three identities."""

    passed: bool
    marginal_deviation: float
    transition_deviation: float
    triple_normalization: float
    reduction_over_middle: float
    reduction_over_earliest: float


def check_hierarchy(
    measure: PathMeasure,
    spec: PairwiseSpec,
    tol: ToleranceConfig = DEFAULT_TOL,
) -> HierarchyReport:
    """Verify a measure reproduces a spec and satisfies the level-three identities.

    Marginals and pairwise conditionals of the measure are compared to
    the spec (transition columns only where the conditioning state is
    supported). Triple conditionals are derived from the measure, never
    stored, so the two summation identities relating them to lower levels
    hold or fail as facts about the measure; conditioning cells of zero
    probability are vacuous and skipped.
    """
    if len(measure.grid) != len(spec.grid) or any(
        a != b for a, b in zip(measure.grid, spec.grid)
    ):
        raise ValidationError("measure and spec grids differ")
    n = measure.n_times

    marg_dev = max(
        marginal(measure, i).max_abs_difference(spec.marginals[i])
        for i in range(n)
    )

    trans_dev = 0.0
    for j, i in measure.grid.pairs():
        joint = pairwise_joint(measure, i, j)
        cols = joint.sum(axis=0)
        t = spec.transitions[(j, i)]
        for b in (0, 1):
            if cols[b] <= 0.0:
                continue
            for a in (0, 1):
                trans_dev = max(
                    trans_dev, abs(joint[a, b] / cols[b] - t.entry(a + 1, b + 1))
                )

    triple_norm = 0.0
    red_mid = 0.0
    red_early = 0.0
    for early, mid, late in measure.grid.triples():
        i, j, k = late, mid, early  # conditionals run latest-first
        joint3 = _triple_joint(measure, i, j, k)
        joint2_jk = joint3.sum(axis=0)
        joint2_ij = joint3.sum(axis=2)
        joint2_ik = joint3.sum(axis=1)
        pk = joint2_jk.sum(axis=0)
        pj = joint2_jk.sum(axis=1)
        for b in (0, 1):
            for c in (0, 1):
                if joint2_jk[b, c] <= 0.0:
                    continue
                total = joint3[:, b, c].sum() / joint2_jk[b, c]
                triple_norm = max(triple_norm, abs(total - 1.0))
        # Sum over the middle state: the triple conditional times the
        # middle-given-earliest conditional must reduce to the
        # latest-given-earliest conditional.
        for c in (0, 1):
            if pk[c] <= 0.0:
                continue
            for a in (0, 1):
                acc = 0.0
                for b in (0, 1):
                    if joint2_jk[b, c] <= 0.0:
                        continue
                    acc += (joint3[a, b, c] / joint2_jk[b, c]) * (
                        joint2_jk[b, c] / pk[c]
                    )
                red_mid = max(red_mid, abs(acc - joint2_ik[a, c] / pk[c]))
        # Sum over the earliest state: weighting by the earliest marginal
        # must reduce to the latest-and-middle joint.
        for b in (0, 1):
            if pj[b] <= 0.0:
                continue
            for a in (0, 1):
                acc = 0.0
                for c in (0, 1):
                    if joint2_jk[b, c] <= 0.0:
                        continue
                    acc += (
                        (joint3[a, b, c] / joint2_jk[b, c])
                        * (joint2_jk[b, c] / pk[c])
                        * pk[c]
                    )
                red_early = max(red_early, abs(acc - joint2_ij[a, b]))

    passed = (
        marg_dev <= tol.tol_solver
        and trans_dev <= tol.tol_solver
        and triple_norm <= tol.tol_solver
        and red_mid <= tol.tol_solver
        and red_early <= tol.tol_solver
    )
    return HierarchyReport(
        passed, marg_dev, trans_dev, triple_norm, red_mid, red_early
    )


# --------------------------------------------------------------------------
# Markov joint construction
# --------------------------------------------------------------------------


def markov_joint(
    family: TransitionFamily,
    p0: ProbabilityVector,
    grid: TimeGrid,
    n_max: int = N_MAX_DEFAULT,
) -> PathMeasure:
    """Chain-rule measure: weight(s_1..s_n) = p0(s_1) * prod step[s_{m+1}|s_m].

    Uses only consecutive grid transitions, so it is well defined even
    for families that break Chapman-Kolmogorov; its non-consecutive
    pairwise transitions then differ from the family's own matrices.
    """
    n = len(grid)
    if n > n_max:
        raise CapacityError(f"grid has {n} points, exceeding the cap of {n_max}")
    w = np.array([p0.p1, p0.p2])
    for m in range(n - 1):
        step = family(grid[m], grid[m + 1])
        # transposed[earlier, later] so broadcasting extends the last axis
        transposed = np.array([[step.m11, step.m21], [step.m12, step.m22]])
        w = w[..., None] * transposed
    return PathMeasure(grid, w.reshape(-1), n_max=n_max)


# --------------------------------------------------------------------------
# Feasibility
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CorrelationCheck:
    """Three-time correlation inequality |E01 + E12| <= 1 + E02.

    Correlations encode the states as +1 and -1. Every path measure on
    three times satisfies the inequality, so a violation is a
    human-readable proof of infeasibility.
    """

    e01: float
    e12: float
    e02: float
    lhs: float
    rhs: float
    violated: bool


@dataclass(frozen=True)
class InfeasibilityCertificate:
    """Nonnegative-combination proof that no path measure matches the spec.

    The rows listed in ``combination`` (constraint label, coefficient)
    define an aggregate equality sum(coef * row) applied to the weight
    vector. The aggregated coefficients on every weight are <= 0, yet the
    aggregated right-hand side equals ``margin`` > 0, so no nonnegative
    weight vector can satisfy the constraints.
    """

    combination: tuple[tuple[str, float], ...]
    margin: float


@dataclass(frozen=True)
class FeasibilityResult:
    status: str                      # "feasible" | "infeasible"
    witness: PathMeasure | None
    certificate: InfeasibilityCertificate | None
    correlation_check: CorrelationCheck | None
    witness_deviation: float | None  # worst spec reproduction error
    method: str                      # "markov_closure" | "simplex"


def _correlation(joint: np.ndarray) -> float:
    return float(joint[0, 0] - joint[0, 1] - joint[1, 0] + joint[1, 1])


def correlation_check(spec: PairwiseSpec, tol: ToleranceConfig = DEFAULT_TOL) -> CorrelationCheck:
    """Evaluate the three-time correlation inequality on a 3-point spec."""
    if len(spec.grid) != 3:
        raise ValidationError("correlation check needs exactly three times")
    e01 = _correlation(spec.joint(0, 1))
    e12 = _correlation(spec.joint(1, 2))
    e02 = _correlation(spec.joint(0, 2))
    lhs = abs(e01 + e12)
    rhs = 1.0 + e02
    return CorrelationCheck(
        e01=e01, e12=e12, e02=e02, lhs=lhs, rhs=rhs,
        violated=lhs > rhs + tol.tol_solver,
    )


def _assemble_constraints(spec: PairwiseSpec):
    """Equality rows (A, b, labels) for the weight vector, joints included.

    All constraints are linear in the weights because pairwise
    specifications enter through joints (transition times the earlier
    marginal) instead of conditionals.
    """
    n = len(spec.grid)
    size = 2 ** n
    rows: list[np.ndarray] = []
    rhs: list[float] = []
    labels: list[str] = []
    bits = [_state_bits(n, i) for i in range(n)]
    for i in range(n):
        for a in (0, 1):
            rows.append((bits[i] == a).astype(float))
            rhs.append(spec.marginals[i].component(a + 1))
            labels.append(f"marginal[t={spec.grid[i]!r}][state={a + 1}]")
    for j, i in spec.grid.pairs():
        joint = spec.joint(j, i)
        for a in (0, 1):
            for b in (0, 1):
                rows.append(((bits[i] == a) & (bits[j] == b)).astype(float))
                rhs.append(float(joint[a, b]))
                labels.append(
                    f"joint[t={spec.grid[j]!r}->t={spec.grid[i]!r}]"
                    f"[later={a + 1},earlier={b + 1}]"
                )
    return np.array(rows), np.array(rhs), labels, size


def _spec_reproduction_error(measure: PathMeasure, spec: PairwiseSpec) -> float:
    """Worst deviation of the measure's marginals and pair joints from the spec."""
    worst = max(
        marginal(measure, i).max_abs_difference(spec.marginals[i])
        for i in range(len(spec.grid))
    )
    for j, i in spec.grid.pairs():
        dev = np.abs(pairwise_joint(measure, i, j) - spec.joint(j, i)).max()
        worst = max(worst, float(dev))
    return worst


def feasibility_solve(
    spec: PairwiseSpec,
    tol: ToleranceConfig = DEFAULT_TOL,
    n_max: int = N_MAX_DEFAULT,
) -> FeasibilityResult:
    """Decide whether any path measure matches the spec's marginals and pairs.

    The spec must pass ``check_consistency`` first (InconsistentSpecError
    otherwise). The chain-rule completion built from the consecutive
    transitions is tried as a canonical witness; when it reproduces every
    pairwise joint the hierarchy closes at level two and that measure is
    returned. Otherwise the full linear feasibility problem in the 2^n
    nonnegative weights is solved by a deterministic phase-one simplex,
    yielding either a vertex witness or an infeasibility certificate. For
    three-point grids the correlation inequality is evaluated as an
    independent, human-readable cross-check.
    """
    n = len(spec.grid)
    if n > n_max:
        raise CapacityError(f"grid has {n} points, exceeding the cap of {n_max}")
    consistency = check_consistency(spec, tol)
    if not consistency.passed:
        raise InconsistentSpecError(
            "spec fails internal consistency: worst propagation violation "
            f"{consistency.propagation!r} at pair {consistency.worst_pair!r}"
        )
    corr = correlation_check(spec, tol) if n == 3 else None

    if n == 1:
        m0 = spec.marginals[0]
        witness = PathMeasure(spec.grid, np.array([m0.p1, m0.p2]), n_max=n_max)
        return FeasibilityResult(
            "feasible", witness, None, corr, 0.0, "markov_closure"
        )

    consecutive = {
        (m, m + 1): spec.transitions[(m, m + 1)] for m in range(n - 1)
    }
    chain_family = TransitionFamily(
        evaluator=lambda s, t, _c=consecutive: _lookup_step(spec.grid, _c, s, t),
        description="consecutive transitions of the spec",
    )
    candidate = markov_joint(chain_family, spec.marginals[0], spec.grid, n_max=n_max)
    candidate_err = _spec_reproduction_error(candidate, spec)
    if candidate_err <= tol.tol_solver:
        return FeasibilityResult(
            "feasible", candidate, None, corr, candidate_err, "markov_closure"
        )

    A, b, labels, size = _assemble_constraints(spec)
    lp = solve_phase_one(A, b, tol=tol.tol_solver)
    if lp.feasible:
        weights = np.clip(lp.x, 0.0, None)
        weights = weights / math.fsum(weights.tolist())
        witness = PathMeasure(spec.grid, weights, n_max=n_max)
        return FeasibilityResult(
            "feasible",
            witness,
            None,
            corr,
            _spec_reproduction_error(witness, spec),
            "simplex",
        )

    y = lp.certificate
    scale = np.abs(y).max()
    y_scaled = y / scale if scale > 0 else y
    margin = float(y_scaled @ b)
    combination = tuple(
        (labels[r], float(y_scaled[r]))
        for r in range(len(labels))
        if abs(y_scaled[r]) > tol.tol_solver
    )
    certificate = InfeasibilityCertificate(combination=combination, margin=margin)
    return FeasibilityResult("infeasible", None, certificate, corr, None, "simplex")


def _lookup_step(
    grid: TimeGrid,
    consecutive: dict[tuple[int, int], StochasticMatrix],
    s: float,
    t: float,
) -> StochasticMatrix:
    for (j, i), m in consecutive.items():
        if grid[j] == s and grid[i] == t:
            return m
    raise ValidationError(f"({s!r}, {t!r}) is not a consecutive grid pair")
