import math

import numpy as np
import pytest

from dichotomic.chains import (
    admissible_initial,
    ck_certify,
    ck_residual,
    interpolation_family,
    maximal_markov_interval,
    path_consistency_residual,
    propagate,
    symmetric_freeze_check,
    symmetric_interpolation,
)
from dichotomic.core import (
    IDENTITY,
    UNIFORM,
    ProbabilityVector,
    StochasticMatrix,
    TimeGrid,
    Trajectory,
    TransitionFamily,
    constant_trajectory,
    identity_family,
)
from dichotomic.errors import (
    DegenerateSourceError,
    PositivityError,
    SymmetryError,
    ValidationError,
)
from dichotomic.quantum import gillespie_family, quantum_trajectory

QUARTER = math.pi / 4


def gillespie_array(s, t):
    c2 = math.cos(t - s) ** 2
    return np.array([[c2, 1.0 - c2], [1.0 - c2, c2]])


def decay_trajectory(rate=1.0):
    """p1 = (1 + e^{-rate t}) / 2: gap e^{-rate t} strictly decreasing."""
    return Trajectory(
        lambda t: ProbabilityVector((1.0 + math.exp(-rate * t)) / 2.0,
                                    (1.0 - math.exp(-rate * t)) / 2.0),
        description="exponential relaxation",
    )


class TestPropagate:
    def test_uniform_is_invariant_under_gillespie(self):
        fam = gillespie_family()
        for t in np.linspace(0.1, 5.0, 17):
            assert propagate(fam, UNIFORM, t).max_abs_difference(UNIFORM) <= 1e-12

    def test_matches_direct_formula(self):
        # oracle: numpy evaluation of p^G(t,0) @ (0.3, 0.7)
        oracle = gillespie_array(0.0, math.pi / 8) @ np.array([0.3, 0.7])
        out = propagate(gillespie_family(), ProbabilityVector(0.3, 0.7), math.pi / 8)
        assert out.p1 == pytest.approx(oracle[0], abs=1e-15)
        assert out.p1 == pytest.approx(0.35857864376269044, abs=1e-12)

    def test_time_zero_returns_input(self):
        p = ProbabilityVector(0.3, 0.7)
        assert propagate(gillespie_family(), p, 0.0) == p


class TestPathConsistencyResidual:
    def test_uniform_start_is_consistent(self):
        fam = gillespie_family()
        rng = np.random.Generator(np.random.Philox(11))
        for u1, u2 in rng.random((50, 2)):
            s, t = sorted((0.01 + u1 * 2.0, 0.01 + u2 * 2.0))
            if s == t:
                continue
            assert path_consistency_residual(fam, UNIFORM, s, t) <= 1e-12

    def test_point_mass_start_breaks(self):
        # oracle: direct numpy comparison of one-hop vs two-hop propagation
        s, t = math.pi / 8, math.pi / 4
        p0 = np.array([1.0, 0.0])
        direct = gillespie_array(0.0, t) @ p0
        hopped = gillespie_array(s, t) @ (gillespie_array(0.0, s) @ p0)
        oracle = np.abs(direct - hopped).max()
        got = path_consistency_residual(
            gillespie_family(), ProbabilityVector(1.0, 0.0), s, t
        )
        assert got == pytest.approx(oracle, abs=1e-15)
        assert got == pytest.approx(0.25, abs=1e-12)

    def test_nonuniform_start_breaks_somewhere(self):
        fam = gillespie_family()
        worst = max(
            path_consistency_residual(fam, ProbabilityVector(0.7, 0.3), s, t)
            for s, t in [(0.3, 0.7), (0.5, 1.1), (0.9, 1.4)]
        )
        assert worst > 1e-3

    def test_ck_family_is_path_independent_for_any_start(self):
        fam = interpolation_family(quantum_trajectory())
        rng = np.random.Generator(np.random.Philox(12))
        for p1, u1, u2 in rng.random((50, 3)):
            s, t = sorted((0.01 + u1 * 0.7, 0.01 + u2 * 0.7))
            if s == t:
                continue
            p0 = ProbabilityVector(p1, 1.0 - p1)
            assert path_consistency_residual(fam, p0, s, t) <= 1e-12

    def test_requires_strict_ordering(self):
        with pytest.raises(ValidationError):
            path_consistency_residual(gillespie_family(), UNIFORM, 0.5, 0.5)


class TestAdmissibleInitial:
    def test_gillespie_forces_uniform(self):
        # oracle: dense scan of the worst residual over the a-parameter
        grid = TimeGrid.from_times((0.0, math.pi / 8, QUARTER, 3 * math.pi / 8))
        fam = gillespie_family()
        pairs = [(grid[j], grid[i]) for j, i in grid.pairs() if grid[j] > 0.0]
        a_scan = np.linspace(0.0, 1.0, 10001)
        worst = np.array(
            [
                max(
                    np.abs(
                        gillespie_array(0.0, t) @ np.array([a, 1 - a])
                        - gillespie_array(s, t)
                        @ (gillespie_array(0.0, s) @ np.array([a, 1 - a]))
                    ).max()
                    for s, t in pairs
                )
                for a in a_scan
            ]
        )
        assert a_scan[worst.argmin()] == pytest.approx(0.5, abs=1e-4)
        assert worst.min() <= 1e-12

        result = admissible_initial(fam, grid)
        assert result.kind == "unique_point"
        assert result.value == pytest.approx(0.5, abs=1e-9)
        assert result.residual <= 1e-12

    def test_ck_family_allows_whole_simplex(self):
        grid = TimeGrid.linspace(0.0, QUARTER, 7)
        fam = interpolation_family(quantum_trajectory())
        result = admissible_initial(fam, grid)
        assert result.kind == "all_of_simplex"
        assert result.residual <= 1e-12

    def test_identity_family_allows_whole_simplex(self):
        grid = TimeGrid.linspace(0.0, 1.0, 5)
        result = admissible_initial(identity_family(), grid)
        assert result.kind == "all_of_simplex"

    def test_needs_three_points(self):
        with pytest.raises(ValidationError):
            admissible_initial(gillespie_family(), TimeGrid.from_times((0.0, 1.0)))

    def test_contradictory_family_yields_empty(self):
        # rank-one projections onto different points make the direct and
        # hopped propagations disagree independently of a
        to_uniform = StochasticMatrix(0.5, 0.5, 0.5, 0.5)
        to_eight = StochasticMatrix(0.8, 0.8, 0.2, 0.2)

        def evaluate(s, t):
            if s == t:
                return IDENTITY
            if s == 0.0 and t == 2.0:
                return to_eight
            if s == 0.0:
                return to_uniform
            return IDENTITY

        fam = TransitionFamily(evaluator=evaluate)
        grid = TimeGrid.from_times((0.0, 1.0, 2.0))
        result = admissible_initial(fam, grid)
        assert result.kind == "empty"
        assert result.residual == pytest.approx(0.3, abs=1e-9)


class TestCKResidual:
    def test_gillespie_quarter_triple(self):
        # oracle: direct numpy multiply, diagonal cos^4 + sin^4 = 3/4 vs 1/2
        s, t, u = 0.0, math.pi / 8, QUARTER
        oracle = np.abs(
            gillespie_array(t, u) @ gillespie_array(s, t) - gillespie_array(s, u)
        ).max()
        got = ck_residual(gillespie_family(), s, t, u)
        assert got == pytest.approx(oracle, abs=1e-15)
        assert got == pytest.approx(0.25, abs=1e-12)

    def test_interpolation_family_satisfies_ck(self):
        fam = interpolation_family(quantum_trajectory())
        rng = np.random.Generator(np.random.Philox(13))
        for draws in rng.random((100, 3)):
            s, t, u = np.sort(draws) * QUARTER
            if s == t or t == u:
                continue
            assert ck_residual(fam, s, t, u) <= 1e-12

    def test_degenerate_triple_vanishes(self):
        assert ck_residual(gillespie_family(), 0.5, 0.5, 1.0) <= 1e-12


class TestCKCertify:
    def test_gillespie_fails_on_three_point_grid(self):
        report = ck_certify(gillespie_family(), TimeGrid.from_times((0.0, math.pi / 8, QUARTER)))
        assert not report.passed
        assert report.worst_residual == pytest.approx(0.25, abs=1e-12)
        assert report.worst_triple == (0.0, math.pi / 8, QUARTER)

    def test_interpolation_passes_dense_grid(self):
        fam = interpolation_family(quantum_trajectory())
        report = ck_certify(fam, TimeGrid.linspace(0.0, QUARTER, 50))
        assert report.passed
        assert report.n_triples == 19600
        assert report.worst_residual <= 1e-12

    def test_two_point_grid_passes_vacuously(self):
        report = ck_certify(gillespie_family(), TimeGrid.from_times((0.0, 1.0)))
        assert report.passed and report.n_triples == 0

    def test_failures_are_reported_not_raised(self):
        fam = interpolation_family(quantum_trajectory())
        report = ck_certify(fam, TimeGrid.linspace(0.0, 1.2, 12))
        assert not report.passed
        assert report.n_failures > 0
        assert report.first_failure is not None
        assert report.first_failure.mode in ("positivity", "degenerate_source")


class TestFreezeCheck:
    def test_gillespie_freezes_uniform_forever(self):
        rng = np.random.Generator(np.random.Philox(14))
        times = np.unique(rng.random(100) * 12.0)
        grid = TimeGrid.from_times([0.0, *times.tolist()])
        report = symmetric_freeze_check(gillespie_family(), 0.0, grid)
        assert report.passed
        assert report.max_deviation <= 1e-12
        assert report.n_times == len(times)

    def test_interpolation_family_freezes_uniform(self):
        fam = interpolation_family(quantum_trajectory())
        grid = TimeGrid.linspace(0.0, QUARTER, 20)
        report = symmetric_freeze_check(fam, 0.0, grid)
        assert report.passed

    def test_identity_family_trivially_freezes(self):
        report = symmetric_freeze_check(
            identity_family(), 0.0, TimeGrid.linspace(0.0, 2.0, 9)
        )
        assert report.passed and report.max_deviation == 0.0

    def test_asymmetric_family_rejected_with_pair(self):
        def skew(s, t):
            if t > s:
                return StochasticMatrix(0.9, 0.2, 0.1, 0.8)
            return IDENTITY

        with pytest.raises(SymmetryError) as err:
            symmetric_freeze_check(
                TransitionFamily(evaluator=skew), 0.0, TimeGrid.from_times((0.0, 1.0))
            )
        assert err.value.s == 0.0 and err.value.t == 1.0


class TestSymmetricInterpolation:
    def test_source_zero_matches_gillespie(self):
        traj = quantum_trajectory()
        gil = gillespie_family()
        for t in np.linspace(0.0, QUARTER, 20):
            m = symmetric_interpolation(traj, 0.0, t)
            assert m.max_abs_difference(gil(0.0, t)) <= 1e-12
            assert m.m11 == pytest.approx(math.cos(t) ** 2, abs=1e-12)

    def test_eighth_to_quarter_is_all_half(self):
        # oracle: (cos^2(pi/4) - sin^2(pi/8)) / cos(pi/4) = 1/2 directly
        oracle = (math.cos(QUARTER) ** 2 - math.sin(math.pi / 8) ** 2) / math.cos(
            math.pi / 4
        )
        assert oracle == pytest.approx(0.5, abs=1e-12)
        m = symmetric_interpolation(quantum_trajectory(), math.pi / 8, QUARTER)
        for entry in (m.m11, m.m12, m.m21, m.m22):
            assert entry == pytest.approx(0.5, abs=1e-12)

    def test_coincidence_gives_identity(self):
        m = symmetric_interpolation(quantum_trajectory(), 0.3, 0.3)
        assert m == IDENTITY

    def test_uniform_source_is_degenerate(self):
        with pytest.raises(DegenerateSourceError):
            symmetric_interpolation(quantum_trajectory(), QUARTER, QUARTER + 0.1)

    def test_growing_gap_breaks_positivity_with_value(self):
        traj = quantum_trajectory()
        with pytest.raises(PositivityError) as err:
            symmetric_interpolation(traj, 1.0, 1.2)
        assert err.value.value is not None
        assert not 0.0 <= err.value.value <= 1.0

    def test_reproduces_target_for_generic_trajectory(self):
        traj = decay_trajectory(0.7)
        rng = np.random.Generator(np.random.Philox(15))
        for u1, u2 in rng.random((100, 2)) * 3.0:
            s, t = sorted((u1, u2))
            if s == t:
                continue
            m = symmetric_interpolation(traj, s, t)
            assert (
                ProbabilityVector(
                    m.m11 * traj(s).p1 + m.m12 * traj(s).p2,
                    m.m21 * traj(s).p1 + m.m22 * traj(s).p2,
                ).max_abs_difference(traj(t))
                <= 1e-12
            )


class TestInterpolationFamily:
    def test_propagates_quantum_trajectory(self):
        traj = quantum_trajectory()
        fam = interpolation_family(traj)
        rng = np.random.Generator(np.random.Philox(16))
        for u1, u2 in rng.random((200, 2)) * QUARTER:
            s, t = sorted((u1, u2))
            if s == t:
                continue
            moved = propagate(fam, traj(s), t, start=s)
            assert moved.max_abs_difference(traj(t)) <= 1e-12

    def test_constant_trajectory_gives_identity_family(self):
        fam = interpolation_family(constant_trajectory(ProbabilityVector(0.8, 0.2)))
        for s, t in [(0.0, 0.5), (0.3, 2.0), (1.0, 1.0)]:
            assert fam(s, t).max_abs_difference(IDENTITY) <= 1e-12

    def test_decay_trajectory_valid_and_ck_on_long_grid(self):
        fam = interpolation_family(decay_trajectory())
        report = ck_certify(fam, TimeGrid.linspace(0.0, 4.0, 25))
        assert report.passed
        assert report.worst_residual <= 1e-12

    def test_negative_gap_sources_are_valid(self):
        # p1 below one half: the gap is negative but shrinking in magnitude,
        # so the interpolation stays stochastic and still satisfies CK
        traj = Trajectory(
            lambda t: ProbabilityVector(
                (1.0 - math.exp(-0.8 * t)) / 2.0, (1.0 + math.exp(-0.8 * t)) / 2.0
            ),
            description="relaxation from below",
        )
        fam = interpolation_family(traj)
        m = fam(0.5, 1.5)
        assert m.m11 == pytest.approx((1.0 + math.exp(-0.8)) / 2.0, abs=1e-12)
        report = ck_certify(fam, TimeGrid.linspace(0.0, 5.0, 20))
        assert report.passed
        rng = np.random.Generator(np.random.Philox(21))
        for u1, u2 in rng.random((50, 2)) * 4.0:
            s, t = sorted((u1, u2))
            if s == t:
                continue
            moved = propagate(fam, traj(s), t, start=s)
            assert moved.max_abs_difference(traj(t)) <= 1e-12

    def test_valid_source_domain_excludes_uniform_points(self):
        fam = interpolation_family(quantum_trajectory())
        assert fam.valid_source_domain(0.1)
        assert not fam.valid_source_domain(QUARTER)

    def test_identity_limit_near_coincidence(self):
        # distance from identity at gap eps is about eps * tan(2s)
        fam = interpolation_family(quantum_trajectory())
        eps = 1e-6
        for s in (0.0, math.pi / 16, math.pi / 8):
            m = fam(s, s + eps)
            assert m.max_abs_difference(IDENTITY) <= 3.0 * eps


class TestMaximalMarkovInterval:
    def test_quantum_trajectory_stops_at_quarter_period(self):
        grid = TimeGrid.linspace(0.0, math.pi / 2, 10000)
        report = maximal_markov_interval(quantum_trajectory(), grid)
        assert abs(report.t_star - QUARTER) <= 2.0 * report.resolution
        assert report.failure_witness is not None
        s, t = report.failure_witness
        assert s < t and t > report.t_star - report.resolution
        assert report.failure_mode in ("positivity", "degenerate_source", "sign_flip")

    def test_grid_hitting_quarter_exactly_reports_degenerate_source(self):
        grid = TimeGrid.linspace(0.0, math.pi / 2, 10001)  # contains pi/4
        report = maximal_markov_interval(quantum_trajectory(), grid)
        assert report.t_star == pytest.approx(QUARTER, abs=1e-12)
        assert report.failure_mode == "degenerate_source"

    def test_constant_trajectory_never_fails(self):
        grid = TimeGrid.linspace(0.0, 10.0, 500)
        report = maximal_markov_interval(
            constant_trajectory(ProbabilityVector(0.8, 0.2)), grid
        )
        assert report.t_star == grid.horizon
        assert report.failure_witness is None

    def test_decay_trajectory_reaches_horizon(self):
        grid = TimeGrid.linspace(0.0, 8.0, 2000)
        report = maximal_markov_interval(decay_trajectory(), grid)
        assert report.t_star == grid.horizon
        assert report.failure_mode is None

    def test_no_go_beyond_quarter_for_any_horizon(self):
        # any horizon exceeding pi/4 by more than a step yields a witness
        traj = quantum_trajectory()
        for horizon in (0.9, 1.2, math.pi / 2, 2.5):
            grid = TimeGrid.linspace(0.0, horizon, 4000)
            report = maximal_markov_interval(traj, grid)
            assert report.t_star < horizon
            assert report.failure_witness is not None


class TestReconciliation:
    def test_interpolation_from_zero_equals_gillespie(self):
        gil = gillespie_family()
        fam = interpolation_family(quantum_trajectory())
        rng = np.random.Generator(np.random.Philox(17))
        for u in rng.random(100):
            t = QUARTER * (1.0 - u)
            if t == 0.0:
                continue
            assert gil(0.0, t).max_abs_difference(fam(0.0, t)) <= 1e-12
