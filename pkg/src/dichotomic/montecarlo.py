"""Ensemble sampling of two-state jump paths and empirical estimators.

Paths are drawn from a transition family used as a Markov chain over
consecutive grid steps. Randomness comes from a counter-based generator
(Philox) keyed by the seed: the uniform block is laid out one row per
path in counter order, so path k's randomness is a pure function of
(seed, k) and results cannot depend on scheduling or batching.

Sampling a family that breaks Chapman-Kolmogorov is allowed; the
resulting ensemble's non-consecutive empirical transitions then disagree
with the family's own matrices, which is the observable form of the CK
failure and is surfaced in reports rather than treated as an error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    ProbabilityVector,
    StochasticMatrix,
    TimeGrid,
    TransitionFamily,
)
from .errors import UndefinedEstimateError, ValidationError


@dataclass(frozen=True)
class SamplePath:
    """States (values 1 or 2) at each grid time of one realization."""

    states: tuple[int, ...]

    def __post_init__(self):
        if any(s not in (1, 2) for s in self.states):
            raise ValidationError("sample path states must be 1 or 2")


@dataclass(frozen=True)
class EnsembleConfig:
    n_paths: int
    seed: int
    grid: TimeGrid

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValidationError(f"n_paths must be >= 1, got {self.n_paths}")


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Array-backed path collection: states[k, i] is path k at grid index i."""

    grid: TimeGrid
    states: np.ndarray
    seed: int

    def __post_init__(self):
        s = np.asarray(self.states)
        if s.ndim != 2 or s.shape[1] != len(self.grid):
            raise ValidationError(
                f"states must be (n_paths, {len(self.grid)}), got {s.shape}"
            )
        s.setflags(write=False)
        object.__setattr__(self, "states", s)

    @property
    def n_paths(self) -> int:
        return self.states.shape[0]

    def __len__(self) -> int:
        return self.n_paths

    def path(self, k: int) -> SamplePath:
        return SamplePath(tuple(int(v) for v in self.states[k]))

    def paths(self):
        for k in range(self.n_paths):
            yield self.path(k)


def sample_paths(
    family: TransitionFamily,
    p0: ProbabilityVector,
    cfg: EnsembleConfig,
) -> Ensemble:
    """Draw cfg.n_paths independent paths of the chain started from p0.

    The initial state comes from p0 and each subsequent state from the
    conditional column of the consecutive transition matrix. Bit-identical
    across reruns with the same inputs and seed.
    """
    grid = cfg.grid
    n_times = len(grid)
    rng = np.random.Generator(np.random.Philox(cfg.seed))
    u = rng.random((cfg.n_paths, n_times))

    states = np.empty((cfg.n_paths, n_times), dtype=np.uint8)
    states[:, 0] = np.where(u[:, 0] < p0.p1, 1, 2)
    for i in range(n_times - 1):
        step = family(grid[i], grid[i + 1])
        threshold = np.where(states[:, i] == 1, step.m11, step.m12)
        states[:, i + 1] = np.where(u[:, i + 1] < threshold, 1, 2)
    return Ensemble(grid=grid, states=states, seed=cfg.seed)


def empirical_marginals(ensemble: Ensemble) -> list[ProbabilityVector]:
    """Frequency estimate of the distribution at each grid time."""
    if ensemble.n_paths == 0:
        raise ValidationError("empty ensemble")
    out = []
    for i in range(len(ensemble.grid)):
        p1 = float(np.count_nonzero(ensemble.states[:, i] == 1)) / ensemble.n_paths
        out.append(ProbabilityVector(p1, 1.0 - p1))
    return out


def occupancy(ensemble: Ensemble, i: int) -> tuple[int, int]:
    """Path counts (state 1, state 2) at grid index i."""
    col = ensemble.states[:, i]
    n1 = int(np.count_nonzero(col == 1))
    return n1, ensemble.n_paths - n1


def empirical_transition_supported(
    ensemble: Ensemble, i: int, j: int
) -> tuple[dict[int, ProbabilityVector], tuple[int, int]]:
    """Conditional frequency columns for occupied source states only.

    Returns ({source_state: column}, occupancy at j). Sources with no
    paths are simply absent, which callers use to compare only supported
    columns.
    """
    if not 0 <= j < i < len(ensemble.grid):
        raise ValidationError(f"need 0 <= j < i, got i={i}, j={j}")
    counts = occupancy(ensemble, j)
    columns: dict[int, ProbabilityVector] = {}
    for b, count in zip((1, 2), counts):
        if count == 0:
            continue
        mask = ensemble.states[:, j] == b
        n1 = int(np.count_nonzero(ensemble.states[mask, i] == 1))
        columns[b] = ProbabilityVector(n1 / count, 1.0 - n1 / count)
    return columns, counts


def empirical_transition(ensemble: Ensemble, i: int, j: int) -> StochasticMatrix:
    """Column-normalized conditional frequencies between grid indices j < i.

    Raises UndefinedEstimateError, with occupancy counts, when a
    conditioning state never occurs.
    """
    columns, counts = empirical_transition_supported(ensemble, i, j)
    for state in (1, 2):
        if state not in columns:
            raise UndefinedEstimateError(state=state, time_index=j, occupancy=counts)
    return StochasticMatrix.from_columns(columns[1], columns[2])


def _z(p_hat: float, p: float, n: float) -> float:
    if p <= 0.0 or p >= 1.0:
        if p_hat == p:
            return 0.0
        return math.inf if p_hat > p else -math.inf
    return (p_hat - p) / math.sqrt(p * (1.0 - p) / n)


def z_scores(empirical, analytic, n_paths) -> np.ndarray:
    """Per-entry standardized deviations (p_hat - p) / sqrt(p(1-p)/n).

    Accepts a pair of ProbabilityVectors (returns shape (2,)) or a pair
    of StochasticMatrices (returns shape (2, 2); n_paths may then be a
    scalar or a per-column pair, e.g. source-state occupancies).
    Degenerate analytic cells (p of 0 or 1) score 0 on exact agreement
    and +-inf otherwise.
    """
    if isinstance(empirical, ProbabilityVector) and isinstance(
        analytic, ProbabilityVector
    ):
        n = float(n_paths)
        return np.array(
            [_z(empirical.p1, analytic.p1, n), _z(empirical.p2, analytic.p2, n)]
        )
    if isinstance(empirical, StochasticMatrix) and isinstance(
        analytic, StochasticMatrix
    ):
        n_cols = np.broadcast_to(np.asarray(n_paths, dtype=float), (2,))
        return np.array(
            [
                [
                    _z(empirical.entry(a, b), analytic.entry(a, b), n_cols[b - 1])
                    for b in (1, 2)
                ]
                for a in (1, 2)
            ]
        )
    raise ValidationError(
        "z_scores needs two ProbabilityVectors or two StochasticMatrices"
    )
