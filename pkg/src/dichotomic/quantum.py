"""Two-level unitary evolution, its Born-rule trajectory, and the
measurement-probability transition family.

The model system starts in state 1 and oscillates coherently between the
two basis states with angular frequency omega. Squaring the amplitudes
(the Born rule) gives the probability trajectory (cos^2 wt, sin^2 wt).
The ``gillespie_family`` builds transition matrices directly out of the
conditional measurement probabilities cos^2 w(t-s), sin^2 w(t-s); whether
those matrices define a consistent stochastic process is what the chains
and hierarchy modules test.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .core import (
    ProbabilityVector,
    StochasticMatrix,
    Trajectory,
    TransitionFamily,
)
from .errors import ValidationError

_NORM_TOL = 1e-12


@dataclass(frozen=True)
class QuantumTrajectoryConfig:
    """Oscillation frequency and global phase of the two-level solution.

    The phase constant drops out of every probability; it is kept
    configurable so phase independence is testable rather than assumed.
    """

    omega: float = 1.0
    phase_c: float = 0.0

    def __post_init__(self):
        if not self.omega > 0:
            raise ValidationError(f"omega must be positive, got {self.omega!r}")


@dataclass(frozen=True)
class TwoLevelState:
    """Normalized amplitudes over the two basis states."""

    amp1: complex
    amp2: complex

    def __post_init__(self):
        norm = abs(self.amp1) ** 2 + abs(self.amp2) ** 2
        if abs(norm - 1.0) > _NORM_TOL:
            raise ValidationError(f"state not normalized: |amp|^2 = {norm!r}")


def evolve_state(t: float, cfg: QuantumTrajectoryConfig = QuantumTrajectoryConfig()) -> TwoLevelState:
    """State at time t >= 0: e^{-ict} (cos(wt) |1> - i sin(wt) |2>)."""
    if t < 0:
        raise ValidationError(f"time must be nonnegative, got {t!r}")
    phase = cmath.exp(-1j * cfg.phase_c * t)
    return TwoLevelState(
        amp1=phase * math.cos(cfg.omega * t),
        amp2=-1j * phase * math.sin(cfg.omega * t),
    )


def born_marginals(state: TwoLevelState) -> ProbabilityVector:
    """Outcome probabilities (|amp1|^2, |amp2|^2)."""
    return ProbabilityVector(abs(state.amp1) ** 2, abs(state.amp2) ** 2)


def quantum_trajectory(cfg: QuantumTrajectoryConfig = QuantumTrajectoryConfig()) -> Trajectory:
    """The probability trajectory t -> (cos^2 wt, sin^2 wt).

    Independent of the global phase; periodic with period pi / omega.
    """
    w = cfg.omega

    def at(t: float) -> ProbabilityVector:
        c = math.cos(w * t)
        return ProbabilityVector(c * c, 1.0 - c * c)

    return Trajectory(at, description=f"two-level Born trajectory (omega={w})")


def gillespie_family(omega: float = 1.0) -> TransitionFamily:
    """Measurement-probability family with entries cos^2 w(t-s), sin^2 w(t-s).

    Every matrix is symmetric and doubly stochastic and depends only on
    the gap t - s. Defined for all 0 <= s <= t; the identity at s == t.
    """
    if not omega > 0:
        raise ValidationError(f"omega must be positive, got {omega!r}")

    def evaluate(s: float, t: float) -> StochasticMatrix:
        c = math.cos(omega * (t - s))
        return StochasticMatrix.symmetric(c * c)

    return TransitionFamily(
        evaluator=evaluate,
        description=f"gillespie (measurement probabilities, omega={omega})",
    )
