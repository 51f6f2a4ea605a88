"""Dense phase-one simplex for small equality-form feasibility problems.

Decides whether {x >= 0 : A x = b} is nonempty by minimizing the sum of
artificial variables with Bland's anti-cycling rule, which makes the
pivot sequence (and therefore the returned point or certificate) fully
deterministic. Problem sizes here are desk-scale (at most a few hundred
rows and a few thousand columns), so a plain dense tableau is the right
tool.

On infeasibility the final dual vector y is returned as a Farkas
certificate: y @ A <= 0 componentwise while y @ b > 0, so no nonnegative
x can satisfy A x = b.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DichotomicError


class SimplexError(DichotomicError):
    """The pivot loop exceeded its iteration guard."""


@dataclass(frozen=True)
class PhaseOneResult:
    feasible: bool
    x: np.ndarray | None
    infeasibility: float
    certificate: np.ndarray | None
    iterations: int


def solve_phase_one(
    A: np.ndarray,
    b: np.ndarray,
    tol: float = 1e-9,
) -> PhaseOneResult:
    """Find x >= 0 with A x = b, or a Farkas certificate that none exists.

    Rows with negative right-hand side are sign-flipped internally; the
    certificate is mapped back to the caller's row orientation.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or b.ndim != 1 or A.shape[0] != b.shape[0]:
        raise ValueError(f"shape mismatch: A {A.shape}, b {b.shape}")
    m, n = A.shape
    if m == 0:
        return PhaseOneResult(True, np.zeros(n), 0.0, None, 0)

    signs = np.where(b < 0, -1.0, 1.0)
    T = np.empty((m, n + m + 1))
    T[:, :n] = A * signs[:, None]
    T[:, n : n + m] = np.eye(m)
    T[:, -1] = b * signs

    # Reduced-cost row z_j - c_j for the phase-one objective (c = 1 on
    # artificials): starts as the column sums over the constraint rows for
    # the x block and zero for the artificial block.
    z = np.empty(n + m + 1)
    z[: n + m] = T[:, : n + m].sum(axis=0)
    z[n : n + m] -= 1.0
    z[-1] = T[:, -1].sum()

    basis = list(range(n, n + m))
    max_iters = 200 * (n + m) + 1000

    for iteration in range(max_iters):
        # Bland: smallest improving column index.
        entering = -1
        for j in range(n + m):
            if z[j] > tol:
                entering = j
                break
        if entering < 0:
            break

        col = T[:, entering]
        best_ratio = np.inf
        leaving_row = -1
        for r in range(m):
            if col[r] > tol:
                ratio = T[r, -1] / col[r]
                if ratio < best_ratio - tol or (
                    abs(ratio - best_ratio) <= tol
                    and (leaving_row < 0 or basis[r] < basis[leaving_row])
                ):
                    best_ratio = ratio
                    leaving_row = r
        if leaving_row < 0:
            # Phase one is bounded below by zero, so this cannot happen
            # with consistent arithmetic; guard anyway.
            raise SimplexError("phase-one column unbounded; numerical breakdown")

        pivot = T[leaving_row, entering]
        T[leaving_row, :] /= pivot
        for r in range(m):
            if r != leaving_row and T[r, entering] != 0.0:
                T[r, :] -= T[r, entering] * T[leaving_row, :]
        if z[entering] != 0.0:
            z -= z[entering] * T[leaving_row, :]
        basis[leaving_row] = entering
    else:
        raise SimplexError(f"no convergence within {max_iters} pivots")

    infeasibility = float(z[-1])
    if infeasibility <= tol:
        x = np.zeros(n)
        for r, col_index in enumerate(basis):
            if col_index < n:
                x[col_index] = T[r, -1]
        np.clip(x, 0.0, None, out=x)
        return PhaseOneResult(True, x, max(infeasibility, 0.0), None, iteration)

    # Farkas dual: y = c_B B^{-1}; under the artificial block the reduced
    # costs equal y - 1, and the internal row flips are undone.
    y = (z[n : n + m] + 1.0) * signs
    return PhaseOneResult(False, None, infeasibility, y, iteration)
