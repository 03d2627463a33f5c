"""Dense linear algebra: Gaussian elimination and a two-phase simplex.

Both solvers are self-contained and deterministic.  Problem sizes in this
package stay in the few hundreds, where a dense tableau is fast enough and
every pivot is auditable.  The simplex enters on Dantzig's rule, falls back
to Bland's smallest-index rule permanently when degenerate pivots pile up
(the occupation-measure LPs solved here are heavily degenerate), and always
leaves by smallest basic index.  Every choice is index-deterministic, so
identical inputs give bit-identical solutions, and the Bland fallback keeps
termination guaranteed.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any

import numpy as np

__all__ = [
    "SingularSystem",
    "NumericalTrouble",
    "solve_linear_system",
    "LinearProgram",
    "LpStatus",
    "LpOutcome",
    "solve_lp",
]

# Scaled pivots below this are treated as exact zeros.
SINGULAR_TOL = 1e-12
# Simplex tolerances: reduced-cost/pivot threshold and feasibility slack.
COST_TOL = 1e-9
FEASIBILITY_TOL = 1e-9
MAX_PIVOTS = 50_000
# A pivot moving the objective by less than this counts as degenerate; a
# long degenerate streak flips the entering rule from Dantzig to Bland.
DEGENERATE_STEP_TOL = 1e-12
DEGENERATE_STREAK_LIMIT = 200


class SingularSystem(ArithmeticError):
    """The coefficient matrix is singular to working precision."""


class NumericalTrouble(ArithmeticError):
    """A solver produced a result that fails its own consistency checks."""


def solve_linear_system(matrix: Any, rhs: Any) -> np.ndarray:
    """Solve ``matrix @ x = rhs`` by elimination with scaled partial pivoting.

    Raises :class:`SingularSystem` when the best available pivot, relative to
    its row's largest original entry, falls below ``SINGULAR_TOL``.
    """
    a = np.array(matrix, dtype=float)
    b = np.array(rhs, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got shape {a.shape}")
    n = a.shape[0]
    if b.shape != (n,):
        raise ValueError(f"rhs shape {b.shape} does not match matrix order {n}")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise ValueError("matrix and rhs must be finite")
    scale = np.abs(a).max(axis=1)
    if np.any(scale == 0.0):
        raise SingularSystem("matrix has an all-zero row")
    for k in range(n):
        ratios = np.abs(a[k:, k]) / scale[k:]
        p = k + int(np.argmax(ratios))
        if ratios[p - k] < SINGULAR_TOL:
            raise SingularSystem(f"no usable pivot in column {k}")
        if p != k:
            a[[k, p]] = a[[p, k]]
            b[[k, p]] = b[[p, k]]
            scale[[k, p]] = scale[[p, k]]
        factors = a[k + 1 :, k] / a[k, k]
        a[k + 1 :, k:] -= np.outer(factors, a[k, k:])
        b[k + 1 :] -= factors * b[k]
    x = np.zeros(n)
    for k in range(n - 1, -1, -1):
        x[k] = (b[k] - a[k, k + 1 :] @ x[k + 1 :]) / a[k, k]
    return x


class LpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LpOutcome:
    """Result of :func:`solve_lp`; ``x`` and the objective are set iff optimal."""

    status: LpStatus
    x: np.ndarray | None
    objective_value: float


@dataclass(frozen=True)
class LinearProgram:
    """Minimize ``objective @ x`` over ``eq_matrix @ x == eq_rhs``,
    ``ub_matrix @ x <= ub_rhs`` and ``lower <= x <= upper``.

    Equality and inequality blocks may be omitted.  Lower bounds must be
    finite (the solvers shift variables to make them non-negative); upper
    bounds may be ``+inf``.  Scalars broadcast across all variables.
    """

    objective: Any
    eq_matrix: Any = None
    eq_rhs: Any = None
    ub_matrix: Any = None
    ub_rhs: Any = None
    lower: Any = 0.0
    upper: Any = np.inf

    def __post_init__(self) -> None:
        c = np.atleast_1d(np.array(self.objective, dtype=float))
        if c.ndim != 1 or c.size == 0:
            raise ValueError("objective must be a non-empty vector")
        n = c.size
        a_eq, b_eq = _constraint_block(self.eq_matrix, self.eq_rhs, n, "eq")
        a_ub, b_ub = _constraint_block(self.ub_matrix, self.ub_rhs, n, "ub")
        lower = np.broadcast_to(np.array(self.lower, dtype=float), (n,)).copy()
        upper = np.broadcast_to(np.array(self.upper, dtype=float), (n,)).copy()
        if not np.isfinite(c).all():
            raise ValueError("objective must be finite")
        if not (np.isfinite(lower).all() and lower.ndim == 1):
            raise ValueError("lower bounds must be finite")
        if np.any(np.isnan(upper)) or np.any(upper == -np.inf):
            raise ValueError("upper bounds must not be NaN or -inf")
        if np.any(lower > upper):
            raise ValueError("lower bound exceeds upper bound")
        for name, value in (
            ("objective", c),
            ("eq_matrix", a_eq),
            ("eq_rhs", b_eq),
            ("ub_matrix", a_ub),
            ("ub_rhs", b_ub),
            ("lower", lower),
            ("upper", upper),
        ):
            object.__setattr__(self, name, value)

    @property
    def n_variables(self) -> int:
        return self.objective.size


def _constraint_block(
    matrix: Any, rhs: Any, n: int, label: str
) -> tuple[np.ndarray, np.ndarray]:
    if matrix is None and rhs is None:
        return np.zeros((0, n)), np.zeros(0)
    if matrix is None or rhs is None:
        raise ValueError(f"{label}_matrix and {label}_rhs must be given together")
    a = np.atleast_2d(np.array(matrix, dtype=float))
    b = np.atleast_1d(np.array(rhs, dtype=float))
    if a.shape != (b.size, n):
        raise ValueError(f"{label} block has shape {a.shape}, expected ({b.size}, {n})")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise ValueError(f"{label} block must be finite")
    return a, b


def solve_lp(lp: LinearProgram) -> LpOutcome:
    """Solve ``lp`` with a dense two-phase tableau simplex.

    Deterministic by construction (Bland's rule throughout).  Redundant
    equality rows are detected in phase one and dropped.  The result is
    checked against the original constraints to ``FEASIBILITY_TOL`` before
    being returned; a violation raises :class:`NumericalTrouble`.
    """
    n = lp.n_variables
    # Shift to y = x - lower >= 0 and turn finite upper bounds into rows.
    shift = lp.lower
    b_eq = lp.eq_rhs - lp.eq_matrix @ shift
    rows_ub = [lp.ub_matrix]
    rhs_ub = [lp.ub_rhs - lp.ub_matrix @ shift]
    finite_upper = np.where(np.isfinite(lp.upper))[0]
    if finite_upper.size:
        bound_rows = np.zeros((finite_upper.size, n))
        bound_rows[np.arange(finite_upper.size), finite_upper] = 1.0
        rows_ub.append(bound_rows)
        rhs_ub.append(lp.upper[finite_upper] - shift[finite_upper])
    a_ub = np.vstack(rows_ub)
    b_ub = np.concatenate(rhs_ub)

    y, tableau_obj = _two_phase_simplex(lp.objective, lp.eq_matrix, b_eq, a_ub, b_ub)
    if isinstance(y, LpStatus):
        return LpOutcome(status=y, x=None, objective_value=float("nan"))
    x = y + shift
    objective = tableau_obj + float(lp.objective @ shift)
    _check_solution(lp, x, objective)
    return LpOutcome(status=LpStatus.OPTIMAL, x=x, objective_value=objective)


def _two_phase_simplex(c, a_eq, b_eq, a_ub, b_ub):
    """Core simplex on ``min c@y`` s.t. ``a_eq y = b_eq``, ``a_ub y <= b_ub``, ``y >= 0``.

    Returns ``(y, objective)`` or ``(LpStatus, None)`` for infeasible/unbounded.
    """
    n = c.size
    m_eq, m_ub = a_eq.shape[0], a_ub.shape[0]
    m = m_eq + m_ub
    if m == 0:
        # Only the sign constraints remain: y = 0 unless some cost is negative.
        if np.any(c < 0.0):
            return LpStatus.UNBOUNDED, None
        return np.zeros(n), 0.0

    # Layout: [y (n) | slacks (m_ub) | artificials (as needed) | rhs].
    body = np.zeros((m, n + m_ub))
    body[:m_eq, :n] = a_eq
    body[m_eq:, :n] = a_ub
    body[m_eq:, n:] = np.eye(m_ub)
    rhs = np.concatenate([b_eq, b_ub])
    negative = rhs < 0.0
    body[negative] *= -1.0
    rhs = np.abs(rhs)

    # Slack columns with +1 coefficient seed the basis; other rows get an
    # artificial each.  Equality rows always need one, inequality rows only
    # when their sign was flipped above.
    n_slack_start = n
    needs_artificial = np.ones(m, dtype=bool)
    needs_artificial[m_eq:] = negative[m_eq:]
    art_rows = np.where(needs_artificial)[0]
    art_start = n + m_ub
    total = art_start + art_rows.size
    tableau = np.zeros((m + 1, total + 1))
    tableau[:m, :art_start] = body
    tableau[art_rows, art_start + np.arange(art_rows.size)] = 1.0
    tableau[:m, -1] = rhs

    basis = np.empty(m, dtype=int)
    basis[m_eq:] = n_slack_start + np.arange(m_ub)
    basis[art_rows] = art_start + np.arange(art_rows.size)

    # Phase one: minimize the sum of artificials.
    cost = np.zeros(total + 1)
    cost[art_start:total] = 1.0
    for i in art_rows:
        cost -= tableau[i]
    tableau[m] = cost
    status = _pivot_to_optimality(tableau, basis)
    if status is not None:
        raise NumericalTrouble("phase one cannot be unbounded")
    if -tableau[m, -1] > FEASIBILITY_TOL:
        return LpStatus.INFEASIBLE, None

    tableau, basis = _drop_artificials(tableau, basis, art_start)

    # Phase two: the real objective over the remaining columns.
    cost = np.zeros(tableau.shape[1])
    cost[:n] = c
    for i, bv in enumerate(basis):
        if cost[bv] != 0.0:
            cost = cost - cost[bv] * tableau[i]
    tableau[-1] = cost
    status = _pivot_to_optimality(tableau, basis)
    if status is LpStatus.UNBOUNDED:
        return LpStatus.UNBOUNDED, None

    y = np.zeros(n)
    for i, bv in enumerate(basis):
        if bv < n:
            y[bv] = tableau[i, -1]
    np.clip(y, 0.0, None, out=y)
    return y, -float(tableau[-1, -1])


def _pivot_to_optimality(tableau: np.ndarray, basis: np.ndarray) -> LpStatus | None:
    """Run simplex pivots in place until optimal (None) or unbounded.

    Entering variables follow Dantzig's most-negative-reduced-cost rule
    (first index on ties) until a run of ``DEGENERATE_STREAK_LIMIT``
    consecutive degenerate pivots, after which the phase switches to
    Bland's smallest-index rule for good.  Strict improvements are finitely
    many and the streak bound caps the pivots between them, so the switch
    is reached after finitely many steps and Bland's theorem then excludes
    cycling.  Both rules break ties by index, keeping the pivot sequence a
    pure function of the input.
    """
    m = basis.size
    streak_limit = max(DEGENERATE_STREAK_LIMIT, 2 * m)
    bland = False
    streak = 0
    for _ in range(MAX_PIVOTS):
        costs = tableau[-1, :-1]
        if bland:
            candidates = np.where(costs < -COST_TOL)[0]
            if candidates.size == 0:
                return None
            j = int(candidates[0])  # Bland: smallest variable index
        else:
            j = int(np.argmin(costs))  # Dantzig: steepest reduced cost
            if costs[j] >= -COST_TOL:
                return None
        column = tableau[:m, j]
        usable = column > COST_TOL
        if not usable.any():
            return LpStatus.UNBOUNDED
        ratios = np.full(m, np.inf)
        ratios[usable] = tableau[:m, -1][usable] / column[usable]
        best = ratios.min()
        tied = np.where(ratios == best)[0]
        leave = int(tied[np.argmin(basis[tied])])  # Bland: smallest basic index
        _pivot(tableau, leave, j)
        basis[leave] = j
        if best <= DEGENERATE_STEP_TOL:
            streak += 1
            if streak > streak_limit:
                bland = True
        else:
            streak = 0
    raise NumericalTrouble(f"simplex did not terminate within {MAX_PIVOTS} pivots")


def _pivot(tableau: np.ndarray, row: int, col: int) -> None:
    pivot_row = tableau[row] / tableau[row, col]
    column = tableau[:, col].copy()
    tableau -= np.outer(column, pivot_row)
    tableau[row] = pivot_row


def _drop_artificials(
    tableau: np.ndarray, basis: np.ndarray, art_start: int
) -> tuple[np.ndarray, np.ndarray]:
    """Pivot basic artificials out; rows that cannot pivot are redundant."""
    redundant = []
    for i in range(basis.size):
        if basis[i] < art_start:
            continue
        row = tableau[i, :art_start]
        candidates = np.where(np.abs(row) > COST_TOL)[0]
        if candidates.size == 0:
            redundant.append(i)
        else:
            j = int(candidates[0])
            _pivot(tableau, i, j)
            basis[i] = j
    keep_rows = [i for i in range(basis.size) if i not in redundant]
    tableau = tableau[keep_rows + [tableau.shape[0] - 1]]
    tableau = np.delete(tableau, np.s_[art_start:-1], axis=1)
    return tableau, basis[keep_rows]


def _check_solution(lp: LinearProgram, x: np.ndarray, objective: float) -> None:
    slack = FEASIBILITY_TOL * (1.0 + float(np.abs(lp.eq_rhs).max(initial=0.0)))
    if lp.eq_rhs.size and np.abs(lp.eq_matrix @ x - lp.eq_rhs).max() > slack:
        raise NumericalTrouble("equality residual exceeds tolerance")
    slack = FEASIBILITY_TOL * (1.0 + float(np.abs(lp.ub_rhs).max(initial=0.0)))
    if lp.ub_rhs.size and (lp.ub_matrix @ x - lp.ub_rhs).max() > slack:
        raise NumericalTrouble("inequality residual exceeds tolerance")
    if np.any(x < lp.lower - FEASIBILITY_TOL) or np.any(x > lp.upper + FEASIBILITY_TOL):
        raise NumericalTrouble("bound violation exceeds tolerance")
    if abs(objective - float(lp.objective @ x)) > FEASIBILITY_TOL * (1.0 + abs(objective)):
        raise NumericalTrouble("tableau objective disagrees with recomputed objective")
