"""Tests for the dense linear solver and the two-phase simplex."""

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from eharq.linalg import (
    LinearProgram,
    LpStatus,
    SingularSystem,
    solve_linear_system,
    solve_lp,
)


class TestSolveLinearSystem:
    def test_frozen_system(self):
        a = [[2.0, 1.0, -1.0], [-3.0, -1.0, 2.0], [-2.0, 1.0, 2.0]]
        b = [8.0, -11.0, -3.0]
        assert solve_linear_system(a, b) == pytest.approx([2.0, 3.0, -1.0], abs=1e-12)

    def test_needs_row_swap(self):
        # Zero in the leading pivot position forces an interchange.
        a = [[0.0, 1.0], [1.0, 0.0]]
        assert solve_linear_system(a, [3.0, 4.0]) == pytest.approx([4.0, 3.0])

    def test_scaling_guides_pivot_choice(self):
        # Classic case where unscaled partial pivoting picks the bad row.
        a = [[2.0, 2.0e9], [1.0, 1.0]]
        b = [2.0e9, 2.0]
        x = solve_linear_system(a, b)
        assert np.asarray(a) @ x == pytest.approx(b, rel=1e-12)

    def test_singular_matrix_raises(self):
        with pytest.raises(SingularSystem):
            solve_linear_system([[1.0, 2.0], [2.0, 4.0]], [1.0, 2.0])
        with pytest.raises(SingularSystem):
            solve_linear_system([[0.0, 0.0], [1.0, 1.0]], [0.0, 1.0])

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            solve_linear_system([[1.0, 2.0]], [1.0])
        with pytest.raises(ValueError):
            solve_linear_system([[1.0]], [1.0, 2.0])
        with pytest.raises(ValueError):
            solve_linear_system([[np.inf]], [1.0])

    @settings(deadline=None, max_examples=60)
    @given(st.data())
    def test_matches_lapack(self, data):
        n = data.draw(st.integers(1, 6))
        entries = st.integers(-5, 5)
        a = np.array(
            data.draw(
                st.lists(
                    st.lists(entries, min_size=n, max_size=n), min_size=n, max_size=n
                )
            ),
            dtype=float,
        )
        b = np.array(data.draw(st.lists(entries, min_size=n, max_size=n)), dtype=float)
        assume(np.abs(np.linalg.det(a)) > 1e-6)
        assume(np.linalg.cond(a) < 1e4)
        expected = np.linalg.solve(a, b)
        assert solve_linear_system(a, b) == pytest.approx(expected, rel=1e-8, abs=1e-8)


class TestLinearProgramValidation:
    def test_scalar_bounds_broadcast(self):
        lp = LinearProgram(objective=[1.0, 2.0], lower=1.0, upper=3.0)
        assert lp.lower.tolist() == [1.0, 1.0]
        assert lp.upper.tolist() == [3.0, 3.0]
        assert lp.n_variables == 2

    def test_missing_block_halves_rejected(self):
        with pytest.raises(ValueError):
            LinearProgram(objective=[1.0], eq_matrix=[[1.0]])

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            LinearProgram(objective=[1.0, 2.0], eq_matrix=[[1.0]], eq_rhs=[1.0])

    def test_infinite_lower_rejected(self):
        with pytest.raises(ValueError):
            LinearProgram(objective=[1.0], lower=-np.inf)

    def test_crossed_bounds_rejected(self):
        with pytest.raises(ValueError):
            LinearProgram(objective=[1.0], lower=2.0, upper=1.0)

    def test_non_finite_data_rejected(self):
        with pytest.raises(ValueError):
            LinearProgram(objective=[np.nan])
        with pytest.raises(ValueError):
            LinearProgram(objective=[1.0], ub_matrix=[[np.inf]], ub_rhs=[1.0])


class TestSolveLpFrozen:
    def test_lower_bound_binds(self):
        out = solve_lp(LinearProgram(objective=[1.0], lower=3.0))
        assert out.status is LpStatus.OPTIMAL
        assert out.x == pytest.approx([3.0])
        assert out.objective_value == pytest.approx(3.0)

    def test_upper_bound_binds(self):
        out = solve_lp(LinearProgram(objective=[-1.0], upper=5.0))
        assert out.status is LpStatus.OPTIMAL
        assert out.x == pytest.approx([5.0])
        assert out.objective_value == pytest.approx(-5.0)

    def test_unbounded(self):
        out = solve_lp(LinearProgram(objective=[-1.0]))
        assert out.status is LpStatus.UNBOUNDED
        assert out.x is None

    def test_infeasible(self):
        out = solve_lp(LinearProgram(objective=[1.0], eq_matrix=[[1.0]], eq_rhs=[-1.0]))
        assert out.status is LpStatus.INFEASIBLE

    def test_two_variable_corner(self):
        lp = LinearProgram(
            objective=[-1.0, -2.0],
            ub_matrix=[[1.0, 1.0]],
            ub_rhs=[4.0],
            upper=[3.0, 2.0],
        )
        out = solve_lp(lp)
        assert out.status is LpStatus.OPTIMAL
        assert out.x == pytest.approx([2.0, 2.0], abs=1e-9)
        assert out.objective_value == pytest.approx(-6.0, abs=1e-9)

    def test_redundant_equality_rows_dropped(self):
        lp = LinearProgram(
            objective=[1.0, 1.0],
            eq_matrix=[[1.0, 1.0], [2.0, 2.0], [1.0, 1.0]],
            eq_rhs=[2.0, 4.0, 2.0],
        )
        out = solve_lp(lp)
        assert out.status is LpStatus.OPTIMAL
        assert out.objective_value == pytest.approx(2.0, abs=1e-9)

    def test_negative_lower_bounds(self):
        lp = LinearProgram(objective=[1.0, 1.0], lower=[-5.0, -1.0], upper=0.0)
        out = solve_lp(lp)
        assert out.x == pytest.approx([-5.0, -1.0])
        assert out.objective_value == pytest.approx(-6.0)

    def test_fixed_variable(self):
        lp = LinearProgram(objective=[1.0, -1.0], lower=[2.0, 0.0], upper=[2.0, 1.0])
        out = solve_lp(lp)
        assert out.x == pytest.approx([2.0, 1.0])

    def test_mixed_constraints(self):
        # min x + y  s.t.  x + 2y = 4,  x - y <= 1,  0 <= x,y <= 10
        lp = LinearProgram(
            objective=[1.0, 1.0],
            eq_matrix=[[1.0, 2.0]],
            eq_rhs=[4.0],
            ub_matrix=[[1.0, -1.0]],
            ub_rhs=[1.0],
            upper=10.0,
        )
        out = solve_lp(lp)
        assert out.status is LpStatus.OPTIMAL
        assert out.x == pytest.approx([0.0, 2.0], abs=1e-9)
        assert out.objective_value == pytest.approx(2.0, abs=1e-9)

    def test_determinism_is_bit_exact(self):
        lp = LinearProgram(
            objective=[-1.0, -2.0, 0.5],
            ub_matrix=[[1.0, 1.0, 1.0], [2.0, 0.5, -1.0]],
            ub_rhs=[4.0, 3.0],
            upper=[3.0, 2.0, 5.0],
        )
        first = solve_lp(lp)
        second = solve_lp(lp)
        assert np.array_equal(first.x, second.x)
        assert first.objective_value == second.objective_value

    def test_objective_scaling_keeps_argmin(self):
        base = LinearProgram(
            objective=[-1.0, -2.0],
            ub_matrix=[[1.0, 1.0]],
            ub_rhs=[4.0],
            upper=[3.0, 2.0],
        )
        scaled = LinearProgram(
            objective=[-7.0, -14.0],
            ub_matrix=[[1.0, 1.0]],
            ub_rhs=[4.0],
            upper=[3.0, 2.0],
        )
        a, b = solve_lp(base), solve_lp(scaled)
        assert a.x == pytest.approx(b.x, abs=1e-9)
        assert b.objective_value == pytest.approx(7.0 * a.objective_value, abs=1e-9)


def _random_lp(rng: np.random.Generator) -> LinearProgram:
    n = int(rng.integers(2, 8))
    m_eq = int(rng.integers(0, 4))
    m_ub = int(rng.integers(0, 6))
    x0 = rng.uniform(0.0, 2.0, size=n)
    c = rng.integers(-3, 4, size=n).astype(float)
    a_eq = rng.integers(-3, 4, size=(m_eq, n)).astype(float) if m_eq else None
    b_eq = a_eq @ x0 if m_eq else None
    a_ub = rng.integers(-3, 4, size=(m_ub, n)).astype(float) if m_ub else None
    b_ub = a_ub @ x0 + rng.uniform(0.0, 1.0, size=m_ub) if m_ub else None
    upper = np.inf if rng.random() < 0.25 else 3.0
    if rng.random() < 0.2 and m_eq:
        b_eq = b_eq - 50.0  # push the equality block out of reach
    return LinearProgram(
        objective=c,
        eq_matrix=a_eq,
        eq_rhs=b_eq,
        ub_matrix=a_ub,
        ub_rhs=b_ub,
        lower=0.0,
        upper=upper,
    )


STATUS_FROM_SCIPY = {0: LpStatus.OPTIMAL, 2: LpStatus.INFEASIBLE, 3: LpStatus.UNBOUNDED}


def test_matches_scipy_on_random_programs():
    rng = np.random.default_rng(20250814)
    checked = 0
    for _ in range(60):
        lp = _random_lp(rng)
        ours = solve_lp(lp)
        upper = [None if not np.isfinite(u) else u for u in lp.upper]
        ref = linprog(
            lp.objective,
            A_eq=lp.eq_matrix if lp.eq_rhs.size else None,
            b_eq=lp.eq_rhs if lp.eq_rhs.size else None,
            A_ub=lp.ub_matrix if lp.ub_rhs.size else None,
            b_ub=lp.ub_rhs if lp.ub_rhs.size else None,
            bounds=list(zip(lp.lower, upper)),
            method="highs",
        )
        assert ours.status is STATUS_FROM_SCIPY[ref.status]
        if ours.status is LpStatus.OPTIMAL:
            assert ours.objective_value == pytest.approx(ref.fun, rel=1e-7, abs=1e-7)
            checked += 1
    assert checked >= 20  # the generator must exercise plenty of optimal cases
