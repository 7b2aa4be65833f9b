from __future__ import annotations

import numpy as np
import pytest

from quditbell.config import LabConfig
from quditbell.enums import LpSolverName, LpStatus
from quditbell.errors import LpInconclusiveError
from quditbell.lp import DenseSimplex, linf_fit_program, minimize_linf_error


def test_dense_simplex_solves_textbook_problem() -> None:
    # maximize 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18
    solution = DenseSimplex().solve(
        c=[-3.0, -5.0],
        a_ub=[[1.0, 0.0], [0.0, 2.0], [3.0, 2.0]],
        b_ub=[4.0, 12.0, 18.0],
    )
    assert solution.status is LpStatus.OPTIMAL
    assert solution.objective == pytest.approx(-36.0)
    assert np.allclose(solution.x, [2.0, 6.0])


def test_dense_simplex_handles_equalities_and_negative_rhs() -> None:
    # minimize x + 2y s.t. x + y = 1, -x <= -0.25
    solution = DenseSimplex().solve(c=[1.0, 2.0], a_ub=[[-1.0, 0.0]], b_ub=[-0.25], a_eq=[[1.0, 1.0]], b_eq=[1.0])
    assert solution.status is LpStatus.OPTIMAL
    assert np.allclose(solution.x, [1.0, 0.0])


def test_dense_simplex_detects_infeasibility() -> None:
    solution = DenseSimplex().solve(c=[1.0], a_eq=[[1.0]], b_eq=[1.0], a_ub=[[1.0]], b_ub=[0.5])
    assert solution.status is LpStatus.INFEASIBLE


def test_dense_simplex_detects_unbounded() -> None:
    solution = DenseSimplex().solve(c=[-1.0, 0.0], a_ub=[[0.0, 1.0]], b_ub=[1.0])
    assert solution.status is LpStatus.UNBOUNDED


def test_dense_simplex_survives_redundant_equalities() -> None:
    solution = DenseSimplex().solve(
        c=[1.0, 1.0, 1.0],
        a_eq=[[1.0, 1.0, 1.0], [2.0, 2.0, 2.0], [1.0, 0.0, 0.0]],
        b_eq=[1.0, 2.0, 0.5],
    )
    assert solution.status is LpStatus.OPTIMAL
    assert solution.objective == pytest.approx(1.0)
    assert solution.x[0] == pytest.approx(0.5)


def test_dense_simplex_reports_iteration_limit() -> None:
    solution = DenseSimplex(max_iterations=0).solve(c=[-1.0], a_ub=[[1.0]], b_ub=[1.0])
    assert solution.status is LpStatus.ITERATION_LIMIT


def test_linf_fit_program_shapes() -> None:
    c, a_ub, b_ub, a_eq, b_eq = linf_fit_program(np.eye(3), [0.2, 0.3, 0.5])
    assert c.tolist() == [0.0, 0.0, 0.0, 1.0]
    assert a_ub.shape == (6, 4)
    assert b_ub.shape == (6,)
    assert a_eq.tolist() == [[1.0, 1.0, 1.0, 0.0]]
    assert b_eq.tolist() == [1.0]


@pytest.mark.parametrize("solver", list(LpSolverName))
def test_minimize_linf_error_exact_fit(solver: LpSolverName) -> None:
    matrix = np.array([[1.0, 0.0, 0.5], [0.0, 1.0, 0.5]])
    solution = minimize_linf_error(matrix, [0.3, 0.7], solver=solver)
    assert solution.objective == pytest.approx(0.0, abs=1e-9)
    assert np.max(np.abs(matrix @ solution.x - [0.3, 0.7])) <= 1e-9
    assert solution.x.sum() == pytest.approx(1.0)
    assert solution.solver is solver


@pytest.mark.parametrize("solver", list(LpSolverName))
def test_minimize_linf_error_reports_margin_outside_hull(solver: LpSolverName) -> None:
    # hull of {0, 1} on the line; target 1.5 is 0.5 away
    solution = minimize_linf_error([[0.0, 1.0]], [1.5], solver=solver)
    assert solution.objective == pytest.approx(0.5, abs=1e-9)


def test_minimize_linf_error_raises_when_inconclusive() -> None:
    config = LabConfig(lp_max_iterations=0)
    with pytest.raises(LpInconclusiveError) as raised:
        minimize_linf_error(np.eye(2), [0.5, 0.5], config=config, solver=LpSolverName.SIMPLEX)
    assert raised.value.status == "iteration_limit"


def test_backends_agree_on_random_problems(rng) -> None:
    for _ in range(10):
        matrix = rng.random((6, 9))
        target = rng.random(6)
        highs = minimize_linf_error(matrix, target, solver=LpSolverName.HIGHS)
        simplex = minimize_linf_error(matrix, target, solver=LpSolverName.SIMPLEX)
        assert highs.objective == pytest.approx(simplex.objective, abs=1e-8)
