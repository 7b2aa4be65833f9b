"""Linear programs for locality tests.

Every membership question is posed as the same problem: find weights
x >= 0 with sum(x) = 1 minimizing t = max |M x - b|. The problem is always
feasible (t can be large), so the optimum t is a quantitative margin.

Two backends:

* ``highs``: ``scipy.optimize.linprog`` with the HiGHS solver.
* ``simplex``: dense two-phase tableau simplex using Bland's rule, so it
  cannot cycle.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import linprog

from quditbell.config import DEFAULT_CONFIG, LabConfig
from quditbell.enums import LpSolverName, LpStatus
from quditbell.errors import InvalidInputError, LpInconclusiveError

logger = logging.getLogger(__name__)

_PIVOT_EPS = 1e-11


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: LpStatus
    x: NDArray[np.float64]
    objective: float
    iterations: int
    solver: LpSolverName


class DenseSimplex:
    """Minimize c @ x subject to A_ub x <= b_ub, A_eq x = b_eq, x >= 0."""

    def __init__(self, max_iterations: int = 20000, feasibility_tol: float = 1e-9):
        self.max_iterations = max_iterations
        self.feasibility_tol = feasibility_tol
        self.iterations = 0

    def solve(
        self,
        c: ArrayLike,
        a_ub: ArrayLike | None = None,
        b_ub: ArrayLike | None = None,
        a_eq: ArrayLike | None = None,
        b_eq: ArrayLike | None = None,
    ) -> LpSolution:
        cost = np.asarray(c, dtype=np.float64).reshape(-1)
        n_orig = cost.size
        ub = np.zeros((0, n_orig)) if a_ub is None else np.asarray(a_ub, dtype=np.float64).reshape(-1, n_orig)
        eq = np.zeros((0, n_orig)) if a_eq is None else np.asarray(a_eq, dtype=np.float64).reshape(-1, n_orig)
        rhs_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=np.float64).reshape(-1)
        rhs_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=np.float64).reshape(-1)
        if rhs_ub.size != ub.shape[0] or rhs_eq.size != eq.shape[0]:
            raise InvalidInputError("constraint matrix and right-hand side disagree in length")
        self.iterations = 0

        m_ub, m_eq = ub.shape[0], eq.shape[0]
        slack_block = np.vstack([np.eye(m_ub), np.zeros((m_eq, m_ub))])
        a = np.hstack([np.vstack([ub, eq]), slack_block])
        rhs = np.concatenate([rhs_ub, rhs_eq])
        negative = rhs < 0
        a[negative] *= -1.0
        rhs[negative] *= -1.0
        m, n = a.shape

        # phase 1: one artificial per row, minimize their sum
        tableau = np.zeros((m + 1, n + m + 1))
        tableau[:m, :n] = a
        tableau[:m, n : n + m] = np.eye(m)
        tableau[:m, -1] = rhs
        tableau[-1, :n] = -a.sum(axis=0)
        tableau[-1, -1] = -rhs.sum()
        basis = list(range(n, n + m))

        status = self._run(tableau, basis, n + m)
        if status is not LpStatus.OPTIMAL:
            return self._result(status, np.zeros(n_orig), np.nan)
        if -tableau[-1, -1] > self.feasibility_tol:
            return self._result(LpStatus.INFEASIBLE, np.zeros(n_orig), np.nan)

        redundant: list[int] = []
        for row, var in enumerate(basis):
            if var < n:
                continue
            candidates = np.flatnonzero(np.abs(tableau[row, :n]) > _PIVOT_EPS)
            if candidates.size == 0:
                redundant.append(row)
                continue
            self._pivot(tableau, row, int(candidates[0]))
            basis[row] = int(candidates[0])
        keep_rows = [row for row in range(m) if row not in redundant]
        phase2 = np.zeros((len(keep_rows) + 1, n + 1))
        phase2[:-1, :n] = tableau[keep_rows, :n]
        phase2[:-1, -1] = tableau[keep_rows, -1]
        basis = [basis[row] for row in keep_rows]

        full_cost = np.zeros(n)
        full_cost[:n_orig] = cost
        basic_cost = full_cost[basis]
        phase2[-1, :n] = full_cost - basic_cost @ phase2[:-1, :n]
        phase2[-1, -1] = -basic_cost @ phase2[:-1, -1]

        status = self._run(phase2, basis, n)
        solution = np.zeros(n)
        solution[basis] = phase2[:-1, -1]
        x = np.clip(solution[:n_orig], 0.0, None)
        if status is not LpStatus.OPTIMAL:
            return self._result(status, x, np.nan)
        return self._result(LpStatus.OPTIMAL, x, float(cost @ x))

    def _result(self, status: LpStatus, x: NDArray[np.float64], objective: float) -> LpSolution:
        return LpSolution(status, x, objective, self.iterations, LpSolverName.SIMPLEX)

    def _run(self, tableau: NDArray[np.float64], basis: list[int], columns: int) -> LpStatus:
        rows = tableau.shape[0] - 1
        while True:
            reduced = tableau[-1, :columns]
            entering_candidates = np.flatnonzero(reduced < -_PIVOT_EPS)
            if entering_candidates.size == 0:
                return LpStatus.OPTIMAL
            if self.iterations >= self.max_iterations:
                return LpStatus.ITERATION_LIMIT
            entering = int(entering_candidates[0])
            column = tableau[:rows, entering]
            leaving = -1
            best_ratio = np.inf
            for row in range(rows):
                if column[row] <= _PIVOT_EPS:
                    continue
                ratio = tableau[row, -1] / column[row]
                if ratio < best_ratio - _PIVOT_EPS or (
                    abs(ratio - best_ratio) <= _PIVOT_EPS and basis[row] < basis[leaving]
                ):
                    best_ratio = ratio
                    leaving = row
            if leaving < 0:
                return LpStatus.UNBOUNDED
            self._pivot(tableau, leaving, entering)
            basis[leaving] = entering
            self.iterations += 1

    @staticmethod
    def _pivot(tableau: NDArray[np.float64], row: int, col: int) -> None:
        tableau[row, :] /= tableau[row, col]
        factors = tableau[:, col].copy()
        factors[row] = 0.0
        tableau -= np.outer(factors, tableau[row, :])


def linf_fit_program(matrix: ArrayLike, target: ArrayLike) -> tuple[NDArray, NDArray, NDArray, NDArray, NDArray]:
    """(c, A_ub, b_ub, A_eq, b_eq) over variables (x_1..x_n, t)."""
    m = np.asarray(matrix, dtype=np.float64)
    b = np.asarray(target, dtype=np.float64).reshape(-1)
    if m.ndim != 2 or m.shape[0] != b.size:
        raise InvalidInputError(f"matrix shape {m.shape} does not match target length {b.size}")
    rows, n = m.shape
    error_column = -np.ones((rows, 1))
    a_ub = np.vstack([np.hstack([m, error_column]), np.hstack([-m, error_column])])
    b_ub = np.concatenate([b, -b])
    a_eq = np.hstack([np.ones((1, n)), np.zeros((1, 1))])
    b_eq = np.ones(1)
    c = np.zeros(n + 1)
    c[-1] = 1.0
    return c, a_ub, b_ub, a_eq, b_eq


def minimize_linf_error(
    matrix: ArrayLike,
    target: ArrayLike,
    config: LabConfig = DEFAULT_CONFIG,
    solver: LpSolverName | str | None = None,
) -> LpSolution:
    """Convex weights x minimizing max |matrix @ x - target|; objective is that maximum."""
    name = LpSolverName(solver or config.lp_solver)
    c, a_ub, b_ub, a_eq, b_eq = linf_fit_program(matrix, target)
    if name is LpSolverName.SIMPLEX:
        engine = DenseSimplex(max_iterations=config.lp_max_iterations)
        solution = engine.solve(c, a_ub, b_ub, a_eq, b_eq)
    else:
        solution = _solve_highs(c, a_ub, b_ub, a_eq, b_eq, config)
    logger.debug(
        "lp %s: status=%s objective=%s iterations=%d",
        name,
        solution.status,
        solution.objective,
        solution.iterations,
    )
    if solution.status is not LpStatus.OPTIMAL:
        raise LpInconclusiveError(
            f"{name} stopped with status {solution.status} after {solution.iterations} iterations",
            status=str(solution.status),
            iterations=solution.iterations,
        )
    return LpSolution(solution.status, solution.x[:-1], max(solution.objective, 0.0), solution.iterations, name)


_HIGHS_STATUS = {
    0: LpStatus.OPTIMAL,
    1: LpStatus.ITERATION_LIMIT,
    2: LpStatus.INFEASIBLE,
    3: LpStatus.UNBOUNDED,
}


def _solve_highs(c, a_ub, b_ub, a_eq, b_eq, config: LabConfig) -> LpSolution:
    result = linprog(
        c,
        A_ub=a_ub,
        b_ub=b_ub,
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=(0, None),
        method="highs",
        options={
            "maxiter": config.lp_max_iterations,
            "primal_feasibility_tolerance": 1e-10,
            "dual_feasibility_tolerance": 1e-10,
        },
    )
    status = _HIGHS_STATUS.get(int(result.status), LpStatus.FAILED)
    iterations = int(getattr(result, "nit", 0) or 0)
    if status is not LpStatus.OPTIMAL or result.x is None:
        return LpSolution(status, np.zeros(len(c)), np.nan, iterations, LpSolverName.HIGHS)
    return LpSolution(status, np.clip(np.asarray(result.x), 0.0, None), float(result.fun), iterations, LpSolverName.HIGHS)
