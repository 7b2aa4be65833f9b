"""Classical hidden-variable machinery.

The fundamental object is C(j, k, l, m), a joint distribution over the
outcomes of all four observables at once. Its two-observable marginals form a
BehaviorTable. Local models produce C in the factorized form, and Fine's
theorem makes "some C reproduces these marginals" equivalent to "some local
model reproduces them"; both are decided by linear programs in this module.
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from functools import lru_cache
from typing import Generic, TypeVar

import numpy as np
from numpy.typing import ArrayLike, NDArray

from quditbell.config import DEFAULT_CONFIG, LabConfig
from quditbell.enums import LpSolverName, Verdict
from quditbell.errors import InvalidDistributionError, InvalidInputError, SignalingError
from quditbell.lp import minimize_linf_error
from quditbell.models import (
    A1B1,
    A1B2,
    A2B1,
    A2B2,
    SETTING_PAIRS,
    BehaviorTable,
    DeterministicStrategy,
    HvtDistribution,
    LocalModel,
    SettingPair,
)

logger = logging.getLogger(__name__)

T = TypeVar("T")

# axes of C summed away for each recorded pair; C is indexed (A1, A2, B1, B2)
_SUMMED_AXES: dict[SettingPair, tuple[int, int]] = {
    A1B1: (1, 3),
    A1B2: (1, 2),
    A2B1: (0, 3),
    A2B2: (0, 2),
}


def marginals_from_c(c: HvtDistribution) -> BehaviorTable:
    tables = {setting: c.c.sum(axis=axes) for setting, axes in _SUMMED_AXES.items()}
    return BehaviorTable.from_tables(c.d, tables, c.config)


def local_model_to_c(model: LocalModel) -> HvtDistribution:
    """C(j,k,l,m) = sum_lambda P(lambda) P(j|A1) P(k|A2) P(l|B1) P(m|B2)."""
    ra, rb = model.responses_a, model.responses_b
    c = np.einsum("n,nj,nk,nl,nm->jklm", model.weights, ra[:, 0], ra[:, 1], rb[:, 0], rb[:, 1])
    return HvtDistribution(model.d, c, model.config)


def local_pair_model_to_c(
    weights: ArrayLike,
    pair_tables_a: ArrayLike,
    pair_tables_b: ArrayLike,
    config: LabConfig = DEFAULT_CONFIG,
) -> HvtDistribution:
    """C = sum_lambda P(lambda) P(j,k|A1,A2,lambda) P(l,m|B1,B2,lambda).

    Per-side tables have shape (n, d, d) and need not factorize.
    """
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    tables_a = np.asarray(pair_tables_a, dtype=np.float64)
    tables_b = np.asarray(pair_tables_b, dtype=np.float64)
    n = w.size
    if tables_a.ndim != 3 or tables_a.shape[0] != n or tables_a.shape[1] != tables_a.shape[2]:
        raise InvalidDistributionError(f"pair tables for A must have shape ({n}, d, d), got {tables_a.shape}")
    if tables_b.shape != tables_a.shape:
        raise InvalidDistributionError("pair tables for A and B differ in shape")
    if np.min(w) < -config.probability_slack:
        raise InvalidDistributionError("negative hidden-variable weight")
    for name, tables in (("A", tables_a), ("B", tables_b)):
        if np.min(tables) < -config.probability_slack:
            raise InvalidDistributionError(f"negative entry in a pair table for {name}")
        sums = tables.sum(axis=(1, 2))
        if np.max(np.abs(sums - 1.0)) > config.normalization_tol:
            raise InvalidDistributionError(f"a pair table for {name} is not normalized")
    c = np.einsum("n,njk,nlm->jklm", w, tables_a, tables_b)
    return HvtDistribution(tables_a.shape[1], c, config)


def behavior_from_local_model(model: LocalModel) -> BehaviorTable:
    tables = {
        setting: np.einsum(
            "n,na,nb->ab",
            model.weights,
            model.responses_a[:, setting.a_setting - 1],
            model.responses_b[:, setting.b_setting - 1],
        )
        for setting in SETTING_PAIRS
    }
    return BehaviorTable.from_tables(model.d, tables, model.config)


@dataclass(frozen=True)
class NoSignalingReport:
    passed: bool
    max_discrepancy: float
    worst: str | None
    tolerance: float

    def summary(self) -> str:
        if self.worst is None:
            return "no-signaling: trivially satisfied"
        state = "passed" if self.passed else "FAILED"
        return f"no-signaling {state}: worst {self.worst} differs by {self.max_discrepancy:.3e}"


def no_signaling_check(behavior: BehaviorTable, config: LabConfig = DEFAULT_CONFIG) -> NoSignalingReport:
    """Compare each one-sided marginal as computed from its two joint tables."""
    comparisons: list[tuple[str, float]] = []
    for a in (1, 2):
        left = behavior.joint(SettingPair(a, 1)).marginal_a()
        right = behavior.joint(SettingPair(a, 2)).marginal_a()
        comparisons.append((f"P(alpha|A{a}) via B1 vs B2", float(np.max(np.abs(left - right)))))
    for b in (1, 2):
        left = behavior.joint(SettingPair(1, b)).marginal_b()
        right = behavior.joint(SettingPair(2, b)).marginal_b()
        comparisons.append((f"P(beta|B{b}) via A1 vs A2", float(np.max(np.abs(left - right)))))
    worst, discrepancy = max(comparisons, key=lambda item: item[1])
    return NoSignalingReport(
        passed=discrepancy <= config.no_signaling_tol,
        max_discrepancy=discrepancy,
        worst=worst,
        tolerance=config.no_signaling_tol,
    )


def strategy_to_c(strategy: DeterministicStrategy, d: int) -> HvtDistribution:
    strategy.check_range(d)
    c = np.zeros((d, d, d, d))
    c[strategy.as_tuple()] = 1.0
    return HvtDistribution(d, c)


def _check_enumeration_d(d: int, config: LabConfig) -> int:
    d = int(d)
    if not 2 <= d <= config.enumeration_max_d:
        raise InvalidInputError(f"d must lie in [2, {config.enumeration_max_d}] for enumeration, got {d}")
    return d


def enumerate_strategies(d: int, config: LabConfig = DEFAULT_CONFIG) -> Iterator[DeterministicStrategy]:
    """All d**4 assignments (j, k, l, m), lexicographic."""
    d = _check_enumeration_d(d, config)
    for j, k, l, m in itertools.product(range(d), repeat=4):  # noqa: E741
        yield DeterministicStrategy(j, k, l, m)


def deterministic_local_model(strategy: DeterministicStrategy, d: int) -> LocalModel:
    return _deterministic_mixture([strategy], np.ones(1), d)


def _deterministic_mixture(
    strategies: Sequence[DeterministicStrategy],
    weights: NDArray[np.float64],
    d: int,
    config: LabConfig = DEFAULT_CONFIG,
) -> LocalModel:
    n = len(strategies)
    responses_a = np.zeros((n, 2, d))
    responses_b = np.zeros((n, 2, d))
    for row, strategy in enumerate(strategies):
        strategy.check_range(d)
        responses_a[row, 0, strategy.j] = 1.0
        responses_a[row, 1, strategy.k] = 1.0
        responses_b[row, 0, strategy.l] = 1.0
        responses_b[row, 1, strategy.m] = 1.0
    labels = tuple("({},{},{},{})".format(*s.as_tuple()) for s in strategies)
    return LocalModel(weights, responses_a, responses_b, labels, config)


def local_joint_mean(
    model: LocalModel,
    setting: SettingPair,
    values_A: ArrayLike,
    values_B: ArrayLike,
) -> float:
    """sum_lambda P(lambda) <A>_lambda <B>_lambda."""
    weights_a = np.asarray(values_A, dtype=np.float64).reshape(-1)
    weights_b = np.asarray(values_B, dtype=np.float64).reshape(-1)
    if weights_a.size != model.d or weights_b.size != model.d:
        raise InvalidInputError(f"need {model.d} outcome values per side")
    mean_a = model.responses_a[:, setting.a_setting - 1] @ weights_a
    mean_b = model.responses_b[:, setting.b_setting - 1] @ weights_b
    return float(np.sum(model.weights * mean_a * mean_b))


def mix_behaviors(
    behaviors: Sequence[BehaviorTable], weights: ArrayLike, config: LabConfig = DEFAULT_CONFIG
) -> BehaviorTable:
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    if len(behaviors) == 0 or w.size != len(behaviors):
        raise InvalidInputError(f"{w.size} weights for {len(behaviors)} behaviors")
    d = behaviors[0].d
    if any(b.d != d for b in behaviors):
        raise InvalidInputError("cannot mix behaviors with different d")
    if np.min(w) < -config.probability_slack or abs(float(w.sum()) - 1.0) > config.normalization_tol:
        raise InvalidDistributionError("mixture weights must be nonnegative and sum to 1")
    stacked = np.stack([b.as_vector() for b in behaviors])
    return BehaviorTable.from_vector(d, w @ stacked, config)


def random_hvt_distribution(d: int, rng: np.random.Generator) -> HvtDistribution:
    return HvtDistribution(d, rng.dirichlet(np.ones(d**4)).reshape(d, d, d, d))


def random_local_model(d: int, n_lambda: int, rng: np.random.Generator) -> LocalModel:
    if n_lambda < 1:
        raise InvalidInputError(f"n_lambda must be positive, got {n_lambda}")
    weights = rng.dirichlet(np.ones(n_lambda))
    responses_a = rng.dirichlet(np.ones(d), size=(n_lambda, 2))
    responses_b = rng.dirichlet(np.ones(d), size=(n_lambda, 2))
    return LocalModel(weights, responses_a, responses_b)


@dataclass(frozen=True, eq=False)
class Feasible(Generic[T]):
    certificate: T
    error: float
    solver: LpSolverName

    @property
    def verdict(self) -> Verdict:
        return Verdict.FEASIBLE


@dataclass(frozen=True)
class Infeasible:
    margin: float
    solver: LpSolverName

    @property
    def verdict(self) -> Verdict:
        return Verdict.INFEASIBLE


@lru_cache(maxsize=8)
def _vertex_matrix(d: int) -> NDArray[np.float64]:
    """Columns are the behaviors of the deterministic strategies."""
    columns = [
        behavior_from_local_model(deterministic_local_model(strategy, d)).as_vector()
        for strategy in enumerate_strategies(d, LabConfig(enumeration_max_d=d))
    ]
    matrix = np.stack(columns, axis=1)
    matrix.setflags(write=False)
    return matrix


@lru_cache(maxsize=8)
def _marginal_matrix(d: int) -> NDArray[np.float64]:
    """Rows are indicator functions over C(j,k,l,m) of each marginal entry."""
    j, k, l, m = np.indices((d, d, d, d))  # noqa: E741
    outcome_of = {1: (j, k), 2: (l, m)}
    rows: list[NDArray[np.float64]] = []
    for setting in SETTING_PAIRS:
        a_index = outcome_of[1][setting.a_setting - 1]
        b_index = outcome_of[2][setting.b_setting - 1]
        for alpha in range(d):
            for beta in range(d):
                rows.append(((a_index == alpha) & (b_index == beta)).reshape(-1).astype(np.float64))
    matrix = np.stack(rows)
    matrix.setflags(write=False)
    return matrix


def _require_no_signaling(behavior: BehaviorTable, config: LabConfig, operation: str) -> None:
    report = no_signaling_check(behavior, config)
    if not report.passed:
        raise SignalingError(f"{operation}: behavior is signaling ({report.summary()})", report)


def _support(x: NDArray[np.float64], config: LabConfig) -> tuple[NDArray[np.intp], NDArray[np.float64]]:
    support = np.flatnonzero(x > config.lp_weight_floor)
    weights = x[support]
    return support, weights / weights.sum()


def fine_membership(
    behavior: BehaviorTable,
    config: LabConfig = DEFAULT_CONFIG,
    solver: LpSolverName | str | None = None,
) -> Feasible[LocalModel] | Infeasible:
    """Is the behavior a mixture of deterministic local strategies?"""
    d = _check_enumeration_d(behavior.d, config)
    _require_no_signaling(behavior, config, "fine_membership")
    target = behavior.as_vector()
    solution = minimize_linf_error(_vertex_matrix(d), target, config, solver)
    support, weights = _support(solution.x, config)
    strategies = [
        DeterministicStrategy(*(int(v) for v in np.unravel_index(index, (d, d, d, d)))) for index in support
    ]
    model = _deterministic_mixture(strategies, weights, d, config)
    error = float(np.max(np.abs(behavior_from_local_model(model).as_vector() - target)))
    logger.debug(
        "fine_membership d=%d: lp optimum %.3e, certificate error %.3e, support %d",
        d,
        solution.objective,
        error,
        support.size,
    )
    if error <= config.lp_tol:
        return Feasible(model, error, solution.solver)
    return Infeasible(max(solution.objective, error), solution.solver)


def c_reconstruction_test(
    behavior: BehaviorTable,
    config: LabConfig = DEFAULT_CONFIG,
    solver: LpSolverName | str | None = None,
) -> Feasible[HvtDistribution] | Infeasible:
    """Does any C(j,k,l,m) have these four marginals?"""
    d = _check_enumeration_d(behavior.d, config)
    _require_no_signaling(behavior, config, "c_reconstruction_test")
    target = behavior.as_vector()
    solution = minimize_linf_error(_marginal_matrix(d), target, config, solver)
    c = np.zeros(d**4)
    support, weights = _support(solution.x, config)
    c[support] = weights
    candidate = HvtDistribution(d, c.reshape(d, d, d, d), config)
    error = float(np.max(np.abs(marginals_from_c(candidate).as_vector() - target)))
    logger.debug(
        "c_reconstruction_test d=%d: lp optimum %.3e, certificate error %.3e",
        d,
        solution.objective,
        error,
    )
    if error <= config.lp_tol:
        return Feasible(candidate, error, solution.solver)
    return Infeasible(max(solution.objective, error), solution.solver)
