"""Projective measurements on bipartite states.

Covers the one-observable-per-side joint measurement and the three
sequential processes for replicating P(alpha_a, beta_b | A_a, B_b) when the
complementary pair of observables is also in play:

* ``UNRECORDED_FIRST``: the complementary pair is measured first and its
  outcomes discarded.
* ``UNRECORDED_SECOND``: the recorded pair is measured first, then the
  complementary pair, whose outcomes are discarded.
* ``NEVER_MEASURED``: only the recorded pair is measured.

Classically all three give the same numbers. Quantum mechanically
``UNRECORDED_FIRST`` changes the probabilities, while ``UNRECORDED_SECOND``
keeps them (sum_k P_j P_k P_j = P_j) but leaves a different final state.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike

from quditbell.config import DEFAULT_CONFIG, LabConfig
from quditbell.enums import ProcessKind
from quditbell.errors import (
    ConsistencyError,
    DimensionMismatchError,
    ImpossibleOutcomeError,
    InvalidInputError,
)
from quditbell.models import SETTING_PAIRS, BehaviorTable, JointDistribution, SettingPair
from quditbell.quantum_core import (
    ComplexOperator,
    DensityOperator,
    Pvm,
    as_operator,
    commutator_norm,
    identity,
    require_valid_density,
    tensor_product,
    trace_of_product,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MeasurementScenario:
    d: int
    pvm_A1: Pvm
    pvm_A2: Pvm
    pvm_B1: Pvm
    pvm_B2: Pvm

    def __post_init__(self) -> None:
        if self.d < 2:
            raise InvalidInputError(f"scenario needs d >= 2, got {self.d}")
        for name in ("pvm_A1", "pvm_A2", "pvm_B1", "pvm_B2"):
            pvm: Pvm = getattr(self, name)
            if pvm.outcomes != self.d:
                raise DimensionMismatchError(
                    f"{name} has {pvm.outcomes} outcomes, scenario has d={self.d}",
                    operation="MeasurementScenario",
                    expected=self.d,
                    actual=pvm.outcomes,
                )
        if self.pvm_A1.dim != self.pvm_A2.dim or self.pvm_B1.dim != self.pvm_B2.dim:
            raise DimensionMismatchError(
                "both observables of a side must act on the same space",
                operation="MeasurementScenario",
            )

    @property
    def dims(self) -> tuple[int, int]:
        return (self.pvm_A1.dim, self.pvm_B1.dim)

    def pvm_a(self, setting: int) -> Pvm:
        return self.pvm_A1 if setting == 1 else self.pvm_A2

    def pvm_b(self, setting: int) -> Pvm:
        return self.pvm_B1 if setting == 1 else self.pvm_B2

    def max_commutator(self) -> float:
        """Largest [P_j^{X1}, P_k^{X2}] entry over both sides."""
        worst = 0.0
        for first, second in ((self.pvm_A1, self.pvm_A2), (self.pvm_B1, self.pvm_B2)):
            for p in first.projectors:
                for q in second.projectors:
                    worst = max(worst, commutator_norm(p, q))
        return worst


@dataclass(frozen=True, eq=False)
class MeasurementResult:
    probability: float
    post_state: DensityOperator | None = None


@dataclass(frozen=True, eq=False)
class SequentialMeasurement:
    first_probability: float
    conditional_probability: float
    probability: float
    post_state: DensityOperator


def _realify(value: complex, config: LabConfig, what: str) -> float:
    if abs(value.imag) > config.imaginary_tol:
        raise ConsistencyError(
            f"{what} has imaginary part {value.imag:.3e}; a non-Hermitian input slipped through",
            check="imaginary_probability",
            discrepancy=abs(value.imag),
        )
    return float(value.real)


def _clamp_probability(value: float, config: LabConfig, what: str) -> float:
    slack = config.probability_slack
    if value < -slack or value > 1.0 + slack:
        raise ConsistencyError(
            f"{what} = {value:.15g} lies outside [0, 1]",
            check="probability_range",
            discrepancy=max(-value, value - 1.0),
        )
    return min(max(value, 0.0), 1.0)


def _check_local_operators(rho: DensityOperator, op_a: ArrayLike, op_b: ArrayLike, operation: str) -> tuple[ComplexOperator, ComplexOperator]:
    left = as_operator(op_a, operation)
    right = as_operator(op_b, operation)
    if (left.shape[0], right.shape[0]) != rho.dims:
        raise DimensionMismatchError(
            f"{operation}: operator dims {(left.shape[0], right.shape[0])} vs state dims {rho.dims}",
            operation=operation,
            expected=rho.dims,
            actual=(left.shape[0], right.shape[0]),
        )
    return left, right


def _check_pvms(rho: DensityOperator, pvm_a: Pvm, pvm_b: Pvm, operation: str) -> None:
    if (pvm_a.dim, pvm_b.dim) != rho.dims:
        raise DimensionMismatchError(
            f"{operation}: PVM dims {(pvm_a.dim, pvm_b.dim)} vs state dims {rho.dims}",
            operation=operation,
            expected=rho.dims,
            actual=(pvm_a.dim, pvm_b.dim),
        )


def _local_expectation(rho: DensityOperator, op_a: ComplexOperator, op_b: ComplexOperator, config: LabConfig, what: str) -> float:
    return _realify(trace_of_product(tensor_product(op_a, op_b), rho.matrix), config, what)


def _normalized_state(unnormalized: ComplexOperator, probability: float, dims: tuple[int, int], config: LabConfig) -> DensityOperator:
    hermitian = 0.5 * (unnormalized + unnormalized.conj().T)
    weight = float(np.trace(hermitian).real)
    if abs(weight - probability) > config.normalization_tol:
        raise ConsistencyError(
            f"post-state weight {weight:.15g} differs from branch probability {probability:.15g}",
            check="post_state_weight",
            discrepancy=abs(weight - probability),
        )
    return require_valid_density(DensityOperator(hermitian / weight, dims), config)


def joint_probability(rho: DensityOperator, proj_A: ArrayLike, proj_B: ArrayLike, config: LabConfig = DEFAULT_CONFIG) -> float:
    """Tr[(P_alpha^A (x) P_beta^B) rho]."""
    op_a, op_b = _check_local_operators(rho, proj_A, proj_B, "joint_probability")
    value = _local_expectation(rho, op_a, op_b, config, "joint probability")
    return _clamp_probability(value, config, "joint probability")


def post_joint_state(rho: DensityOperator, proj_A: ArrayLike, proj_B: ArrayLike, config: LabConfig = DEFAULT_CONFIG) -> MeasurementResult:
    op_a, op_b = _check_local_operators(rho, proj_A, proj_B, "post_joint_state")
    probability = joint_probability(rho, op_a, op_b, config)
    if probability <= config.zero_probability_tol:
        raise ImpossibleOutcomeError(
            f"impossible outcome: joint probability {probability:.3e}", probability=probability
        )
    d_a, d_b = rho.dims
    k_a = tensor_product(op_a, identity(d_b))
    k_b = tensor_product(identity(d_a), op_b)
    a_then_b = k_b @ (k_a @ rho.matrix @ k_a) @ k_b
    b_then_a = k_a @ (k_b @ rho.matrix @ k_b) @ k_a
    order_gap = float(np.max(np.abs(a_then_b - b_then_a)))
    if order_gap > config.hermitian_tol:
        raise ConsistencyError(
            f"A-first and B-first post-states differ by {order_gap:.3e}",
            check="measurement_order",
            discrepancy=order_gap,
        )
    return MeasurementResult(probability, _normalized_state(a_then_b, probability, rho.dims, config))


def sequential_joint_state(
    rho: DensityOperator,
    proj_A: ArrayLike,
    proj_B: ArrayLike,
    first: Literal["A", "B"] = "A",
    config: LabConfig = DEFAULT_CONFIG,
) -> SequentialMeasurement:
    """Measure one side, then the other, keeping the intermediate numbers."""
    op_a, op_b = _check_local_operators(rho, proj_A, proj_B, "sequential_joint_state")
    d_a, d_b = rho.dims
    if first == "A":
        first_op, second_op = tensor_product(op_a, identity(d_b)), tensor_product(identity(d_a), op_b)
    elif first == "B":
        first_op, second_op = tensor_product(identity(d_a), op_b), tensor_product(op_a, identity(d_b))
    else:
        raise InvalidInputError(f"first must be 'A' or 'B', got {first!r}")
    first_probability = _clamp_probability(
        _realify(trace_of_product(first_op, rho.matrix), config, "first-side probability"),
        config,
        "first-side probability",
    )
    if first_probability <= config.zero_probability_tol:
        raise ImpossibleOutcomeError("impossible first-side outcome", probability=first_probability)
    intermediate = _normalized_state(first_op @ rho.matrix @ first_op, first_probability, rho.dims, config)
    conditional = _clamp_probability(
        _realify(trace_of_product(second_op, intermediate.matrix), config, "conditional probability"),
        config,
        "conditional probability",
    )
    probability = first_probability * conditional
    if probability <= config.zero_probability_tol:
        raise ImpossibleOutcomeError("impossible joint outcome", probability=probability)
    final = _normalized_state(second_op @ intermediate.matrix @ second_op, conditional, rho.dims, config)
    return SequentialMeasurement(first_probability, conditional, probability, final)


def unrecorded_dephase(rho: DensityOperator, pvm_A: Pvm, pvm_B: Pvm, config: LabConfig = DEFAULT_CONFIG) -> DensityOperator:
    """sum_{k,m} (P_k (x) P_m) rho (P_k (x) P_m): measure both sides, discard outcomes."""
    _check_pvms(rho, pvm_A, pvm_B, "unrecorded_dephase")
    return DensityOperator(_dephase_matrix(rho.matrix, pvm_A, pvm_B, rho.dims, config), rho.dims)


def _dephase_matrix(matrix: ComplexOperator, pvm_A: Pvm, pvm_B: Pvm, dims: tuple[int, int], config: LabConfig) -> ComplexOperator:
    terms = []
    for proj_k in pvm_A.projectors:
        for proj_m in pvm_B.projectors:
            kraus = tensor_product(proj_k, proj_m)
            terms.append(kraus @ matrix @ kraus)
    result = np.sum(np.stack(terms), axis=0)
    gap = abs(complex(np.trace(result)) - complex(np.trace(matrix)))
    if gap > config.trace_tol:
        raise ConsistencyError(
            f"dephasing changed the trace by {gap:.3e}", check="dephase_trace", discrepancy=gap
        )
    return result


def _recorded_and_unrecorded(scenario: MeasurementScenario, recorded: SettingPair) -> tuple[Pvm, Pvm, Pvm, Pvm]:
    other = recorded.complement()
    return (
        scenario.pvm_a(recorded.a_setting),
        scenario.pvm_b(recorded.b_setting),
        scenario.pvm_a(other.a_setting),
        scenario.pvm_b(other.b_setting),
    )


def _check_outcomes(scenario: MeasurementScenario, outcomes: Sequence[int]) -> tuple[int, int]:
    if len(outcomes) != 2:
        raise InvalidInputError(f"outcomes must be a pair (j, l), got {outcomes!r}")
    j, l = (int(value) for value in outcomes)  # noqa: E741
    if not (0 <= j < scenario.d and 0 <= l < scenario.d):
        raise InvalidInputError(f"outcomes {(j, l)} out of range for d={scenario.d}")
    return j, l


def _effective_operators(
    kind: ProcessKind, proj_j: ComplexOperator, proj_l: ComplexOperator, unrecorded_a: Pvm, unrecorded_b: Pvm
) -> tuple[ComplexOperator, ComplexOperator]:
    match ProcessKind(kind):
        case ProcessKind.NEVER_MEASURED:
            return proj_j, proj_l
        case ProcessKind.UNRECORDED_FIRST:
            return (
                np.sum(np.stack([p @ proj_j @ p for p in unrecorded_a.projectors]), axis=0),
                np.sum(np.stack([p @ proj_l @ p for p in unrecorded_b.projectors]), axis=0),
            )
        case ProcessKind.UNRECORDED_SECOND:
            return (
                np.sum(np.stack([proj_j @ p @ proj_j for p in unrecorded_a.projectors]), axis=0),
                np.sum(np.stack([proj_l @ p @ proj_l for p in unrecorded_b.projectors]), axis=0),
            )
    raise InvalidInputError(f"unknown process kind {kind!r}")


def process_probability(
    rho: DensityOperator,
    scenario: MeasurementScenario,
    recorded: SettingPair,
    outcomes: Sequence[int],
    kind: ProcessKind,
    config: LabConfig = DEFAULT_CONFIG,
) -> float:
    j, l = _check_outcomes(scenario, outcomes)  # noqa: E741
    rec_a, rec_b, unrec_a, unrec_b = _recorded_and_unrecorded(scenario, recorded)
    _check_pvms(rho, rec_a, rec_b, "process_probability")
    op_a, op_b = _effective_operators(kind, rec_a[j], rec_b[l], unrec_a, unrec_b)
    value = _local_expectation(rho, op_a, op_b, config, f"{kind} probability")
    return _clamp_probability(value, config, f"{kind} probability")


def process_final_state(
    rho: DensityOperator,
    scenario: MeasurementScenario,
    recorded: SettingPair,
    outcomes: Sequence[int],
    kind: ProcessKind,
    config: LabConfig = DEFAULT_CONFIG,
) -> DensityOperator:
    result = measure_process(rho, scenario, recorded, outcomes, kind, config)
    if result.post_state is None:
        raise ImpossibleOutcomeError(
            f"impossible outcome {tuple(outcomes)} under {kind}: probability {result.probability:.3e}",
            probability=result.probability,
        )
    return result.post_state


def measure_process(
    rho: DensityOperator,
    scenario: MeasurementScenario,
    recorded: SettingPair,
    outcomes: Sequence[int],
    kind: ProcessKind,
    config: LabConfig = DEFAULT_CONFIG,
) -> MeasurementResult:
    """Probability and post-state; the state is None on a zero-probability branch."""
    j, l = _check_outcomes(scenario, outcomes)  # noqa: E741
    probability = process_probability(rho, scenario, recorded, (j, l), kind, config)
    if probability <= config.zero_probability_tol:
        return MeasurementResult(probability, None)
    rec_a, rec_b, unrec_a, unrec_b = _recorded_and_unrecorded(scenario, recorded)
    kraus = tensor_product(rec_a[j], rec_b[l])
    match ProcessKind(kind):
        case ProcessKind.NEVER_MEASURED:
            unnormalized = kraus @ rho.matrix @ kraus
        case ProcessKind.UNRECORDED_FIRST:
            dephased = _dephase_matrix(rho.matrix, unrec_a, unrec_b, rho.dims, config)
            unnormalized = kraus @ dephased @ kraus
        case ProcessKind.UNRECORDED_SECOND:
            projected = kraus @ rho.matrix @ kraus
            unnormalized = _dephase_matrix(projected, unrec_a, unrec_b, rho.dims, config)
    return MeasurementResult(probability, _normalized_state(unnormalized, probability, rho.dims, config))


def process_table(
    rho: DensityOperator,
    scenario: MeasurementScenario,
    recorded: SettingPair,
    kind: ProcessKind,
    config: LabConfig = DEFAULT_CONFIG,
) -> JointDistribution:
    d = scenario.d
    table = np.zeros((d, d))
    for j in range(d):
        for l in range(d):  # noqa: E741
            table[j, l] = process_probability(rho, scenario, recorded, (j, l), kind, config)
    total = float(np.sum(table))
    if abs(total - 1.0) > config.normalization_tol:
        raise ConsistencyError(
            f"{kind} outcomes for {recorded.label} sum to {total:.15g}",
            check="normalization",
            discrepancy=abs(total - 1.0),
        )
    return JointDistribution(d, recorded, table, config)


def quantum_behavior(
    rho: DensityOperator,
    scenario: MeasurementScenario,
    kind: ProcessKind,
    config: LabConfig = DEFAULT_CONFIG,
) -> BehaviorTable:
    """Four recorded-pair tables, each with its complementary pair unrecorded."""
    logger.debug("quantum behavior d=%d kind=%s", scenario.d, kind)
    return BehaviorTable(
        scenario.d,
        {setting: process_table(rho, scenario, setting, kind, config) for setting in SETTING_PAIRS},
    )


def observable_from_pvm(pvm: Pvm, values: ArrayLike) -> ComplexOperator:
    weights = np.asarray(values, dtype=np.float64).reshape(-1)
    if weights.size != pvm.outcomes:
        raise DimensionMismatchError(
            f"{weights.size} values for {pvm.outcomes} outcomes",
            operation="observable_from_pvm",
            expected=pvm.outcomes,
            actual=weights.size,
        )
    return np.sum(np.stack([value * proj for value, proj in zip(weights, pvm.projectors)]), axis=0)


def joint_mean(
    rho: DensityOperator,
    pvm_A: Pvm,
    pvm_B: Pvm,
    values_A: ArrayLike,
    values_B: ArrayLike,
    config: LabConfig = DEFAULT_CONFIG,
) -> float:
    """<A (x) B> from the outcome-weighted probabilities, checked against Tr[(A (x) B) rho]."""
    _check_pvms(rho, pvm_A, pvm_B, "joint_mean")
    observable_a = observable_from_pvm(pvm_A, values_A)
    observable_b = observable_from_pvm(pvm_B, values_B)
    weights_a = np.asarray(values_A, dtype=np.float64).reshape(-1)
    weights_b = np.asarray(values_B, dtype=np.float64).reshape(-1)
    table = np.array(
        [
            [joint_probability(rho, proj_a, proj_b, config) for proj_b in pvm_B.projectors]
            for proj_a in pvm_A.projectors
        ]
    )
    from_probabilities = float(np.sum(np.outer(weights_a, weights_b) * table))
    from_operators = _local_expectation(rho, observable_a, observable_b, config, "joint mean")
    gap = abs(from_probabilities - from_operators)
    if gap > config.mean_tol:
        raise ConsistencyError(
            f"joint mean routes disagree by {gap:.3e}", check="joint_mean", discrepancy=gap
        )
    return from_probabilities
