"""The CGLMP quantity

    I = P(A1 = B1) + P(B1 = A2 + 1) + P(A2 = B2) + P(B2 = A1)

with all equalities taken mod d. Any local hidden-variable theory obeys
I <= 3; no theory can exceed 4.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.typing import NDArray

from quditbell.config import DEFAULT_CONFIG, LabConfig
from quditbell.enums import LpSolverName, ProcessKind
from quditbell.errors import ConsistencyError, InvalidInputError
from quditbell.hvt import (
    Feasible,
    Infeasible,
    enumerate_strategies,
    fine_membership,
    marginals_from_c,
    strategy_to_c,
)
from quditbell.measurement_sequences import MeasurementScenario, quantum_behavior
from quditbell.models import (
    A1B1,
    A1B2,
    A2B1,
    A2B2,
    BehaviorTable,
    CglmpBreakdown,
    DeterministicStrategy,
    HvtDistribution,
    JointDistribution,
    LocalModel,
    ShiftSpec,
)
from quditbell.quantum_core import DensityOperator

logger = logging.getLogger(__name__)

CLASSICAL_BOUND = 3.0
ALGEBRAIC_BOUND = 4.0

# order matches CglmpBreakdown fields
CGLMP_TERMS: tuple[ShiftSpec, ...] = (
    ShiftSpec(A1B1, 0),
    ShiftSpec(A2B1, 1),
    ShiftSpec(A2B2, 0),
    ShiftSpec(A1B2, 0),
)


def shift_probability(joint: JointDistribution, shift: int) -> float:
    """P(beta = alpha + shift mod d) where rows of the table are alpha."""
    d = joint.d
    alpha = np.arange(d)
    value = float(np.sum(joint.p[alpha, (alpha + shift) % d]))
    return min(max(value, 0.0), 1.0)


def bracket_weight(j: int, k: int, l: int, m: int, d: int) -> int:  # noqa: E741
    if d < 2:
        raise InvalidInputError(f"bracket needs d >= 2, got {d}")
    if any(not 0 <= index < d for index in (j, k, l, m)):
        raise InvalidInputError(f"indices {(j, k, l, m)} out of range for d={d}")
    weight = int(l == j) + int(l == (k + 1) % d) + int(m == k) + int(m == j)
    if weight == 4:
        raise ConsistencyError(
            f"bracket reached 4 at {(j, k, l, m)}, d={d}", check="bracket_cap", discrepancy=1.0
        )
    return weight


@lru_cache(maxsize=16)
def bracket_tensor(d: int) -> NDArray[np.int64]:
    """bracket_weight over the full (j, k, l, m) grid."""
    if d < 2:
        raise InvalidInputError(f"bracket needs d >= 2, got {d}")
    j, k, l, m = np.indices((d, d, d, d))  # noqa: E741
    tensor = (l == j).astype(np.int64) + (l == (k + 1) % d) + (m == k) + (m == j)
    tensor.setflags(write=False)
    return tensor


def i_from_behavior(behavior: BehaviorTable) -> CglmpBreakdown:
    terms = [shift_probability(behavior.joint(spec.setting), spec.normalized(behavior.d)) for spec in CGLMP_TERMS]
    return CglmpBreakdown(*terms, total=float(np.sum(terms)))


def i_from_c(c: HvtDistribution, config: LabConfig = DEFAULT_CONFIG) -> CglmpBreakdown:
    """I = sum C(j,k,l,m) * bracket, checked against the term-by-term marginal sums."""
    weighted = float(np.sum(c.c * bracket_tensor(c.d)))
    breakdown = i_from_behavior(marginals_from_c(c))
    gap = abs(weighted - breakdown.total)
    if gap > config.route_tol:
        raise ConsistencyError(
            f"bracket route gives {weighted:.15g}, marginal route {breakdown.total:.15g}",
            check="i_from_c",
            discrepancy=gap,
        )
    return breakdown


def i_quantum(
    rho: DensityOperator,
    scenario: MeasurementScenario,
    kind: ProcessKind,
    config: LabConfig = DEFAULT_CONFIG,
) -> CglmpBreakdown:
    breakdown = i_from_behavior(quantum_behavior(rho, scenario, kind, config))
    logger.debug("I(d=%d, %s) = %.12f", scenario.d, kind, breakdown.total)
    return breakdown


@dataclass(frozen=True)
class LocalBoundScan:
    d: int
    maximum: float
    maximizers: tuple[DeterministicStrategy, ...]
    strategies_checked: int


def scan_deterministic_strategies(d: int, config: LabConfig = DEFAULT_CONFIG) -> LocalBoundScan:
    """Exhaustive max of I over the vertices of the local polytope."""
    values: list[tuple[DeterministicStrategy, float]] = [
        (strategy, i_from_c(strategy_to_c(strategy, d), config).total)
        for strategy in enumerate_strategies(d, config)
    ]
    maximum = max(value for _, value in values)
    maximizers = tuple(s for s, value in values if value >= maximum - config.route_tol)
    logger.debug("d=%d: max %.3f attained by %d of %d strategies", d, maximum, len(maximizers), len(values))
    return LocalBoundScan(d, maximum, maximizers, len(values))


@dataclass(frozen=True, eq=False)
class ViolationCertificate:
    breakdown: CglmpBreakdown
    membership: Feasible[LocalModel] | Infeasible

    @property
    def violates(self) -> bool:
        return self.breakdown.total > CLASSICAL_BOUND + 1e-6


def violation_certificate(
    behavior: BehaviorTable,
    config: LabConfig = DEFAULT_CONFIG,
    solver: LpSolverName | str | None = None,
) -> ViolationCertificate:
    """I together with the LP verdict; a violating yet feasible behavior is an error."""
    certificate = ViolationCertificate(i_from_behavior(behavior), fine_membership(behavior, config, solver))
    if certificate.violates and isinstance(certificate.membership, Feasible):
        raise ConsistencyError(
            f"I = {certificate.breakdown.total:.9f} exceeds 3 but a local model was found",
            check="violation_certificate",
            discrepancy=certificate.breakdown.total - CLASSICAL_BOUND,
        )
    return certificate
