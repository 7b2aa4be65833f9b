from __future__ import annotations

import numpy as np
import pytest

from quditbell.config import LabConfig
from quditbell.errors import InvalidDistributionError, InvalidInputError
from quditbell.models import A1B1, A2B1, BehaviorTable, CglmpBreakdown, HvtDistribution, JointDistribution, LocalModel, ShiftSpec

LOOSE = LabConfig(normalization_tol=1e-5)


def _slightly_heavy(d: int) -> np.ndarray:
    table = np.full((d, d), 1.0 / d**2)
    table[0, 0] += 1e-6
    return table


def test_joint_distribution_uses_configured_normalization_tol() -> None:
    with pytest.raises(InvalidDistributionError, match="sum to"):
        JointDistribution(2, A1B1, _slightly_heavy(2))
    joint = JointDistribution(2, A1B1, _slightly_heavy(2), LOOSE)
    assert joint.p.sum() == pytest.approx(1.0 + 1e-6)


def test_behavior_table_threads_config_to_joints() -> None:
    vector = np.concatenate([_slightly_heavy(3).reshape(-1)] * 4)
    with pytest.raises(InvalidDistributionError):
        BehaviorTable.from_vector(3, vector)
    behavior = BehaviorTable.from_vector(3, vector, LOOSE)
    assert behavior.joint(A2B1).config is LOOSE


def test_hvt_distribution_uses_configured_normalization_tol() -> None:
    c = np.full((2, 2, 2, 2), 1.0 / 16)
    c[1, 1, 1, 1] += 1e-6
    with pytest.raises(InvalidDistributionError):
        HvtDistribution(2, c)
    assert HvtDistribution(2, c, LOOSE).c.shape == (2, 2, 2, 2)


def test_local_model_uses_configured_tolerances() -> None:
    responses = np.full((2, 2, 2), 0.5)
    weights = np.array([0.5, 0.5 + 1e-6])
    with pytest.raises(InvalidDistributionError, match="weights sum"):
        LocalModel(weights, responses, responses)
    model = LocalModel(weights, responses, responses, config=LOOSE)
    assert model.size == 2


def test_shift_spec_rejects_negative_and_non_integer_shifts() -> None:
    with pytest.raises(InvalidInputError):
        ShiftSpec(A1B1, -1)
    with pytest.raises(InvalidInputError):
        ShiftSpec(A1B1, 1.0)
    with pytest.raises(InvalidInputError):
        ShiftSpec(A1B1, True)


def test_shift_spec_normalized_requires_shift_below_d() -> None:
    assert ShiftSpec(A1B1, 1).normalized(2) == 1
    with pytest.raises(InvalidInputError, match="out of range"):
        ShiftSpec(A1B1, 2).normalized(2)
    assert ShiftSpec(A1B1, 2).normalized(3) == 2


def test_cglmp_breakdown_rejects_terms_outside_unit_interval() -> None:
    with pytest.raises(InvalidInputError, match=r"\[0, 1\]"):
        CglmpBreakdown(1.2, 0.0, 0.0, 0.0, total=1.2)
    with pytest.raises(InvalidInputError):
        CglmpBreakdown(-0.1, 0.5, 0.5, 0.5, total=1.4)


def test_cglmp_breakdown_rejects_inconsistent_total() -> None:
    with pytest.raises(InvalidInputError, match="not the sum"):
        CglmpBreakdown(0.5, 0.5, 0.5, 0.5, total=3.0)
    assert CglmpBreakdown(1.0, 1.0, 1.0, 0.0, total=3.0).as_dict()["I"] == 3.0
