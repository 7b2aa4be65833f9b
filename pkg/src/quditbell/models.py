from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from quditbell.config import DEFAULT_CONFIG, LabConfig
from quditbell.errors import InvalidDistributionError, InvalidInputError

FloatArray = NDArray[np.float64]


def _probability_array(values: ArrayLike, shape: tuple[int, ...], what: str, config: LabConfig) -> FloatArray:
    array = np.array(values, dtype=np.float64, copy=True)
    if array.shape != shape:
        raise InvalidDistributionError(f"{what}: expected shape {shape}, got {array.shape}")
    if not np.all(np.isfinite(array)):
        raise InvalidDistributionError(f"{what}: non-finite entries")
    slack = config.probability_slack
    if np.min(array) < -slack:
        raise InvalidDistributionError(f"{what}: negative entry {np.min(array):.3e}")
    array = np.clip(array, 0.0, None)
    total = float(np.sum(array))
    if abs(total - 1.0) > config.normalization_tol:
        raise InvalidDistributionError(f"{what}: entries sum to {total:.12g}")
    array.setflags(write=False)
    return array


def _check_d(d: int) -> int:
    d = int(d)
    if d < 2:
        raise InvalidInputError(f"outcome count d must be at least 2, got {d}")
    return d


@dataclass(frozen=True, order=True)
class SettingPair:
    a_setting: int
    b_setting: int

    def __post_init__(self) -> None:
        if self.a_setting not in (1, 2) or self.b_setting not in (1, 2):
            raise InvalidInputError(
                f"settings must be 1 or 2, got ({self.a_setting}, {self.b_setting})"
            )

    @property
    def label(self) -> str:
        return f"A{self.a_setting}B{self.b_setting}"

    def complement(self) -> "SettingPair":
        return SettingPair(3 - self.a_setting, 3 - self.b_setting)

    @classmethod
    def from_label(cls, label: str) -> "SettingPair":
        text = label.strip().upper()
        if len(text) != 4 or text[0] != "A" or text[2] != "B" or not text[1].isdigit() or not text[3].isdigit():
            raise InvalidInputError(f"setting label must look like 'A1B2', got {label!r}")
        return cls(int(text[1]), int(text[3]))


A1B1 = SettingPair(1, 1)
A1B2 = SettingPair(1, 2)
A2B1 = SettingPair(2, 1)
A2B2 = SettingPair(2, 2)
SETTING_PAIRS: tuple[SettingPair, ...] = (A1B1, A1B2, A2B1, A2B2)


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """P(alpha, beta | A_a, B_b); rows are A outcomes, columns B outcomes."""

    d: int
    setting: SettingPair
    p: FloatArray
    config: LabConfig = field(default=DEFAULT_CONFIG, repr=False)

    def __post_init__(self) -> None:
        d = _check_d(self.d)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "p", _probability_array(self.p, (d, d), f"joint {self.setting.label}", self.config))

    def marginal_a(self) -> FloatArray:
        return self.p.sum(axis=1)

    def marginal_b(self) -> FloatArray:
        return self.p.sum(axis=0)


@dataclass(frozen=True, eq=False)
class BehaviorTable:
    d: int
    joints: Mapping[SettingPair, JointDistribution]

    def __post_init__(self) -> None:
        d = _check_d(self.d)
        ordered: dict[SettingPair, JointDistribution] = {}
        for setting in SETTING_PAIRS:
            if setting not in self.joints:
                raise InvalidDistributionError(f"behavior is missing {setting.label}")
            joint = self.joints[setting]
            if joint.d != d or joint.setting != setting:
                raise InvalidDistributionError(f"joint stored under {setting.label} does not match it")
            ordered[setting] = joint
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "joints", ordered)

    @classmethod
    def from_tables(
        cls, d: int, tables: Mapping[SettingPair, ArrayLike], config: LabConfig = DEFAULT_CONFIG
    ) -> "BehaviorTable":
        return cls(d, {s: JointDistribution(d, s, tables[s], config) for s in SETTING_PAIRS if s in tables})

    @classmethod
    def from_vector(cls, d: int, vector: ArrayLike, config: LabConfig = DEFAULT_CONFIG) -> "BehaviorTable":
        values = np.asarray(vector, dtype=np.float64).reshape(len(SETTING_PAIRS), d, d)
        return cls.from_tables(d, dict(zip(SETTING_PAIRS, values)), config)

    def joint(self, setting: SettingPair) -> JointDistribution:
        return self.joints[setting]

    def as_vector(self) -> FloatArray:
        """Tables concatenated in SETTING_PAIRS order, each row-major."""
        return np.concatenate([self.joints[s].p.reshape(-1) for s in SETTING_PAIRS])

    def max_abs_difference(self, other: "BehaviorTable") -> float:
        if other.d != self.d:
            raise InvalidInputError(f"cannot compare d={self.d} with d={other.d}")
        return float(np.max(np.abs(self.as_vector() - other.as_vector())))


@dataclass(frozen=True, eq=False)
class HvtDistribution:
    """C(j, k, l, m): outcomes of A1, A2, B1, B2 in that axis order."""

    d: int
    c: FloatArray
    config: LabConfig = field(default=DEFAULT_CONFIG, repr=False)

    def __post_init__(self) -> None:
        d = _check_d(self.d)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "c", _probability_array(self.c, (d, d, d, d), "C(j,k,l,m)", self.config))


@dataclass(frozen=True)
class DeterministicStrategy:
    j: int
    k: int
    l: int  # noqa: E741
    m: int

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.j, self.k, self.l, self.m)

    def check_range(self, d: int) -> None:
        if any(not 0 <= value < d for value in self.as_tuple()):
            raise InvalidInputError(f"strategy {self.as_tuple()} out of range for d={d}")


@dataclass(frozen=True, eq=False)
class LocalModel:
    """Weights P(lambda) with per-lambda single-side response tables.

    ``responses_a[n, a - 1, alpha]`` is P(alpha | A_a, lambda_n); likewise
    ``responses_b`` for B.
    """

    weights: FloatArray
    responses_a: FloatArray
    responses_b: FloatArray
    labels: tuple[str, ...] = field(default=())
    config: LabConfig = field(default=DEFAULT_CONFIG, repr=False)

    def __post_init__(self) -> None:
        weights = np.array(self.weights, dtype=np.float64, copy=True).reshape(-1)
        responses_a = np.array(self.responses_a, dtype=np.float64, copy=True)
        responses_b = np.array(self.responses_b, dtype=np.float64, copy=True)
        n = weights.size
        if n == 0:
            raise InvalidDistributionError("local model needs at least one hidden-variable value")
        if responses_a.ndim != 3 or responses_a.shape[:2] != (n, 2):
            raise InvalidDistributionError(f"responses_a must have shape ({n}, 2, d), got {responses_a.shape}")
        if responses_b.shape != responses_a.shape:
            raise InvalidDistributionError("responses_a and responses_b differ in shape")
        _check_d(responses_a.shape[2])
        slack = self.config.probability_slack
        tol = self.config.normalization_tol
        for name, array in (("weights", weights), ("responses_a", responses_a), ("responses_b", responses_b)):
            if np.min(array) < -slack:
                raise InvalidDistributionError(f"{name}: negative entry")
        if abs(float(weights.sum()) - 1.0) > tol:
            raise InvalidDistributionError(f"weights sum to {weights.sum():.12g}")
        for name, array in (("responses_a", responses_a), ("responses_b", responses_b)):
            if np.max(np.abs(array.sum(axis=2) - 1.0)) > tol:
                raise InvalidDistributionError(f"{name}: a response table is not normalized")
        if self.labels and len(self.labels) != n:
            raise InvalidDistributionError("labels must match the number of hidden-variable values")
        for name, array in (
            ("weights", np.clip(weights, 0.0, None)),
            ("responses_a", np.clip(responses_a, 0.0, None)),
            ("responses_b", np.clip(responses_b, 0.0, None)),
        ):
            array.setflags(write=False)
            object.__setattr__(self, name, array)
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def d(self) -> int:
        return int(self.responses_a.shape[2])

    @property
    def size(self) -> int:
        return int(self.weights.size)


@dataclass(frozen=True)
class ShiftSpec:
    """P(B_b = A_a + shift mod d); the shift must satisfy 0 <= shift < d."""

    setting: SettingPair
    shift: int

    def __post_init__(self) -> None:
        if isinstance(self.shift, bool) or not isinstance(self.shift, int) or self.shift < 0:
            raise InvalidInputError(f"shift must be a nonnegative integer, got {self.shift!r}")

    def normalized(self, d: int) -> int:
        d = _check_d(d)
        if self.shift >= d:
            raise InvalidInputError(f"shift {self.shift} out of range for d={d}")
        return self.shift


@dataclass(frozen=True)
class CglmpBreakdown:
    p_a1_b1: float
    p_b1_a2_plus1: float
    p_a2_b2: float
    p_b2_a1: float
    total: float

    def __post_init__(self) -> None:
        terms = self.terms()
        if any(not 0.0 <= term <= 1.0 for term in terms):
            raise InvalidInputError(f"CGLMP terms must lie in [0, 1], got {terms}")
        if abs(sum(terms) - self.total) > 1e-12:
            raise InvalidInputError(f"total {self.total!r} is not the sum of the terms {terms}")

    def terms(self) -> tuple[float, float, float, float]:
        return (self.p_a1_b1, self.p_b1_a2_plus1, self.p_a2_b2, self.p_b2_a1)

    def as_dict(self) -> dict[str, float]:
        return {
            "I": self.total,
            "P(A1=B1)": self.p_a1_b1,
            "P(B1=A2+1)": self.p_b1_a2_plus1,
            "P(A2=B2)": self.p_a2_b2,
            "P(B2=A1)": self.p_b2_a1,
        }
