"""States, measurement bases and labelings used by the Bell tests.

The violating configuration is the maximally entangled qudit pair measured
in discrete-Fourier bases. A-side setting a, outcome k uses

    d**-0.5 * sum_j exp(+2 pi i j (k + alpha_a) / d) |j>

and B-side setting b, outcome l uses

    d**-0.5 * sum_j exp(-2 pi i j (l - beta_b) / d) |j>.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.stats import unitary_group

from quditbell.config import DEFAULT_CONFIG, LabConfig
from quditbell.errors import ConsistencyError, InvalidInputError
from quditbell.measurement_sequences import MeasurementScenario
from quditbell.quantum_core import (
    ComplexOperator,
    DensityOperator,
    PureState,
    Pvm,
    identity,
    outer,
    pvm_from_unitary,
    tensor_product,
)

logger = logging.getLogger(__name__)

TSIRELSON_D2 = 2.0 + math.sqrt(2.0)


def _check_d(d: int) -> int:
    if int(d) != d or d < 2:
        raise InvalidInputError(f"d must be an integer >= 2, got {d}")
    return int(d)


@dataclass(frozen=True)
class SpinLabel:
    """|s, m> with s a nonnegative half-integer and m in -s..s."""

    s: Fraction
    m: Fraction

    def __post_init__(self) -> None:
        s = Fraction(self.s)
        m = Fraction(self.m)
        if s < 0 or (2 * s).denominator != 1:
            raise InvalidInputError(f"spin s must be a nonnegative half-integer, got {s}")
        if not -s <= m <= s or (m - s).denominator != 1:
            raise InvalidInputError(f"m={m} is not a valid projection for s={s}")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "m", m)

    @property
    def d(self) -> int:
        return int(2 * self.s + 1)

    def __str__(self) -> str:
        return f"|{self.s},{self.m}>"


@dataclass(frozen=True)
class ModeOccupation:
    """Boson counts in the two hyperfine modes of one well."""

    n_up: int
    n_down: int

    def __post_init__(self) -> None:
        if self.n_up < 0 or self.n_down < 0:
            raise InvalidInputError(f"occupations must be nonnegative, got ({self.n_up}, {self.n_down})")

    @property
    def total(self) -> int:
        return self.n_up + self.n_down


def spin_label_to_index(label: SpinLabel) -> int:
    return int(label.m + label.s)


def index_to_spin_label(index: int, s: Fraction | int | str) -> SpinLabel:
    spin = Fraction(s)
    if not 0 <= index < int(2 * spin + 1):
        raise InvalidInputError(f"index {index} out of range for s={spin}")
    return SpinLabel(spin, index - spin)


def schwinger_label(occupation: ModeOccupation, atoms_per_well: int | None = None) -> SpinLabel:
    """s = (n_up + n_down) / 2, m = (n_up - n_down) / 2."""
    if atoms_per_well is not None and occupation.total != atoms_per_well:
        raise InvalidInputError(
            f"occupation ({occupation.n_up}, {occupation.n_down}) does not hold {atoms_per_well} atoms"
        )
    return SpinLabel(Fraction(occupation.total, 2), Fraction(occupation.n_up - occupation.n_down, 2))


def schwinger_occupation(label: SpinLabel) -> ModeOccupation:
    return ModeOccupation(int(label.s + label.m), int(label.s - label.m))


def maximally_entangled(d: int) -> PureState:
    """sum_j |j>|j> / sqrt(d), A-major indexing."""
    d = _check_d(d)
    amplitudes = np.zeros(d * d, dtype=np.complex128)
    amplitudes[[j * d + j for j in range(d)]] = 1.0 / math.sqrt(d)
    return PureState(amplitudes)


def maximally_entangled_density(d: int) -> DensityOperator:
    return maximally_entangled(d).density((d, d))


def maximally_entangled_spin(s: Fraction | int | str) -> PureState:
    """sum_m |s,m>_A |s,m>_B, normalized; index order follows spin_label_to_index."""
    spin = Fraction(s)
    return maximally_entangled(SpinLabel(spin, spin).d)


@dataclass(frozen=True)
class CglmpOffsets:
    alpha1: float
    alpha2: float
    beta1: float
    beta2: float

    def as_dict(self) -> dict[str, float]:
        return {"alpha1": self.alpha1, "alpha2": self.alpha2, "beta1": self.beta1, "beta2": self.beta2}


CANDIDATE_OFFSETS = CglmpOffsets(alpha1=0.0, alpha2=0.5, beta1=0.25, beta2=-0.25)


def _fourier_matrix_a(d: int, alpha: float) -> ComplexOperator:
    j, k = np.indices((d, d))
    return np.exp(2j * np.pi * j * (k + alpha) / d) / math.sqrt(d)


def _fourier_matrix_b(d: int, beta: float) -> ComplexOperator:
    j, l = np.indices((d, d))  # noqa: E741
    return np.exp(-2j * np.pi * j * (l - beta) / d) / math.sqrt(d)


def fourier_pvm_a(d: int, alpha: float, config: LabConfig = DEFAULT_CONFIG) -> Pvm:
    return pvm_from_unitary(_fourier_matrix_a(_check_d(d), alpha), config)


def fourier_pvm_b(d: int, beta: float, config: LabConfig = DEFAULT_CONFIG) -> Pvm:
    return pvm_from_unitary(_fourier_matrix_b(_check_d(d), beta), config)


def _entangled_i(d: int, offsets: CglmpOffsets) -> float:
    """I for the maximally entangled state; P(k, l) = |Va^T Vb|^2 / d."""
    alphas = (offsets.alpha1, offsets.alpha2)
    betas = (offsets.beta1, offsets.beta2)
    outcome = np.arange(d)

    def agreement(a: int, b: int, shift: int) -> float:
        amplitudes = _fourier_matrix_a(d, alphas[a - 1]).T @ _fourier_matrix_b(d, betas[b - 1])
        table = np.abs(amplitudes) ** 2 / d
        return float(np.sum(table[outcome, (outcome + shift) % d]))

    return agreement(1, 1, 0) + agreement(2, 1, 1) + agreement(2, 2, 0) + agreement(1, 2, 0)


def _offsets_acceptable(d: int, offsets: CglmpOffsets, config: LabConfig) -> bool:
    if _entangled_i(d, offsets) <= 3.0 + config.violation_margin:
        return False
    if d == 2:
        return abs(_entangled_i(2, offsets) - TSIRELSON_D2) <= 1e-6
    return True


@lru_cache(maxsize=32)
def _resolve_offsets(d: int, grid_steps: int, violation_margin: float) -> CglmpOffsets:
    config = LabConfig(offset_grid_steps=grid_steps, violation_margin=violation_margin)
    if _offsets_acceptable(d, CANDIDATE_OFFSETS, config) and _offsets_acceptable(2, CANDIDATE_OFFSETS, config):
        return CANDIDATE_OFFSETS
    logger.warning("candidate CGLMP offsets rejected for d=%d; searching a 1/%d grid", d, grid_steps)
    grid = [Fraction(step, grid_steps) - Fraction(1, 2) for step in range(grid_steps)]
    candidates = (
        CglmpOffsets(0.0, float(alpha2), float(beta1), float(beta2))
        for alpha2, beta1, beta2 in itertools.product(grid, repeat=3)
    )
    offsets = max(candidates, key=lambda candidate: _entangled_i(d, candidate))
    value = _entangled_i(d, offsets)
    if not _offsets_acceptable(d, offsets, config):
        raise ConsistencyError(
            f"no grid offsets give I > 3 for d={d} (best {value:.6f})",
            check="resolve_offsets",
            discrepancy=3.0 - value,
        )
    logger.info("using grid offsets %s for d=%d (I=%.6f)", offsets.as_dict(), d, value)
    return offsets


def resolve_offsets(d: int, config: LabConfig = DEFAULT_CONFIG) -> CglmpOffsets:
    """Offsets that make the Fourier bases violate I <= 3 for this d."""
    return _resolve_offsets(_check_d(d), config.offset_grid_steps, config.violation_margin)


def cglmp_bases(
    d: int,
    offsets: CglmpOffsets | None = None,
    config: LabConfig = DEFAULT_CONFIG,
) -> MeasurementScenario:
    d = _check_d(d)
    chosen = offsets or resolve_offsets(d, config)
    return MeasurementScenario(
        d,
        fourier_pvm_a(d, chosen.alpha1, config),
        fourier_pvm_a(d, chosen.alpha2, config),
        fourier_pvm_b(d, chosen.beta1, config),
        fourier_pvm_b(d, chosen.beta2, config),
    )


def computational_pvm(d: int) -> Pvm:
    return pvm_from_unitary(identity(d))


def x_basis_pvm() -> Pvm:
    return pvm_from_unitary(np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0))


def commuting_scenario(d: int) -> MeasurementScenario:
    """Both observables of each side share the computational eigenbasis."""
    d = _check_d(d)
    basis = computational_pvm(d)
    return MeasurementScenario(d, basis, basis, basis, basis)


def computational_x_scenario() -> MeasurementScenario:
    """d = 2, setting 1 computational and setting 2 the X basis on both sides."""
    return MeasurementScenario(2, computational_pvm(2), x_basis_pvm(), computational_pvm(2), x_basis_pvm())


def basis_density(d: int, index: int) -> ComplexOperator:
    if not 0 <= index < d:
        raise InvalidInputError(f"basis index {index} out of range for d={d}")
    vector = np.zeros(d, dtype=np.complex128)
    vector[index] = 1.0
    return outer(vector)


def product_density(rho_a: ComplexOperator, rho_b: ComplexOperator) -> DensityOperator:
    return DensityOperator(tensor_product(rho_a, rho_b), (rho_a.shape[0], rho_b.shape[0]))


def random_pure_state(dim: int, rng: np.random.Generator) -> PureState:
    return PureState.normalized(rng.normal(size=dim) + 1j * rng.normal(size=dim))


def random_density(dims: tuple[int, int], rng: np.random.Generator, rank: int | None = None) -> DensityOperator:
    """Ginibre-distributed mixed state of the given rank (full rank by default)."""
    n = dims[0] * dims[1]
    columns = n if rank is None else rank
    if not 1 <= columns <= n:
        raise InvalidInputError(f"rank must lie in [1, {n}], got {rank}")
    g = rng.normal(size=(n, columns)) + 1j * rng.normal(size=(n, columns))
    matrix = g @ g.conj().T
    return DensityOperator(matrix / np.trace(matrix).real, dims)


def random_pvm(d: int, rng: np.random.Generator, config: LabConfig = DEFAULT_CONFIG) -> Pvm:
    return pvm_from_unitary(unitary_group.rvs(_check_d(d), random_state=rng), config)


def random_scenario(d: int, rng: np.random.Generator, config: LabConfig = DEFAULT_CONFIG) -> MeasurementScenario:
    return MeasurementScenario(d, *(random_pvm(d, rng, config) for _ in range(4)))
