"""Dense complex operators and the bipartite state/projector substrate.

Subsystem index convention is A-major: basis index ``i_A * d_B + i_B``,
which is what ``np.kron(op_A, op_B)`` produces.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Literal, TypeAlias

import numpy as np
from numpy.typing import ArrayLike, NDArray

from quditbell.config import DEFAULT_CONFIG, LabConfig
from quditbell.errors import (
    DimensionMismatchError,
    InvalidInputError,
    InvalidOperatorError,
    InvalidStateError,
)

ComplexOperator: TypeAlias = NDArray[np.complex128]


def _frozen(array: ArrayLike) -> NDArray[np.complex128]:
    result = np.array(array, dtype=np.complex128, copy=True)
    result.setflags(write=False)
    return result


def as_operator(entries: ArrayLike, operation: str = "as_operator") -> ComplexOperator:
    matrix = np.asarray(entries, dtype=np.complex128)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] == 0:
        raise DimensionMismatchError(
            f"{operation}: expected a non-empty square matrix, got shape {matrix.shape}",
            operation=operation,
            expected="square",
            actual=matrix.shape,
        )
    return matrix


def identity(dim: int) -> ComplexOperator:
    if dim < 1:
        raise InvalidInputError(f"identity dimension must be positive, got {dim}")
    return np.eye(dim, dtype=np.complex128)


def outer(vector: ArrayLike) -> ComplexOperator:
    v = np.asarray(vector, dtype=np.complex128).reshape(-1)
    return np.outer(v, v.conj())


def tensor_product(a: ArrayLike, b: ArrayLike) -> ComplexOperator:
    return np.kron(as_operator(a, "tensor_product"), as_operator(b, "tensor_product"))


def mat_mul(a: ArrayLike, b: ArrayLike) -> ComplexOperator:
    left = as_operator(a, "mat_mul")
    right = as_operator(b, "mat_mul")
    if left.shape != right.shape:
        raise DimensionMismatchError(
            f"mat_mul: {left.shape} x {right.shape}",
            operation="mat_mul",
            expected=left.shape,
            actual=right.shape,
        )
    return left @ right


def adjoint(a: ArrayLike) -> ComplexOperator:
    return as_operator(a, "adjoint").conj().T


def trace(a: ArrayLike) -> complex:
    return complex(np.trace(as_operator(a, "trace")))


def trace_of_product(a: ArrayLike, b: ArrayLike) -> complex:
    """Tr(a @ b) without forming the product."""
    left = as_operator(a, "trace_of_product")
    right = as_operator(b, "trace_of_product")
    if left.shape != right.shape:
        raise DimensionMismatchError(
            f"trace_of_product: {left.shape} vs {right.shape}",
            operation="trace_of_product",
            expected=left.shape,
            actual=right.shape,
        )
    return complex(np.einsum("ij,ji->", left, right))


def commutator_norm(a: ArrayLike, b: ArrayLike) -> float:
    left = as_operator(a, "commutator_norm")
    right = as_operator(b, "commutator_norm")
    return float(np.max(np.abs(left @ right - right @ left)))


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: NDArray[np.complex128]

    def __post_init__(self) -> None:
        amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if amplitudes.ndim != 1 or amplitudes.size == 0:
            raise DimensionMismatchError(
                f"PureState amplitudes must be a non-empty vector, got shape {amplitudes.shape}",
                operation="PureState",
            )
        norm = float(np.linalg.norm(amplitudes))
        if abs(norm - 1.0) > 1e-10:
            raise InvalidInputError(f"PureState must have unit norm, got {norm:.12g}")
        object.__setattr__(self, "amplitudes", _frozen(amplitudes))

    @classmethod
    def normalized(cls, amplitudes: ArrayLike) -> "PureState":
        vector = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        norm = float(np.linalg.norm(vector))
        if norm == 0.0:
            raise InvalidInputError("cannot normalize the zero vector")
        return cls(vector / norm)

    @property
    def dim(self) -> int:
        return int(self.amplitudes.size)

    def density(self, dims: tuple[int, int] | None = None) -> "DensityOperator":
        return DensityOperator(outer(self.amplitudes), dims or (self.dim, 1))


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Bipartite state on a d_A * d_B dimensional space.

    Construction only checks shapes; physical validity is reported by
    ``validate_density`` so that defective inputs can be inspected.
    """

    matrix: ComplexOperator
    dims: tuple[int, int]

    def __post_init__(self) -> None:
        matrix = as_operator(self.matrix, "DensityOperator")
        d_a, d_b = (int(value) for value in self.dims)
        if d_a < 1 or d_b < 1 or d_a * d_b != matrix.shape[0]:
            raise DimensionMismatchError(
                f"dims {self.dims} do not factor operator dimension {matrix.shape[0]}",
                operation="DensityOperator",
                expected=matrix.shape[0],
                actual=self.dims,
            )
        object.__setattr__(self, "matrix", _frozen(matrix))
        object.__setattr__(self, "dims", (d_a, d_b))

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])


@dataclass(frozen=True)
class ValidationReport:
    hermitian_defect: float
    trace_defect: float
    min_eigenvalue: float
    hermitian_tol: float
    trace_tol: float
    psd_tol: float

    @property
    def hermitian_ok(self) -> bool:
        return self.hermitian_defect <= self.hermitian_tol

    @property
    def trace_ok(self) -> bool:
        return self.trace_defect <= self.trace_tol

    @property
    def psd_ok(self) -> bool:
        return self.min_eigenvalue >= -self.psd_tol

    @property
    def passed(self) -> bool:
        return self.hermitian_ok and self.trace_ok and self.psd_ok

    def failures(self) -> list[str]:
        failed: list[str] = []
        if not self.hermitian_ok:
            failed.append(f"hermitian defect {self.hermitian_defect:.3e}")
        if not self.trace_ok:
            failed.append(f"trace defect {self.trace_defect:.3e}")
        if not self.psd_ok:
            failed.append(f"min eigenvalue {self.min_eigenvalue:.3e}")
        return failed


def validate_density(rho: DensityOperator, config: LabConfig = DEFAULT_CONFIG) -> ValidationReport:
    matrix = rho.matrix
    hermitian_defect = float(np.max(np.abs(matrix - matrix.conj().T)))
    trace_defect = abs(complex(np.trace(matrix)) - 1.0)
    # eigvalsh reads one triangle; symmetrize so the defect above is not hidden
    min_eigenvalue = float(np.linalg.eigvalsh(0.5 * (matrix + matrix.conj().T))[0])
    return ValidationReport(
        hermitian_defect=hermitian_defect,
        trace_defect=float(trace_defect),
        min_eigenvalue=min_eigenvalue,
        hermitian_tol=config.hermitian_tol,
        trace_tol=config.trace_tol,
        psd_tol=config.psd_tol,
    )


def require_valid_density(rho: DensityOperator, config: LabConfig = DEFAULT_CONFIG) -> DensityOperator:
    report = validate_density(rho, config)
    if not report.passed:
        raise InvalidStateError("invalid density operator: " + ", ".join(report.failures()), report)
    return rho


def partial_trace(rho: DensityOperator, keep: Literal["A", "B"]) -> ComplexOperator:
    d_a, d_b = rho.dims
    blocks = rho.matrix.reshape(d_a, d_b, d_a, d_b)
    if keep == "A":
        return np.einsum("abcb->ac", blocks)
    if keep == "B":
        return np.einsum("abad->bd", blocks)
    raise InvalidInputError(f"keep must be 'A' or 'B', got {keep!r}")


@dataclass(frozen=True, eq=False)
class Pvm:
    """Outcome-indexed family of orthogonal projectors summing to identity."""

    projectors: tuple[ComplexOperator, ...]
    tolerance: float = field(default=DEFAULT_CONFIG.projector_tol, compare=False)

    def __post_init__(self) -> None:
        if len(self.projectors) == 0:
            raise InvalidOperatorError("a PVM needs at least one projector")
        frozen = tuple(_frozen(as_operator(p, "Pvm")) for p in self.projectors)
        dim = frozen[0].shape[0]
        if any(p.shape != (dim, dim) for p in frozen):
            raise DimensionMismatchError("PVM projectors differ in dimension", operation="Pvm")
        if len(frozen) != dim:
            raise InvalidOperatorError(f"a PVM on dimension {dim} needs {dim} rank-one projectors, got {len(frozen)}")
        tol = self.tolerance
        for x, proj in enumerate(frozen):
            if np.max(np.abs(proj @ proj - proj)) > tol:
                raise InvalidOperatorError(f"projector {x} is not idempotent")
            rank = complex(np.trace(proj)).real
            if abs(rank - 1.0) > tol:
                raise InvalidOperatorError(f"projector {x} has rank {rank:.3g}, expected 1")
            for y in range(x + 1, len(frozen)):
                if np.max(np.abs(proj @ frozen[y])) > tol:
                    raise InvalidOperatorError(f"projectors {x} and {y} are not orthogonal")
        total = np.sum(np.stack(frozen), axis=0)
        if np.max(np.abs(total - np.eye(dim))) > tol:
            raise InvalidOperatorError("projectors do not sum to identity")
        object.__setattr__(self, "projectors", frozen)

    @property
    def dim(self) -> int:
        return int(self.projectors[0].shape[0])

    @property
    def outcomes(self) -> int:
        return len(self.projectors)

    def __len__(self) -> int:
        return len(self.projectors)

    def __getitem__(self, outcome: int) -> ComplexOperator:
        return self.projectors[outcome]


def pvm_from_basis(vectors: Sequence[PureState], config: LabConfig = DEFAULT_CONFIG) -> Pvm:
    if not vectors:
        raise InvalidOperatorError("empty basis")
    dim = vectors[0].dim
    if any(v.dim != dim for v in vectors):
        raise DimensionMismatchError("basis vectors differ in length", operation="pvm_from_basis")
    if len(vectors) != dim:
        raise InvalidOperatorError(f"basis of dimension {dim} needs {dim} vectors, got {len(vectors)}")
    columns = np.stack([v.amplitudes for v in vectors], axis=1)
    gram = columns.conj().T @ columns
    defect = float(np.max(np.abs(gram - np.eye(dim))))
    if defect > config.orthonormal_tol:
        raise InvalidOperatorError(f"basis is not orthonormal (defect {defect:.3e})")
    return Pvm(tuple(outer(columns[:, x]) for x in range(dim)), tolerance=config.projector_tol)


def pvm_from_unitary(matrix: ArrayLike, config: LabConfig = DEFAULT_CONFIG) -> Pvm:
    """PVM whose outcome x projects onto column x of ``matrix``."""
    unitary = as_operator(matrix, "pvm_from_unitary")
    defect = float(np.max(np.abs(unitary.conj().T @ unitary - np.eye(unitary.shape[0]))))
    if defect > config.orthonormal_tol:
        raise InvalidOperatorError(f"matrix is not unitary (defect {defect:.3e})")
    return pvm_from_basis([PureState.normalized(unitary[:, x]) for x in range(unitary.shape[1])], config)
