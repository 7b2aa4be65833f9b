from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quditbell.errors import DimensionMismatchError, InvalidInputError, InvalidOperatorError, InvalidStateError
from quditbell.quantum_core import (
    DensityOperator,
    PureState,
    Pvm,
    adjoint,
    commutator_norm,
    identity,
    mat_mul,
    outer,
    partial_trace,
    pvm_from_basis,
    pvm_from_unitary,
    require_valid_density,
    tensor_product,
    trace,
    trace_of_product,
    validate_density,
)
from quditbell.states_library import maximally_entangled, random_density, random_pvm


def _basis_vector(d: int, index: int) -> np.ndarray:
    vector = np.zeros(d, dtype=np.complex128)
    vector[index] = 1.0
    return vector


def test_tensor_product_uses_a_major_indexing() -> None:
    a = outer(_basis_vector(2, 1))
    b = outer(_basis_vector(3, 2))
    product = tensor_product(a, b)
    assert product.shape == (6, 6)
    assert product[1 * 3 + 2, 1 * 3 + 2] == 1.0
    assert np.count_nonzero(product) == 1


def test_mat_mul_rejects_mismatched_shapes() -> None:
    with pytest.raises(DimensionMismatchError) as raised:
        mat_mul(identity(2), identity(3))
    assert raised.value.operation == "mat_mul"


def test_adjoint_and_trace() -> None:
    matrix = np.array([[1.0, 2.0j], [3.0, 4.0]])
    assert np.allclose(adjoint(matrix), [[1.0, 3.0], [-2.0j, 4.0]])
    assert trace(matrix) == 5.0
    assert trace_of_product(matrix, identity(2)) == pytest.approx(5.0)


def test_pure_state_requires_unit_norm() -> None:
    with pytest.raises(InvalidInputError):
        PureState(np.array([1.0, 1.0]))
    state = PureState.normalized([1.0, 1.0])
    assert np.isclose(np.linalg.norm(state.amplitudes), 1.0)


def test_density_operator_checks_dims() -> None:
    with pytest.raises(DimensionMismatchError):
        DensityOperator(identity(4) / 4, (3, 2))


def test_validate_density_reports_each_defect() -> None:
    negative = DensityOperator(np.diag([1.5, -0.5]).astype(complex), (2, 1))
    report = validate_density(negative)
    assert report.hermitian_ok and report.trace_ok
    assert not report.psd_ok
    assert not report.passed
    with pytest.raises(InvalidStateError) as raised:
        require_valid_density(negative)
    assert raised.value.report is not None

    skewed = DensityOperator(np.array([[0.5, 0.1], [0.0, 0.5]], dtype=complex), (2, 1))
    assert not validate_density(skewed).hermitian_ok
    assert not validate_density(DensityOperator(identity(2), (2, 1))).trace_ok


def test_partial_trace_of_maximally_entangled_is_maximally_mixed() -> None:
    for d in (2, 3, 5):
        rho = maximally_entangled(d).density((d, d))
        assert np.allclose(partial_trace(rho, "A"), identity(d) / d)
        assert np.allclose(partial_trace(rho, "B"), identity(d) / d)


def test_partial_trace_of_product_recovers_factors(rng) -> None:
    rho_a = random_density((2, 1), rng).matrix
    rho_b = random_density((3, 1), rng).matrix
    rho = DensityOperator(tensor_product(rho_a, rho_b), (2, 3))
    assert np.allclose(partial_trace(rho, "A"), rho_a)
    assert np.allclose(partial_trace(rho, "B"), rho_b)
    with pytest.raises(InvalidInputError):
        partial_trace(rho, "C")  # type: ignore[arg-type]


def test_pvm_rejects_non_orthogonal_family() -> None:
    plus = outer(np.array([1.0, 1.0]) / np.sqrt(2))
    zero = outer(_basis_vector(2, 0))
    with pytest.raises(InvalidOperatorError):
        Pvm((zero, plus))


def test_pvm_rejects_incomplete_family() -> None:
    with pytest.raises(InvalidOperatorError):
        Pvm((outer(_basis_vector(3, 0)), outer(_basis_vector(3, 1))))


def test_pvm_from_basis_checks_count_and_orthonormality() -> None:
    e0 = PureState(_basis_vector(2, 0))
    plus = PureState.normalized([1.0, 1.0])
    with pytest.raises(InvalidOperatorError):
        pvm_from_basis([e0])
    with pytest.raises(InvalidOperatorError):
        pvm_from_basis([e0, plus])
    pvm = pvm_from_basis([e0, PureState(_basis_vector(2, 1))])
    assert pvm.outcomes == 2
    assert pvm.dim == 2


def test_commutator_norm_detects_noncommuting_projectors() -> None:
    z = outer(_basis_vector(2, 0))
    x = outer(np.array([1.0, 1.0]) / np.sqrt(2))
    assert commutator_norm(z, z) == 0.0
    assert commutator_norm(z, x) > 0.1


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32 - 1), d=st.integers(min_value=2, max_value=6))
def test_random_pvm_satisfies_invariants(seed: int, d: int) -> None:
    pvm = random_pvm(d, np.random.default_rng(seed))
    total = np.sum(np.stack(pvm.projectors), axis=0)
    assert np.allclose(total, np.eye(d), atol=1e-10)
    for proj in pvm.projectors:
        assert np.allclose(proj @ proj, proj, atol=1e-10)
        assert np.allclose(proj, proj.conj().T, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32 - 1), d=st.integers(min_value=2, max_value=4))
def test_random_density_is_valid(seed: int, d: int) -> None:
    rho = random_density((d, d), np.random.default_rng(seed))
    assert validate_density(rho).passed


def test_pvm_from_unitary_rejects_non_unitary() -> None:
    with pytest.raises(InvalidOperatorError):
        pvm_from_unitary(np.array([[1.0, 1.0], [0.0, 1.0]]))
    # orthogonal but unnormalized columns
    with pytest.raises(InvalidOperatorError, match="not unitary"):
        pvm_from_unitary(np.diag([2.0, 3.0]))


def test_pvm_rejects_higher_rank_projectors() -> None:
    upper = np.diag([1.0, 1.0, 0.0, 0.0]).astype(np.complex128)
    lower = np.diag([0.0, 0.0, 1.0, 1.0]).astype(np.complex128)
    with pytest.raises(InvalidOperatorError, match="rank-one"):
        Pvm((upper, lower))
    with pytest.raises(InvalidOperatorError, match="rank"):
        Pvm((upper, lower, np.zeros((4, 4)), np.zeros((4, 4))))


def _complex_matrix(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))


@settings(max_examples=50, deadline=None)
@given(
    seed=st.integers(min_value=0, max_value=2**32 - 1),
    n=st.integers(min_value=1, max_value=4),
    m=st.integers(min_value=1, max_value=4),
)
def test_trace_is_multiplicative_over_tensor_products(seed: int, n: int, m: int) -> None:
    rng = np.random.default_rng(seed)
    x, y = _complex_matrix(rng, n), _complex_matrix(rng, m)
    assert trace(tensor_product(x, y)) == pytest.approx(trace(x) * trace(y), abs=1e-10)


def test_pvm_from_basis_hadamard_projectors() -> None:
    plus = PureState(np.array([1.0, 1.0]) / np.sqrt(2.0))
    minus = PureState(np.array([1.0, -1.0]) / np.sqrt(2.0))
    pvm = pvm_from_basis([plus, minus])
    np.testing.assert_allclose(pvm[0], [[0.5, 0.5], [0.5, 0.5]], atol=1e-12)
    np.testing.assert_allclose(pvm[1], [[0.5, -0.5], [-0.5, 0.5]], atol=1e-12)


def test_pvm_from_basis_fourier_dim3_resolves_identity() -> None:
    omega = np.exp(2j * np.pi / 3)
    vectors = [PureState(np.array([omega ** (j * k) for k in range(3)]) / np.sqrt(3.0)) for j in range(3)]
    pvm = pvm_from_basis(vectors)
    np.testing.assert_allclose(sum(pvm.projectors), identity(3), atol=1e-12)
    for projector in pvm.projectors:
        np.testing.assert_allclose(np.abs(projector), np.full((3, 3), 1.0 / 3.0), atol=1e-12)
