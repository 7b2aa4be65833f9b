from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

from quditbell.config import LabConfig
from quditbell.errors import ConsistencyError, InvalidInputError
from quditbell.quantum_core import partial_trace
from quditbell.states_library import (
    CANDIDATE_OFFSETS,
    TSIRELSON_D2,
    CglmpOffsets,
    ModeOccupation,
    SpinLabel,
    cglmp_bases,
    fourier_pvm_a,
    fourier_pvm_b,
    index_to_spin_label,
    maximally_entangled,
    maximally_entangled_density,
    maximally_entangled_spin,
    resolve_offsets,
    schwinger_label,
    schwinger_occupation,
    _entangled_i,
    spin_label_to_index,
)


def test_maximally_entangled_d2_amplitudes() -> None:
    amplitudes = maximally_entangled(2).amplitudes
    assert np.allclose(amplitudes, [1 / math.sqrt(2), 0, 0, 1 / math.sqrt(2)])


@pytest.mark.parametrize("d", [2, 3, 4, 7])
def test_maximally_entangled_has_unit_norm_and_mixed_marginals(d: int) -> None:
    assert np.linalg.norm(maximally_entangled(d).amplitudes) == pytest.approx(1.0)
    rho = maximally_entangled_density(d)
    assert np.allclose(partial_trace(rho, "A"), np.eye(d) / d)
    assert np.allclose(partial_trace(rho, "B"), np.eye(d) / d)


def test_maximally_entangled_rejects_small_d() -> None:
    with pytest.raises(InvalidInputError):
        maximally_entangled(1)


def test_cglmp_bases_d2_have_fourier_modulus() -> None:
    scenario = cglmp_bases(2)
    for pvm in (scenario.pvm_A1, scenario.pvm_A2, scenario.pvm_B1, scenario.pvm_B2):
        for proj in pvm.projectors:
            assert np.allclose(np.abs(np.diag(proj)), 0.5)


@pytest.mark.parametrize("d", range(2, 13))
def test_cglmp_bases_are_valid_pvms(d: int) -> None:
    scenario = cglmp_bases(d, CANDIDATE_OFFSETS)
    for pvm in (scenario.pvm_A1, scenario.pvm_A2, scenario.pvm_B1, scenario.pvm_B2):
        assert pvm.outcomes == d
        assert np.allclose(np.sum(np.stack(pvm.projectors), axis=0), np.eye(d), atol=1e-10)


def test_candidate_offsets_are_accepted() -> None:
    for d in range(2, 9):
        assert resolve_offsets(d) == CANDIDATE_OFFSETS
    assert _entangled_i(2, CANDIDATE_OFFSETS) == pytest.approx(TSIRELSON_D2, abs=1e-9)


def test_entangled_i_matches_closed_form() -> None:
    # every term sees an offset sum of +-1/4
    for d in (2, 3, 5):
        term = math.sin(math.pi / 4) ** 2 / (d**2 * math.sin(math.pi / (4 * d)) ** 2)
        assert _entangled_i(d, CANDIDATE_OFFSETS) == pytest.approx(4 * term, abs=1e-12)


def test_resolve_offsets_falls_back_to_grid_search(monkeypatch, caplog) -> None:
    import quditbell.states_library as states_library

    monkeypatch.setattr(states_library, "CANDIDATE_OFFSETS", CglmpOffsets(0.0, 0.0, 0.0, 0.0))
    states_library._resolve_offsets.cache_clear()
    try:
        with caplog.at_level("WARNING", logger="quditbell.states_library"):
            offsets = resolve_offsets(3, LabConfig(offset_grid_steps=8))
        assert offsets != CglmpOffsets(0.0, 0.0, 0.0, 0.0)
        assert offsets.alpha1 == 0.0
        assert _entangled_i(3, offsets) > 3.001
        assert "candidate CGLMP offsets rejected" in caplog.text
    finally:
        states_library._resolve_offsets.cache_clear()


def test_resolve_offsets_raises_when_no_grid_point_violates(monkeypatch) -> None:
    import quditbell.states_library as states_library

    monkeypatch.setattr(states_library, "_entangled_i", lambda d, offsets: 2.0)
    states_library._resolve_offsets.cache_clear()
    try:
        with pytest.raises(ConsistencyError) as raised:
            resolve_offsets(3, LabConfig(offset_grid_steps=4))
        assert raised.value.check == "resolve_offsets"
    finally:
        states_library._resolve_offsets.cache_clear()


def test_fourier_pvm_phase_conventions() -> None:
    d = 3
    a = fourier_pvm_a(d, 0.0)
    b = fourier_pvm_b(d, 0.0)
    # zero offsets: B outcome k is the conjugate of A outcome k, i.e. A outcome -k
    for k in range(d):
        assert np.allclose(b[k], a[k].conj())
        assert np.allclose(b[k], a[(-k) % d])


def test_spin_label_validation() -> None:
    with pytest.raises(InvalidInputError):
        SpinLabel(Fraction(1, 3), Fraction(0))
    with pytest.raises(InvalidInputError):
        SpinLabel(Fraction(1), Fraction(2))
    with pytest.raises(InvalidInputError):
        SpinLabel(Fraction(1), Fraction(1, 2))
    assert SpinLabel(Fraction(3, 2), Fraction(-1, 2)).d == 4


def test_schwinger_label_examples() -> None:
    assert schwinger_label(ModeOccupation(2, 0)) == SpinLabel(Fraction(1), Fraction(1))
    assert schwinger_label(ModeOccupation(1, 1)) == SpinLabel(Fraction(1), Fraction(0))
    assert schwinger_occupation(SpinLabel(Fraction(1), Fraction(0))) == ModeOccupation(1, 1)
    with pytest.raises(InvalidInputError):
        schwinger_label(ModeOccupation(2, 1), atoms_per_well=2)
    with pytest.raises(InvalidInputError):
        ModeOccupation(-1, 0)


def test_spin_index_round_trip_up_to_s5() -> None:
    for twice_s in range(0, 11):
        s = Fraction(twice_s, 2)
        d = twice_s + 1
        for index in range(d):
            label = index_to_spin_label(index, s)
            assert spin_label_to_index(label) == index
            assert schwinger_label(schwinger_occupation(label)) == label
        with pytest.raises(InvalidInputError):
            index_to_spin_label(d, s)


def test_maximally_entangled_spin_dimension() -> None:
    state = maximally_entangled_spin(Fraction(3, 2))
    assert state.dim == 16
    assert np.allclose(state.amplitudes, maximally_entangled(4).amplitudes)
