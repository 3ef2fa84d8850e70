import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsdc_sim.qstate import (Basis, EncodingOp, Ensemble, InvalidStateError, MAXIMALLY_MIXED,
                             QubitState, apply_encoding, born_probability, holevo_bound, measure,
                             prepare, source_entropy, von_neumann_entropy)
from strategies import bases, bits, density_matrices

H, V = prepare(Basis.PLUS, 0), prepare(Basis.PLUS, 1)
U_, D = prepare(Basis.CROSS, 0), prepare(Basis.CROSS, 1)


def h2(p):
    """Scalar binary entropy, the independent oracle for qubit entropies."""
    return 0.0 if p in (0.0, 1.0) else -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def test_prepare_examples():
    np.testing.assert_allclose(H.rho, np.diag([1, 0]), atol=1e-15)
    np.testing.assert_allclose(V.rho, np.diag([0, 1]), atol=1e-15)
    ket = np.array([1, -1]) / math.sqrt(2)
    np.testing.assert_allclose(D.rho, np.outer(ket, ket), atol=1e-15)
    np.testing.assert_allclose(D.rho, [[0.5, -0.5], [-0.5, 0.5]], atol=1e-15)


def test_prepare_rejects_bad_bit():
    with pytest.raises(ValueError):
        prepare(Basis.PLUS, 2)


@pytest.mark.parametrize("rho", [
    np.diag([1.0, 1.0]),                 # trace 2
    np.array([[0.5, 0.5], [0.1, 0.5]]),  # not Hermitian
    np.diag([1.5, -0.5]),                # negative eigenvalue
    np.eye(3) / 3,
])
def test_invalid_states_rejected(rho):
    with pytest.raises(InvalidStateError):
        QubitState(rho)


def test_state_is_immutable():
    with pytest.raises(ValueError):
        H.rho[0, 0] = 0.0


@pytest.mark.parametrize("state,basis,bit,expected", [
    (H, Basis.PLUS, 0, 1.0),
    (U_, Basis.PLUS, 0, 0.5),
    (MAXIMALLY_MIXED, Basis.CROSS, 1, 0.5),
])
def test_born_probability_examples(state, basis, bit, expected):
    assert born_probability(state, basis, bit) == pytest.approx(expected, abs=1e-12)


def test_born_against_explicit_inner_product():
    ket_u = np.array([1, 1]) / math.sqrt(2)
    assert born_probability(U_, Basis.PLUS, 0) == pytest.approx(abs(ket_u[0]) ** 2, abs=1e-15)


@pytest.mark.parametrize("state,basis,r,bit,after", [
    (D, Basis.CROSS, 0.0, 1, D),
    (D, Basis.CROSS, 0.999, 1, D),
    (U_, Basis.PLUS, 0.3, 0, H),
    (U_, Basis.PLUS, 0.7, 1, V),
])
def test_measure_examples(state, basis, r, bit, after):
    got, collapsed = measure(state, basis, r)
    assert got == bit
    assert collapsed.allclose(after)


@given(density_matrices(), bases, st.floats(0, 1, exclude_max=True), st.floats(0, 1, exclude_max=True))
def test_repeated_measurement_is_stable(state, basis, r1, r2):
    bit, collapsed = measure(state, basis, r1)
    assert measure(collapsed, basis, r2)[0] == bit


def test_encoding_examples():
    assert apply_encoding(EncodingOp.U, H).allclose(V)
    assert apply_encoding(EncodingOp.U, U_).allclose(D)
    assert apply_encoding(EncodingOp.I, D) is D


def test_u_matrix_matches_definition():
    # U = |0><1| - |1><0|, so U|0> = -|1>, U|d> = -|u>
    u = EncodingOp.U.matrix
    np.testing.assert_array_equal(u, [[0, 1], [-1, 0]])
    np.testing.assert_allclose(u @ [1, 0], [0, -1])
    d = np.array([1, -1]) / math.sqrt(2)
    np.testing.assert_allclose(u @ d, -np.array([1, 1]) / math.sqrt(2))


@given(density_matrices(), bases)
def test_born_normalization(state, basis):
    total = born_probability(state, basis, 0) + born_probability(state, basis, 1)
    assert total == pytest.approx(1.0, abs=1e-12)


@given(density_matrices())
def test_u_twice_is_identity_on_density_matrices(state):
    twice = apply_encoding(EncodingOp.U, apply_encoding(EncodingOp.U, state))
    assert twice.allclose(state)


@given(st.floats(0, 2 * math.pi), bases, bits)
def test_global_phase_is_invisible(phase, basis, bit):
    ket = {(Basis.PLUS, 0): [1, 0], (Basis.PLUS, 1): [0, 1],
           (Basis.CROSS, 0): [1, 1], (Basis.CROSS, 1): [1, -1]}[basis, bit]
    phased = QubitState.from_ket(np.exp(1j * phase) * np.array(ket, dtype=complex))
    assert phased.allclose(prepare(basis, bit))
    for b in Basis:
        assert born_probability(phased, b, 0) == pytest.approx(born_probability(prepare(basis, bit), b, 0), abs=1e-12)


@pytest.mark.parametrize("state,expected", [
    (H, 0.0),
    (MAXIMALLY_MIXED, 1.0),
    (QubitState(np.diag([0.75, 0.25])), 0.8112781244591328),
])
def test_entropy_examples(state, expected):
    assert von_neumann_entropy(state) == pytest.approx(expected, abs=1e-12)


def test_entropy_oracle_value():
    assert h2(0.25) == pytest.approx(0.811278, abs=1e-6)


@given(density_matrices())
def test_entropy_matches_binary_entropy_of_eigenvalue(state):
    (a, b), (_, d) = state.rho
    lam = 0.5 - math.sqrt(0.25 * (a.real - d.real) ** 2 + abs(b) ** 2)
    assert von_neumann_entropy(state) == pytest.approx(h2(min(max(lam, 0.0), 1.0)), abs=1e-6)


FOUR = Ensemble(tuple((0.25, s) for s in (H, V, U_, D)))


def test_holevo_examples():
    assert holevo_bound(FOUR) == pytest.approx(1.0, abs=1e-12)
    assert holevo_bound(Ensemble(((1.0, U_),))) == pytest.approx(0.0, abs=1e-12)
    assert holevo_bound(Ensemble(((0.5, H), (0.5, V)))) == pytest.approx(1.0, abs=1e-12)


def test_holevo_four_state_mixture_is_half_identity():
    np.testing.assert_allclose(FOUR.mixture().rho, np.eye(2) / 2, atol=1e-15)


def test_source_entropy_examples():
    assert source_entropy(FOUR) == 2.0
    assert source_entropy(Ensemble(((1.0, H),))) == 0.0
    assert source_entropy(Ensemble(((0.5, H), (0.5, U_)))) == 1.0


def test_two_state_holevo_matches_eigenvalue_oracle():
    lam = (1 - 1 / math.sqrt(2)) / 2
    assert holevo_bound(Ensemble(((0.5, H), (0.5, U_)))) == pytest.approx(h2(lam), abs=1e-12)
    assert h2(lam) == pytest.approx(0.600876, abs=1e-6)


@pytest.mark.parametrize("entries", [(), ((0.7, H),), ((0.5, H), (0.6, V))])
def test_invalid_ensembles(entries):
    with pytest.raises(ValueError):
        Ensemble(entries)


@st.composite
def ensembles(draw):
    states = draw(st.lists(density_matrices(), min_size=1, max_size=6))
    w = np.array(draw(st.lists(st.floats(0.01, 1.0), min_size=len(states), max_size=len(states))))
    w = w / w.sum()
    w[-1] = 1.0 - w[:-1].sum()
    return Ensemble(tuple(zip(w.tolist(), states)))


@settings(max_examples=300)
@given(ensembles())
def test_holevo_between_zero_and_source_entropy(ens):
    chi = holevo_bound(ens)
    assert chi >= -1e-9
    assert chi <= source_entropy(ens) + 1e-9
    assert chi <= 1.0 + 1e-9
