import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qsdc_sim.adversary import (USD_POVM, Action, BasisPolicy, EveMemory, EveRecord, InterceptResend,
                                Leg, NoAttack, OpaqueUSD, attack_backward, attack_forward,
                                build_usd_povm, parse_attack)
from qsdc_sim.qstate import (Basis, EncodingOp, QubitState, apply_encoding, born_probability, measure,
                             prepare)
from qsdc_sim.rng import ReplayVariates, Variates
from oracles import PREP_OF, S, ir_oracle_error, proj, usd_oracle_four_state_error
from strategies import density_matrices


def test_oracles():
    assert ir_oracle_error() == pytest.approx(0.25, abs=1e-12)
    assert usd_oracle_four_state_error() == pytest.approx(0.5, abs=1e-12)


# -- POVM ------------------------------------------------------------------------

def test_povm_completeness_and_positivity():
    p = build_usd_povm()
    np.testing.assert_allclose(p.e_h + p.e_u + p.e_inconclusive, np.eye(2), atol=1e-12)
    for e in (p.e_h, p.e_u, p.e_inconclusive):
        assert np.linalg.eigvalsh(e).min() >= -1e-12


def test_povm_zero_false_positives():
    assert np.trace(USD_POVM.e_h @ proj("u")).real == pytest.approx(0.0, abs=1e-12)
    assert np.trace(USD_POVM.e_u @ proj("H")).real == pytest.approx(0.0, abs=1e-12)


def test_conclusive_rate():
    for label in ("H", "u"):
        rate = np.trace((USD_POVM.e_h + USD_POVM.e_u) @ proj(label)).real
        assert rate == pytest.approx(1 - S, abs=1e-12)
        assert rate == pytest.approx(0.292893, abs=1e-6)


def test_no_usd_povm_beats_construction():
    # Zero false positives force E_H = a|d><d|, E_u = b|V><V|; scan (a, b)
    # and keep the pairs for which E_inconclusive stays positive.
    best = 0.0
    for a in np.linspace(0, 1, 401):
        for b in np.linspace(0, 1, 401):
            rest = np.eye(2) - a * proj("d") - b * proj("V")
            if np.linalg.eigvalsh(rest).min() >= -1e-12:
                best = max(best, 0.5 * (a / 2 + b / 2))
    assert best <= 1 - S + 1e-6
    assert best >= 1 - S - 5e-3


# -- forward leg -----------------------------------------------------------------

def test_none_passes_untouched():
    mem = EveMemory()
    state = prepare(Basis.CROSS, 1)
    assert attack_forward(state, 0, NoAttack(), mem, Variates(1)) is state
    assert len(mem) == 0


def test_intercept_eigenstate_is_undisturbed():
    mem = EveMemory()
    out = attack_forward(prepare(Basis.PLUS, 0), 7, InterceptResend(BasisPolicy.PLUS, 1.0), mem,
                         ReplayVariates([0.5, 0.9]))
    assert out.allclose(prepare(Basis.PLUS, 0))
    rec = mem.get(Leg.FORWARD, 7)
    assert (rec.action, rec.basis, rec.bit) == (Action.MEASURED, Basis.PLUS, 0)


def test_usd_on_u_outcomes():
    p_u = 1 - S
    strategy = OpaqueUSD(True, 1.0)
    mem = EveMemory()
    out = attack_forward(prepare(Basis.CROSS, 0), 0, strategy, mem, ReplayVariates([0.0, p_u / 2]))
    assert out.allclose(prepare(Basis.CROSS, 0))
    assert (mem.get(Leg.FORWARD, 0).action, mem.get(Leg.FORWARD, 0).label) == (Action.CONCLUSIVE, "u")
    mem = EveMemory()
    assert attack_forward(prepare(Basis.CROSS, 0), 0, strategy, mem, ReplayVariates([0.0, p_u + 1e-9])) is None
    assert mem.get(Leg.FORWARD, 0).action is Action.BLOCKED


def test_usd_block_rate_on_u():
    n, rng, lost = 20_000, Variates(2), 0
    for i in range(n):
        lost += attack_forward(prepare(Basis.CROSS, 0), i, OpaqueUSD(True, 1.0), EveMemory(), rng) is None
    assert abs(lost / n - S) <= 4 * math.sqrt(S * (1 - S) / n)


def test_usd_pass_inconclusive_state_is_valid():
    out = attack_forward(prepare(Basis.PLUS, 1), 0, OpaqueUSD(False, 1.0), EveMemory(),
                         ReplayVariates([0.0, 0.999]))
    assert isinstance(out, QubitState)


def test_fraction_consumes_one_variate_even_when_passing():
    rng = Variates(4)
    mem = EveMemory()
    attack_forward(prepare(Basis.PLUS, 0), 0, InterceptResend(BasisPolicy.RANDOM, 0.0), mem, rng)
    assert len(rng.drain()) == 1
    assert mem.get(Leg.FORWARD, 0).action is Action.PASSED
    attack_forward(prepare(Basis.PLUS, 0), 1, NoAttack(), mem, rng)
    assert len(rng.drain()) == 1


def test_memory_rejects_duplicates():
    mem = EveMemory()
    mem.add(EveRecord(1, Leg.FORWARD, Action.PASSED))
    mem.add(EveRecord(1, Leg.BACKWARD, Action.PASSED))
    with pytest.raises(ValueError):
        mem.add(EveRecord(1, Leg.FORWARD, Action.MEASURED))


STRATEGIES = [NoAttack(), InterceptResend(BasisPolicy.RANDOM, 1.0), InterceptResend(BasisPolicy.CROSS, 0.5),
              OpaqueUSD(True, 1.0), OpaqueUSD(False, 1.0), OpaqueUSD(False, 0.3)]


@given(density_matrices(), st.sampled_from(STRATEGIES), st.integers(0, 2**32))
def test_forward_output_is_valid_state(state, strategy, seed):
    out = attack_forward(state, 0, strategy, EveMemory(), Variates(seed))
    assert out is None or isinstance(out, QubitState)


# -- backward leg ----------------------------------------------------------------

def test_backward_untouched_position_with_none():
    mem = EveMemory()
    photon = apply_encoding(EncodingOp.U, prepare(Basis.PLUS, 0))
    assert attack_backward(photon, 3, NoAttack(), mem, Variates(0)) is photon
    assert mem.guess(3) is None


def test_backward_guess_after_conclusive_h():
    for message_bit in (0, 1):
        mem = EveMemory()
        mem.add(EveRecord(0, Leg.FORWARD, Action.CONCLUSIVE, Basis.PLUS, 0, label="H"))
        photon = apply_encoding(EncodingOp.for_bit(message_bit), prepare(Basis.PLUS, 0))
        out = attack_backward(photon, 0, OpaqueUSD(True, 1.0), mem, Variates(9))
        assert mem.guess(0) == message_bit
        assert out.allclose(photon)


def test_backward_guess_mismatched_basis_is_coin_flip():
    # Eve recorded Measured(cross, 0) but the returning photon is Bob's |H>
    # encoded: enumerate encodings x Born outcomes for P(correct guess).
    p_correct = 0.0
    for m in (0, 1):
        photon = apply_encoding(EncodingOp.for_bit(m), prepare(Basis.PLUS, 0))
        for measured in (0, 1):
            p = born_probability(photon, Basis.CROSS, measured)
            p_correct += 0.5 * p * ((0 ^ measured) == m)
    assert p_correct == pytest.approx(0.5, abs=1e-12)

    n, hits, rng = 20_000, 0, Variates(8)
    for i in range(n):
        m = i % 2
        mem = EveMemory()
        mem.add(EveRecord(i, Leg.FORWARD, Action.MEASURED, Basis.CROSS, 0))
        photon = apply_encoding(EncodingOp.for_bit(m), prepare(Basis.PLUS, 0))
        attack_backward(photon, i, InterceptResend(BasisPolicy.RANDOM, 1.0), mem, rng)
        hits += mem.guess(i) == m
    assert abs(hits / n - 0.5) <= 4 * math.sqrt(0.25 / n)


# -- four-state statistics against the oracles ------------------------------------

def _forward_check_error(strategy, n, seed):
    rng, errors, compared = Variates(seed), 0, 0
    for i in range(n):
        basis, bit = PREP_OF["HVud"[rng.index(4)]]
        out = attack_forward(prepare(basis, bit), i, strategy, EveMemory(), rng)
        if out is None:
            continue
        compared += 1
        errors += measure(out, basis, rng.uniform())[0] != bit
    return errors, compared


@pytest.mark.parametrize("strategy,oracle", [
    (InterceptResend(BasisPolicy.RANDOM, 1.0), ir_oracle_error),
    (OpaqueUSD(True, 1.0), usd_oracle_four_state_error),
])
def test_four_state_error_rate_matches_oracle(strategy, oracle):
    errors, compared = _forward_check_error(strategy, 100_000, 21)
    p = oracle()
    assert errors > 0
    assert abs(errors / compared - p) <= 4 * math.sqrt(p * (1 - p) / compared)


def test_two_state_usd_resends_exact_state():
    rng = Variates(13)
    for i in range(5_000):
        basis, bit = PREP_OF["Hu"[rng.index(2)]]
        mem = EveMemory()
        out = attack_forward(prepare(basis, bit), i, OpaqueUSD(True, 1.0), mem, rng)
        if out is not None:
            assert out.allclose(prepare(basis, bit))


@pytest.mark.parametrize("spec,expected", [
    ("none", NoAttack()),
    ("ir:random:1.0", InterceptResend(BasisPolicy.RANDOM, 1.0)),
    ("ir:plus:0.25", InterceptResend(BasisPolicy.PLUS, 0.25)),
    ("usd:block:1", OpaqueUSD(True, 1.0)),
    ("usd:pass:0.5", OpaqueUSD(False, 0.5)),
])
def test_attack_spec_round_trip(spec, expected):
    assert parse_attack(spec) == expected
    assert parse_attack(expected.to_spec()) == expected


@pytest.mark.parametrize("spec", ["", "ir", "ir:diag:1", "ir:random:1.5", "usd:maybe:1", "none:1"])
def test_bad_attack_specs(spec):
    with pytest.raises(ValueError):
        parse_attack(spec)
