"""Eavesdropper strategies on the forward (Bob->Alice) and backward legs.

Text form of a strategy::

    none | ir:random|plus|cross:FRACTION | usd:block|pass:FRACTION

Every attack call consumes one "does Eve act" variate, whatever the strategy,
so that variate streams stay aligned across configurations.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .qstate import TOL, Basis, QubitState, born_probability, measure, prepare


class Leg(enum.Enum):
    FORWARD = "fwd"
    BACKWARD = "bwd"


class BasisPolicy(enum.Enum):
    RANDOM = "random"
    PLUS = "plus"
    CROSS = "cross"


class Action(enum.Enum):
    PASSED = "passed"
    MEASURED = "measured"
    CONCLUSIVE = "conclusive"
    INCONCLUSIVE = "inconclusive"
    BLOCKED = "blocked"


@dataclass(frozen=True)
class NoAttack:
    fraction = 0.0

    def to_spec(self) -> str:
        return "none"


@dataclass(frozen=True)
class InterceptResend:
    basis_policy: BasisPolicy = BasisPolicy.RANDOM
    fraction: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError(f"attack fraction must lie in [0, 1], got {self.fraction!r}")
        object.__setattr__(self, "fraction", float(self.fraction))

    def to_spec(self) -> str:
        return f"ir:{self.basis_policy.value}:{self.fraction!r}"


@dataclass(frozen=True)
class OpaqueUSD:
    block_inconclusive: bool = True
    fraction: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError(f"attack fraction must lie in [0, 1], got {self.fraction!r}")
        object.__setattr__(self, "fraction", float(self.fraction))

    def to_spec(self) -> str:
        mode = "block" if self.block_inconclusive else "pass"
        return f"usd:{mode}:{self.fraction!r}"


AttackStrategy = Union[NoAttack, InterceptResend, OpaqueUSD]


def parse_attack(spec: str) -> AttackStrategy:
    parts = spec.strip().lower().split(":")
    try:
        if parts == ["none"]:
            return NoAttack()
        if parts[0] == "ir" and len(parts) == 3:
            return InterceptResend(BasisPolicy(parts[1]), float(parts[2]))
        if parts[0] == "usd" and len(parts) == 3 and parts[1] in ("block", "pass"):
            return OpaqueUSD(parts[1] == "block", float(parts[2]))
    except ValueError as exc:
        raise ValueError(f"bad attack spec {spec!r}: {exc}") from None
    raise ValueError(f"bad attack spec {spec!r}; expected none | ir:POLICY:F | usd:block|pass:F")


# -- unambiguous discrimination of |H> versus |u> ---------------------------

@dataclass(frozen=True)
class USDPovm:
    e_h: np.ndarray
    e_u: np.ndarray
    e_inconclusive: np.ndarray
    # Kraus operator sqrt(E_inconclusive) for the pass-through update
    k_inconclusive: np.ndarray


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    lam, vecs = np.linalg.eigh(m)
    return (vecs * np.sqrt(np.clip(lam, 0.0, None))) @ vecs.conj().T


def build_usd_povm() -> USDPovm:
    """Optimal USD for equiprobable |H>, |u>; conclusive rate 1 - <H|u>."""
    overlap = 1.0 / math.sqrt(2.0)
    c = 1.0 / (1.0 + overlap)
    e_h = c * prepare(Basis.CROSS, 1).rho  # orthogonal to |u>
    e_u = c * prepare(Basis.PLUS, 1).rho  # orthogonal to |H>
    e_inc = np.eye(2, dtype=complex) - e_h - e_u
    return USDPovm(e_h, e_u, e_inc, _psd_sqrt(e_inc))


USD_POVM = build_usd_povm()

# conclusive label -> (basis, bit) of the identified state
USD_LABELS = {"H": (Basis.PLUS, 0), "u": (Basis.CROSS, 0)}


def usd_outcome_probabilities(state: QubitState, povm: USDPovm = USD_POVM) -> tuple[float, float, float]:
    p_h = max(float(np.trace(povm.e_h @ state.rho).real), 0.0)
    p_u = max(float(np.trace(povm.e_u @ state.rho).real), 0.0)
    return p_h, p_u, max(1.0 - p_h - p_u, 0.0)


def _inconclusive_update(state: QubitState, p_inc: float) -> QubitState:
    k = USD_POVM.k_inconclusive
    rho = k @ state.rho @ k.conj().T / p_inc
    return QubitState(0.5 * (rho + rho.conj().T))


# -- Eve's memory -------------------------------------------------------------

@dataclass
class EveRecord:
    position: int
    leg: Leg
    action: Action
    basis: Optional[Basis] = None
    bit: Optional[int] = None
    label: Optional[str] = None
    message_guess: Optional[int] = None

    def to_event(self) -> dict:
        ev = {"leg": self.leg.value, "pos": self.position, "action": self.action.value}
        if self.basis is not None:
            ev["basis"] = self.basis.value
            ev["bit"] = self.bit
        if self.label is not None:
            ev["label"] = self.label
        if self.message_guess is not None:
            ev["guess"] = self.message_guess
        return ev


class EveMemory:
    """Per-session record of what Eve did and learned, at most one per (leg, position)."""

    def __init__(self) -> None:
        self.records: dict[tuple[Leg, int], EveRecord] = {}

    def add(self, record: EveRecord) -> None:
        key = (record.leg, record.position)
        if key in self.records:
            raise ValueError(f"duplicate Eve record for {key}")
        self.records[key] = record

    def get(self, leg: Leg, position: int) -> Optional[EveRecord]:
        return self.records.get((leg, position))

    def guess(self, position: int) -> Optional[int]:
        rec = self.records.get((Leg.BACKWARD, position))
        return None if rec is None else rec.message_guess

    def __len__(self) -> int:
        return len(self.records)


def _policy_basis(policy: BasisPolicy, rng) -> Basis:
    if policy is BasisPolicy.PLUS:
        return Basis.PLUS
    if policy is BasisPolicy.CROSS:
        return Basis.CROSS
    return Basis.PLUS if rng.uniform() < 0.5 else Basis.CROSS


def attack_forward(photon: QubitState, position: int, strategy: AttackStrategy,
                   memory: EveMemory, rng) -> Optional[QubitState]:
    """Eve's action on a photon travelling to Alice; ``None`` means she blocked it."""
    acts = rng.uniform() < strategy.fraction
    if isinstance(strategy, NoAttack):
        return photon
    if not acts:
        memory.add(EveRecord(position, Leg.FORWARD, Action.PASSED))
        return photon

    if isinstance(strategy, InterceptResend):
        basis = _policy_basis(strategy.basis_policy, rng)
        bit, collapsed = measure(photon, basis, rng.uniform())
        memory.add(EveRecord(position, Leg.FORWARD, Action.MEASURED, basis, bit))
        return collapsed

    p_h, p_u, p_inc = usd_outcome_probabilities(photon)
    r = rng.uniform()
    if r < p_h + p_u:
        label = "H" if r < p_h else "u"
        basis, bit = USD_LABELS[label]
        memory.add(EveRecord(position, Leg.FORWARD, Action.CONCLUSIVE, basis, bit, label=label))
        return prepare(basis, bit)
    if strategy.block_inconclusive:
        memory.add(EveRecord(position, Leg.FORWARD, Action.BLOCKED))
        return None
    memory.add(EveRecord(position, Leg.FORWARD, Action.INCONCLUSIVE))
    return _inconclusive_update(photon, p_inc)


def attack_backward(photon: QubitState, position: int, strategy: AttackStrategy,
                    memory: EveMemory, rng) -> Optional[QubitState]:
    """Eve's action on an encoded photon travelling back to Bob.

    Where Eve holds a forward measurement or conclusive identification, she
    measures in that basis and guesses the message bit as forward bit XOR
    backward bit. Such positions are always measured, regardless of fraction.
    """
    acts = rng.uniform() < strategy.fraction
    if isinstance(strategy, NoAttack):
        return photon

    fwd = memory.get(Leg.FORWARD, position)
    if fwd is not None and fwd.action in (Action.MEASURED, Action.CONCLUSIVE):
        bit, collapsed = measure(photon, fwd.basis, rng.uniform())
        memory.add(EveRecord(position, Leg.BACKWARD, Action.MEASURED, fwd.basis, bit,
                             message_guess=fwd.bit ^ bit))
        return collapsed

    if isinstance(strategy, InterceptResend) and acts:
        basis = _policy_basis(strategy.basis_policy, rng)
        bit, collapsed = measure(photon, basis, rng.uniform())
        memory.add(EveRecord(position, Leg.BACKWARD, Action.MEASURED, basis, bit))
        return collapsed

    memory.add(EveRecord(position, Leg.BACKWARD, Action.PASSED))
    return photon


def forward_branches(photon: QubitState, strategy: AttackStrategy) -> list[tuple[float, Optional[QubitState]]]:
    """Exact (probability, outgoing state or None) branches of a forward attack."""
    if isinstance(strategy, NoAttack):
        return [(1.0, photon)]
    f = strategy.fraction
    out: list[tuple[float, Optional[QubitState]]] = [(1.0 - f, photon)] if f < 1.0 else []
    if f == 0.0:
        return out
    if isinstance(strategy, InterceptResend):
        if strategy.basis_policy is BasisPolicy.RANDOM:
            bases = [(0.5, Basis.PLUS), (0.5, Basis.CROSS)]
        else:
            bases = [(1.0, Basis.PLUS if strategy.basis_policy is BasisPolicy.PLUS else Basis.CROSS)]
        for pb, basis in bases:
            for bit in (0, 1):
                p = born_probability(photon, basis, bit)
                if p > TOL:
                    out.append((f * pb * p, prepare(basis, bit)))
        return out
    p_h, p_u, p_inc = usd_outcome_probabilities(photon)
    out.append((f * p_h, prepare(Basis.PLUS, 0)))
    out.append((f * p_u, prepare(Basis.CROSS, 0)))
    if p_inc > TOL:
        out.append((f * p_inc, None if strategy.block_inconclusive else _inconclusive_update(photon, p_inc)))
    return out
