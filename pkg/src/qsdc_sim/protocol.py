"""One session of the two-phase direct communication protocol.

Phase 1: Bob prepares a batch of single photons in random
states and sends it to Alice, who measures a random check subset in random
bases and announces positions, bases and results. Bob compares the
matched-basis samples with his preparation records and decides whether the
channel is clean.

Phase 2: Alice encodes the remaining
photons with I (bit 0) or U = i*sigma_y (bit 1), mixing in random check bits,
and sends them back. Bob measures each photon in its preparation basis, and
the announced check bits give a second error estimate.

Party functions only receive their legal view: Alice never sees Bob's
preparation records, neither party sees Eve's memory.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from . import channel as ch
from .adversary import (AttackStrategy, EveMemory, Leg, NoAttack, attack_backward,
                        attack_forward, parse_attack)
from .qstate import Basis, EncodingOp, QubitState, apply_encoding, measure, prepare
from .rng import ReplayExhausted, ReplayVariates, Variates
from .transcript import FORMAT, Transcript, TranscriptParseError, parse


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending setting."""

    def __init__(self, key: str, message: str) -> None:
        super().__init__(f"{key}: {message}")
        self.key = key


class CapacityError(ConfigError):
    pass


class InconclusiveCheckError(RuntimeError):
    """No usable comparisons; the caller must abort."""


class StateSet(enum.Enum):
    FOUR = "four"
    CAI2 = "cai2"


ALLOWED_PREPARATIONS = {
    StateSet.FOUR: ((Basis.PLUS, 0), (Basis.PLUS, 1), (Basis.CROSS, 0), (Basis.CROSS, 1)),
    # |H> and |u> only
    StateSet.CAI2: ((Basis.PLUS, 0), (Basis.CROSS, 0)),
}


class Decision(enum.Enum):
    CONTINUE = "continue"
    ABORT = "abort"


class Status(enum.Enum):
    ABORTED_PHASE1 = "aborted_phase1"
    ABORTED_PHASE2 = "aborted_phase2"
    COMPLETED = "completed"


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def bits_from_str(text: str) -> tuple[int, ...]:
    text = text.strip()
    if any(c not in "01" for c in text):
        raise ValueError(f"message must be a bit string, got {text!r}")
    return tuple(int(c) for c in text)


def bits_to_str(bits: Sequence[Optional[int]]) -> str:
    return "".join("-" if b is None else str(b) for b in bits)


@dataclass(frozen=True)
class SessionConfig:
    n: int = 4096
    check_fraction_phase1: float = 0.5
    check_fraction_phase2: float = 0.1
    error_threshold: float = 0.05
    state_set: StateSet = StateSet.FOUR
    message: tuple[int, ...] = ()
    forward_channel: ch.ChannelModel = field(default_factory=ch.Ideal)
    backward_channel: ch.ChannelModel = field(default_factory=ch.Ideal)
    forward_attack: AttackStrategy = field(default_factory=NoAttack)
    backward_attack: AttackStrategy = field(default_factory=NoAttack)
    seed: int = 42
    # Bob decides on at most this many matched comparisons (None = all)
    max_comparisons: Optional[int] = None

    def capacity(self) -> int:
        expected = ((1 - self.check_fraction_phase1) * (1 - self.check_fraction_phase2)
                    * self.n * ch.survival_probability(self.forward_channel))
        return int(math.floor(expected + 1e-9))

    def validate(self) -> None:
        if not isinstance(self.n, int) or self.n < 1:
            raise ConfigError("n", f"batch size must be a positive integer, got {self.n!r}")
        for key, value in (("check_frac1", self.check_fraction_phase1),
                           ("check_frac2", self.check_fraction_phase2)):
            if not 0.0 < value < 1.0:
                raise ConfigError(key, f"must lie strictly between 0 and 1, got {value!r}")
        if not 0.0 <= self.error_threshold <= 1.0:
            raise ConfigError("threshold", f"must lie in [0, 1], got {self.error_threshold!r}")
        if any(b not in (0, 1) for b in self.message):
            raise ConfigError("message", "message must contain only bits 0 and 1")
        if self.max_comparisons is not None and self.max_comparisons < 1:
            raise ConfigError("max_comparisons", f"must be >= 1, got {self.max_comparisons!r}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed", "seed must be a 64-bit unsigned value")
        if len(self.message) > self.capacity():
            raise CapacityError(
                "message",
                f"{len(self.message)} bits exceed batch capacity {self.capacity()} "
                f"(n={self.n}, check fractions {self.check_fraction_phase1}/"
                f"{self.check_fraction_phase2}, forward survival "
                f"{ch.survival_probability(self.forward_channel)!r})")

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "check_frac1": self.check_fraction_phase1,
            "check_frac2": self.check_fraction_phase2,
            "threshold": self.error_threshold,
            "state_set": self.state_set.value,
            "message": bits_to_str(self.message),
            "forward_channel": self.forward_channel.to_spec(),
            "backward_channel": self.backward_channel.to_spec(),
            "forward_attack": self.forward_attack.to_spec(),
            "backward_attack": self.backward_attack.to_spec(),
            "seed": self.seed,
            "max_comparisons": self.max_comparisons,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "SessionConfig":
        return cls(
            n=d["n"],
            check_fraction_phase1=float(d["check_frac1"]),
            check_fraction_phase2=float(d["check_frac2"]),
            error_threshold=float(d["threshold"]),
            state_set=StateSet(d["state_set"]),
            message=bits_from_str(d["message"]),
            forward_channel=ch.parse_channel(d["forward_channel"]),
            backward_channel=ch.parse_channel(d["backward_channel"]),
            forward_attack=parse_attack(d["forward_attack"]),
            backward_attack=parse_attack(d["backward_attack"]),
            seed=int(d["seed"]),
            max_comparisons=d.get("max_comparisons"),
        )


@dataclass(frozen=True)
class PhotonRecord:
    position: int
    basis: Basis
    bit: int


@dataclass(frozen=True)
class BatchPartition:
    a_positions: frozenset
    s_positions: frozenset
    b_positions: frozenset

    def __post_init__(self) -> None:
        if not self.s_positions <= self.a_positions:
            raise ValueError("check subset is not contained in the A-batch")
        if self.b_positions != self.a_positions - self.s_positions:
            raise ValueError("B-batch must equal A - S")

    @classmethod
    def from_check(cls, a_positions, s_positions) -> "BatchPartition":
        a, s = frozenset(a_positions), frozenset(s_positions)
        return cls(a, s, a - s)


@dataclass(frozen=True)
class CheckAnnouncement:
    entries: tuple[tuple[int, Basis, int], ...]
    lost_positions: frozenset = frozenset()

    def __post_init__(self) -> None:
        if self.lost_positions & {pos for pos, _, _ in self.entries}:
            raise ValueError("announced check positions overlap lost positions")


@dataclass(frozen=True)
class ErrorEstimate:
    error_rate: float
    compared: int
    mismatches: int
    discarded: int


@dataclass(frozen=True)
class Encoding:
    encoded: dict  # position -> QubitState
    checks: tuple[tuple[int, int], ...]  # (position, coded bit)
    assignment: dict  # position -> bit
    message_positions: tuple[int, ...]


@dataclass(frozen=True)
class Phase2Check:
    error_rate: Optional[float]
    compared: int
    mismatches: int
    decision: Decision


@dataclass
class SessionOutcome:
    status: Status
    reason: str
    phase1_error_rate: Optional[float]
    phase2_error_rate: Optional[float]
    decoded_message: Optional[tuple[Optional[int], ...]]
    transcript: Transcript
    config: SessionConfig
    phase1: Optional[ErrorEstimate] = None
    phase2: Optional[Phase2Check] = None
    checked: int = 0
    forward_lost: int = 0
    backward_lost: int = 0
    message_positions: tuple[int, ...] = ()
    eve: EveMemory = field(default_factory=EveMemory)

    def __post_init__(self) -> None:
        if (self.decoded_message is not None) != (self.status is Status.COMPLETED):
            raise ValueError("decoded message is present iff the session completed")


# -- Bob ------------------------------------------------------------------------

def bob_prepare_batch(n: int, state_set: StateSet, rng, log: Optional[Transcript] = None
                      ) -> tuple[list[PhotonRecord], list[QubitState]]:
    """Random preparations, uniform over the allowed states of ``state_set``."""
    if n < 1:
        raise ConfigError("n", f"batch size must be positive, got {n}")
    allowed = ALLOWED_PREPARATIONS[state_set]
    records, states = [], []
    for pos in range(n):
        basis, bit = allowed[rng.index(len(allowed))]
        records.append(PhotonRecord(pos, basis, bit))
        states.append(prepare(basis, bit))
        if log is not None:
            log.emit("prep", pos=pos, basis=basis.value, bit=bit)
    return records, states


def bob_estimate_error(announcement: CheckAnnouncement, records: Mapping[int, PhotonRecord],
                       max_comparisons: Optional[int] = None) -> ErrorEstimate:
    """Error rate over announced samples whose basis matches the preparation.

    Mismatched-basis samples are discarded. With ``max_comparisons`` set only
    the first that many matched samples (by position) are used.
    """
    compared = mismatches = discarded = 0
    for pos, basis, result in sorted(announcement.entries, key=lambda e: e[0]):
        rec = records[pos]
        if basis is not rec.basis:
            discarded += 1
            continue
        if max_comparisons is not None and compared >= max_comparisons:
            continue
        compared += 1
        mismatches += result != rec.bit
    if compared == 0:
        raise InconclusiveCheckError(f"no matched-basis comparisons ({discarded} discarded)")
    return ErrorEstimate(mismatches / compared, compared, mismatches, discarded)


def decide_continue(error_rate: float, threshold: float) -> Decision:
    return Decision.CONTINUE if error_rate <= threshold else Decision.ABORT


def bob_decode(returned: Mapping[int, Optional[QubitState]], records: Mapping[int, PhotonRecord],
               rng, log: Optional[Transcript] = None) -> dict[int, Optional[int]]:
    """Measure each returned photon in its preparation basis; bit = prepared XOR measured."""
    decoded: dict[int, Optional[int]] = {}
    for pos in sorted(returned):
        state = returned[pos]
        if state is None:
            decoded[pos] = None
        else:
            rec = records[pos]
            measured, _ = measure(state, rec.basis, rng.uniform())
            decoded[pos] = rec.bit ^ measured
        if log is not None:
            log.emit("decode", pos=pos, bit=decoded[pos])
    return decoded


def bob_extract_message(b_positions, check_positions, decoded: Mapping[int, Optional[int]],
                        length: int) -> tuple[Optional[int], ...]:
    slots = sorted(set(b_positions) - set(check_positions))[:length]
    return tuple(decoded[p] for p in slots)


# -- Alice ---------------------------------------------------------------------

def alice_sample_check(delivered_positions: Sequence[int], check_fraction: float, rng) -> list[int]:
    if not delivered_positions:
        raise ValueError("no delivered photons to sample from")
    k = max(1, round_half_up(check_fraction * len(delivered_positions)))
    return rng.sample(sorted(delivered_positions), min(k, len(delivered_positions)))


def alice_measure_checks(s_positions: Sequence[int], photons: Mapping[int, QubitState], rng,
                         lost_positions=(), log: Optional[Transcript] = None) -> CheckAnnouncement:
    if not s_positions:
        raise ValueError("empty check subset")
    entries = []
    for pos in s_positions:
        basis = Basis.PLUS if rng.uniform() < 0.5 else Basis.CROSS
        result, _ = measure(photons[pos], basis, rng.uniform())
        entries.append((pos, basis, result))
        if log is not None:
            log.emit("check", pos=pos, basis=basis.value, result=result)
    return CheckAnnouncement(tuple(entries), frozenset(lost_positions))


def phase2_check_count(b_size: int, check_fraction: float) -> int:
    return min(b_size, max(1, round_half_up(check_fraction * b_size)))


def alice_encode(b_positions, photons: Mapping[int, QubitState], message: Sequence[int],
                 check_fraction_phase2: float, rng, log: Optional[Transcript] = None) -> Encoding:
    """Encode random check bits, the message (ascending positions) and random padding."""
    b_sorted = sorted(b_positions)
    k = phase2_check_count(len(b_sorted), check_fraction_phase2)
    if not b_sorted or len(b_sorted) - k < len(message):
        raise CapacityError(
            "message", f"{len(message)} bits do not fit in a B-batch of {len(b_sorted)} "
                       f"with {k} check positions")
    check_positions = set(rng.sample(b_sorted, k))
    if log is not None:
        log.emit("sample2", positions=sorted(check_positions))
    slots = [p for p in b_sorted if p not in check_positions]
    message_positions = tuple(slots[:len(message)])
    by_position = dict(zip(message_positions, message))

    encoded, assignment, checks = {}, {}, []
    for pos in b_sorted:
        if pos in by_position:
            bit = by_position[pos]
        else:
            bit = rng.index(2)
            if pos in check_positions:
                checks.append((pos, bit))
        op = EncodingOp.for_bit(bit)
        assignment[pos] = bit
        encoded[pos] = apply_encoding(op, photons[pos])
        if log is not None:
            log.emit("encode", pos=pos, op=op.value)
    return Encoding(encoded, tuple(checks), assignment, message_positions)


def verify_phase2(checks: Sequence[tuple[int, int]], decoded: Mapping[int, Optional[int]],
                  threshold: float) -> Phase2Check:
    compared = mismatches = 0
    for pos, bit in checks:
        got = decoded.get(pos)
        if got is None:
            continue
        compared += 1
        mismatches += got != bit
    if compared == 0:
        return Phase2Check(None, 0, 0, Decision.ABORT)
    rate = mismatches / compared
    return Phase2Check(rate, compared, mismatches, decide_continue(rate, threshold))


# -- session -------------------------------------------------------------------

def run_session(config: SessionConfig, rng=None) -> SessionOutcome:
    """Run both phases; configuration errors surface before any photon is simulated."""
    config.validate()
    rng = Variates(config.seed) if rng is None else rng
    log = Transcript(rng)
    log.emit("header", format=FORMAT, config=config.to_dict())
    eve = EveMemory()

    def finish(status, reason, **kw) -> SessionOutcome:
        return SessionOutcome(status=status, reason=reason, transcript=log, config=config, eve=eve, **kw)

    # phase 1: Bob -> Alice
    records, states = bob_prepare_batch(config.n, config.state_set, rng, log)
    arrived: dict[int, QubitState] = {}
    for rec, state in zip(records, states):
        pos = rec.position
        out = attack_forward(state, pos, config.forward_attack, eve, rng)
        eve_rec = eve.get(Leg.FORWARD, pos)
        if eve_rec is not None:
            log.emit("eve", **eve_rec.to_event())
        if out is not None:
            out = ch.transmit(out, config.forward_channel, rng)
        log.emit("fwd", pos=pos, delivered=out is not None)
        if out is not None:
            arrived[pos] = out
    lost = [p for p in range(config.n) if p not in arrived]

    if not arrived:
        log.emit("decide1", decision=Decision.ABORT.value, reason="all_lost")
        return finish(Status.ABORTED_PHASE1, "all_lost", phase1_error_rate=None,
                      phase2_error_rate=None, decoded_message=None, forward_lost=len(lost))

    s_positions = alice_sample_check(list(arrived), config.check_fraction_phase1, rng)
    log.emit("sample1", positions=s_positions)
    announcement = alice_measure_checks(s_positions, arrived, rng, lost, log)
    log.emit("announce1", count=len(announcement.entries), lost=lost)

    bob_records = {r.position: r for r in records}
    try:
        estimate = bob_estimate_error(announcement, bob_records, config.max_comparisons)
    except InconclusiveCheckError:
        estimate = None
        log.emit("estimate1", error_rate=None, compared=0, mismatches=0,
                 discarded=len(announcement.entries))
    else:
        log.emit("estimate1", error_rate=estimate.error_rate, compared=estimate.compared,
                 mismatches=estimate.mismatches, discarded=estimate.discarded)

    # both parties derive B = A - S from public information
    partition = BatchPartition.from_check(
        set(range(config.n)) - announcement.lost_positions,
        (pos for pos, _, _ in announcement.entries))
    b_sorted = sorted(partition.b_positions)
    log.emit("partition", a=len(partition.a_positions), s=len(partition.s_positions), b=b_sorted)

    if estimate is None:
        reason = "inconclusive"
    elif decide_continue(estimate.error_rate, config.error_threshold) is Decision.ABORT:
        reason = "error_rate"
    elif len(b_sorted) - phase2_check_count(len(b_sorted), config.check_fraction_phase2) < len(config.message) \
            or not b_sorted:
        reason = "capacity"
    else:
        reason = "ok"
    decision = Decision.CONTINUE if reason == "ok" else Decision.ABORT
    log.emit("decide1", decision=decision.value, reason=reason)
    phase1_rate = None if estimate is None else estimate.error_rate
    if decision is Decision.ABORT:
        return finish(Status.ABORTED_PHASE1, reason, phase1_error_rate=phase1_rate,
                      phase2_error_rate=None, decoded_message=None, phase1=estimate,
                      checked=len(announcement.entries), forward_lost=len(lost))

    # phase 2: Alice -> Bob
    enc = alice_encode(b_sorted, arrived, config.message, config.check_fraction_phase2, rng, log)
    returned: dict[int, Optional[QubitState]] = {}
    for pos in b_sorted:
        out = attack_backward(enc.encoded[pos], pos, config.backward_attack, eve, rng)
        eve_rec = eve.get(Leg.BACKWARD, pos)
        if eve_rec is not None:
            log.emit("eve", **eve_rec.to_event())
        if out is not None:
            out = ch.transmit(out, config.backward_channel, rng)
        log.emit("bwd", pos=pos, delivered=out is not None)
        returned[pos] = out
    back_lost = [p for p in b_sorted if returned[p] is None]
    log.emit("receipt", returned=len(b_sorted) - len(back_lost), lost=back_lost)

    decoded = bob_decode(returned, bob_records, rng, log)
    log.emit("announce2", entries=[[p, b] for p, b in enc.checks])
    check = verify_phase2(enc.checks, decoded, config.error_threshold)
    reason2 = "inconclusive" if check.error_rate is None else (
        "ok" if check.decision is Decision.CONTINUE else "error_rate")
    log.emit("verify2", error_rate=check.error_rate, compared=check.compared,
             mismatches=check.mismatches, decision=check.decision.value, reason=reason2)

    common = dict(phase1_error_rate=phase1_rate, phase2_error_rate=check.error_rate,
                  phase1=estimate, phase2=check, checked=len(announcement.entries),
                  forward_lost=len(lost), backward_lost=len(back_lost),
                  message_positions=enc.message_positions)
    if check.decision is Decision.ABORT:
        return finish(Status.ABORTED_PHASE2, reason2, decoded_message=None, **common)

    message = bob_extract_message(b_sorted, [p for p, _ in enc.checks], decoded, len(config.message))
    log.emit("message", bits=bits_to_str(message))
    return finish(Status.COMPLETED, "ok", decoded_message=message, **common)


@dataclass(frozen=True)
class ReplayResult:
    ok: bool
    divergent_event: Optional[int] = None
    detail: str = ""


def replay(text: str) -> ReplayResult:
    """Re-run a serialized session from its recorded variates and compare line by line.

    Raises TranscriptParseError for malformed input. ``divergent_event`` is
    the 0-based index of the first differing event line.
    """
    recorded = parse(text)
    header = recorded.events[0]
    try:
        config = SessionConfig.from_dict(header["config"])
    except (KeyError, ValueError, TypeError) as exc:
        raise TranscriptParseError(1, f"bad header config: {exc}") from None
    rng = ReplayVariates(recorded.variates())
    try:
        rerun = run_session(config, rng).transcript
    except ReplayExhausted as exc:
        return ReplayResult(False, None, str(exc))
    old, new = recorded.lines()[:-1], rerun.lines()[:-1]
    for i, (a, b) in enumerate(zip(old, new)):
        if a != b:
            return ReplayResult(False, i, f"event {i} differs:\n  recorded: {a}\n  replayed: {b}")
    if len(old) != len(new):
        i = min(len(old), len(new))
        return ReplayResult(False, i, f"event count differs: recorded {len(old)}, replayed {len(new)}")
    if rng.remaining:
        return ReplayResult(False, len(old), f"{rng.remaining} recorded variates were not consumed")
    return ReplayResult(True)
