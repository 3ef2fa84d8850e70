"""Monte Carlo ensembles of sessions, their summaries, and theoretical references."""

from __future__ import annotations

import math
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from . import __version__
from . import channel as ch
from .adversary import Action, Leg, forward_branches
from .protocol import (ALLOWED_PREPARATIONS, SessionConfig, SessionOutcome, StateSet, Status,
                       bits_to_str, run_session)
from .qstate import Ensemble, born_probability, holevo_bound, prepare, source_entropy
from .rng import derive_seed

REPORT_FORMAT = "qsdc-report/1"
GUESSES = (0, 1, None)


@dataclass(frozen=True)
class TrialSummary:
    """Flat per-trial record; one row of trials.csv."""

    trial: int
    seed: int
    status: str
    reason: str
    forward_lost: int
    backward_lost: int
    checked: int
    phase1_compared: int
    phase1_mismatches: int
    phase1_discarded: int
    phase1_error_rate: Optional[float]
    phase2_compared: int
    phase2_mismatches: int
    phase2_error_rate: Optional[float]
    message_bits: int
    message_bit_errors: int
    erasures: int
    eve_usd_attempts: int
    eve_conclusive: int
    # joint counts of (true message bit, Eve output) over encoded message positions
    t0_g0: int
    t0_g1: int
    t0_abstain: int
    t1_g0: int
    t1_g1: int
    t1_abstain: int
    conclusive_guesses: int
    conclusive_correct: int
    ordering_violations: int
    decoded: str

    @classmethod
    def from_outcome(cls, trial: int, outcome: SessionOutcome) -> "TrialSummary":
        cfg, eve = outcome.config, outcome.eve
        joint = {(t, g): 0 for t in (0, 1) for g in GUESSES}
        conclusive_guesses = conclusive_correct = 0
        if outcome.message_positions:
            for pos, bit in zip(outcome.message_positions, cfg.message):
                guess = eve.guess(pos)
                joint[bit, guess] += 1
                fwd = eve.get(Leg.FORWARD, pos)
                if guess is not None and fwd is not None and fwd.action is Action.CONCLUSIVE:
                    conclusive_guesses += 1
                    conclusive_correct += guess == bit
        usd = conclusive = 0
        for (leg, _), rec in eve.records.items():
            if leg is Leg.FORWARD and rec.action in (Action.CONCLUSIVE, Action.INCONCLUSIVE, Action.BLOCKED):
                usd += 1
                conclusive += rec.action is Action.CONCLUSIVE
        msg_bits = errors = erasures = 0
        if outcome.decoded_message is not None:
            msg_bits = len(cfg.message)
            for sent, got in zip(cfg.message, outcome.decoded_message):
                if got is None:
                    erasures += 1
                else:
                    errors += got != sent
        p1, p2 = outcome.phase1, outcome.phase2
        return cls(
            trial=trial, seed=cfg.seed, status=outcome.status.value, reason=outcome.reason,
            forward_lost=outcome.forward_lost, backward_lost=outcome.backward_lost,
            checked=outcome.checked,
            phase1_compared=p1.compared if p1 else 0,
            phase1_mismatches=p1.mismatches if p1 else 0,
            phase1_discarded=p1.discarded if p1 else outcome.checked,
            phase1_error_rate=outcome.phase1_error_rate,
            phase2_compared=p2.compared if p2 else 0,
            phase2_mismatches=p2.mismatches if p2 else 0,
            phase2_error_rate=outcome.phase2_error_rate,
            message_bits=msg_bits, message_bit_errors=errors, erasures=erasures,
            eve_usd_attempts=usd, eve_conclusive=conclusive,
            t0_g0=joint[0, 0], t0_g1=joint[0, 1], t0_abstain=joint[0, None],
            t1_g0=joint[1, 0], t1_g1=joint[1, 1], t1_abstain=joint[1, None],
            conclusive_guesses=conclusive_guesses, conclusive_correct=conclusive_correct,
            ordering_violations=outcome.transcript.ordering_violations(),
            decoded="" if outcome.decoded_message is None else bits_to_str(outcome.decoded_message),
        )

    def joint(self) -> dict:
        return {(0, 0): self.t0_g0, (0, 1): self.t0_g1, (0, None): self.t0_abstain,
                (1, 0): self.t1_g0, (1, 1): self.t1_g1, (1, None): self.t1_abstain}

    def row(self) -> dict:
        return {k: ("" if v is None else repr(v) if isinstance(v, float) else v)
                for k, v in asdict(self).items()}

    @classmethod
    def from_row(cls, row: Mapping[str, str]) -> "TrialSummary":
        kw = {}
        for f in fields(cls):
            raw = row[f.name]
            if f.name in ("status", "reason", "decoded"):
                kw[f.name] = raw
            elif f.name.endswith("error_rate"):
                kw[f.name] = None if raw == "" else float(raw)
            else:
                kw[f.name] = int(raw)
        return cls(**kw)


CSV_COLUMNS = tuple(f.name for f in fields(TrialSummary))


@dataclass
class TrialEnsemble:
    config: SessionConfig
    trial_count: int
    trials: list[TrialSummary]
    transcripts: Optional[list[str]] = field(default=None, repr=False)


def trial_config(template: SessionConfig, index: int) -> SessionConfig:
    return replace(template, seed=derive_seed(template.seed, index))


def _run_trial(job: tuple[SessionConfig, int, bool]) -> tuple[int, TrialSummary, Optional[str]]:
    template, index, keep = job
    outcome = run_session(trial_config(template, index))
    text = outcome.transcript.serialize() if keep else None
    return index, TrialSummary.from_outcome(index, outcome), text


def run_ensemble(template: SessionConfig, trial_count: int, workers: int = 1,
                 keep_transcripts: bool = False) -> TrialEnsemble:
    """Run ``trial_count`` sessions; trial i is seeded with derive_seed(master, i)."""
    if trial_count < 1:
        raise ValueError(f"trial_count must be >= 1, got {trial_count}")
    template.validate()
    jobs = [(template, i, keep_transcripts) for i in range(trial_count)]
    if workers > 1 and trial_count > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_trial, jobs, chunksize=max(1, trial_count // (4 * workers))))
    else:
        results = [_run_trial(job) for job in jobs]
    results.sort(key=lambda r: r[0])
    return TrialEnsemble(
        template, trial_count, [r[1] for r in results],
        [r[2] for r in results] if keep_transcripts else None)


# -- statistics ----------------------------------------------------------------

def wilson_interval(successes: int, total: int, alpha: float = 0.05) -> tuple[Optional[float], Optional[float]]:
    if total == 0:
        return None, None
    from statsmodels.stats.proportion import proportion_confint

    lo, hi = proportion_confint(successes, total, alpha=alpha, method="wilson")
    return float(lo), float(hi)


def empirical_mutual_information(joint: Mapping[tuple[int, Optional[int]], int]) -> float:
    """Plug-in I(true bit; Eve output) in bits; abstention is its own output symbol."""
    total = sum(joint.values())
    if total == 0:
        raise ValueError("no encoded bits to evaluate")
    px: dict = {}
    py: dict = {}
    for (x, y), c in joint.items():
        px[x] = px.get(x, 0) + c
        py[y] = py.get(y, 0) + c
    mi = 0.0
    for (x, y), c in joint.items():
        if c:
            mi += c / total * math.log2(c * total / (px[x] * py[y]))
    return min(max(mi, 0.0), 1.0)


def detection_curve(ms: Iterable[int], q: float) -> list[tuple[int, float]]:
    """Probability that at least one of m matched comparisons shows an error."""
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1], got {q!r}")
    return [(m, 1.0 - (1.0 - q) ** m) for m in ms]


def preparation_ensemble(state_set: StateSet) -> Ensemble:
    allowed = ALLOWED_PREPARATIONS[state_set]
    return Ensemble(tuple((1.0 / len(allowed), prepare(b, v)) for b, v in allowed))


def forward_check_reference(config: SessionConfig) -> tuple[float, float]:
    """Exact (matched-basis error rate, delivery rate) of the forward leg.

    Enumerates preparations x forward attack branches x channel noise; the
    error rate is conditioned on delivery.
    """
    allowed = ALLOWED_PREPARATIONS[config.state_set]
    survival = ch.survival_probability(config.forward_channel)
    noise = ch.without_loss(config.forward_channel)
    weight = err = 0.0
    for basis, bit in allowed:
        for p, out in forward_branches(prepare(basis, bit), config.forward_attack):
            if out is None or p == 0.0:
                continue
            w = p * survival / len(allowed)
            weight += w
            err += w * born_probability(ch.transmit(out, noise, None), basis, 1 - bit)
    return (err / weight if weight else float("nan")), weight


def theoretical_references(config: SessionConfig, max_m: int = 8) -> dict:
    ens = preparation_ensemble(config.state_set)
    chi, h_b = holevo_bound(ens), source_entropy(ens)
    if chi > h_b + 1e-9:
        raise AssertionError(f"Holevo quantity {chi} exceeds source entropy {h_b}")
    if config.state_set is StateSet.FOUR and not chi < h_b:
        raise AssertionError("four-state ensemble must satisfy holevo_chi < H(B)")
    q, delivery = forward_check_reference(config)
    return {
        "state_set": config.state_set.value,
        "holevo_chi": chi,
        "source_entropy": h_b,
        "matched_basis_error_rate": {
            "forward": ch.matched_basis_error_rate(ch.without_loss(config.forward_channel)),
            "backward": ch.matched_basis_error_rate(ch.without_loss(config.backward_channel)),
        },
        "forward_check_error_rate": q,
        "forward_delivery_rate": delivery,
        "detection_curve": [{"m": m, "p": p} for m, p in detection_curve(range(1, max_m + 1), q)],
    }


# -- report --------------------------------------------------------------------

def _rate(k: int, n: int) -> dict:
    lo, hi = wilson_interval(k, n)
    return {"rate": k / n if n else None, "ci_low": lo, "ci_high": hi, "count": k, "total": n}


def _ratio(k: int, n: int) -> Optional[float]:
    return k / n if n else None


def aggregate(trials: Sequence[TrialSummary]) -> dict:
    """Sum every integer column; order-independent."""
    totals: dict = {}
    for t in trials:
        for k, v in asdict(t).items():
            if isinstance(v, int) and not isinstance(v, bool) and k not in ("trial", "seed"):
                totals[k] = totals.get(k, 0) + v
    return totals


def empirical_block(trials: Sequence[TrialSummary]) -> dict:
    tot = aggregate(trials)
    n = len(trials)
    statuses = [t.status for t in trials]
    a1 = statuses.count(Status.ABORTED_PHASE1.value)
    a2 = statuses.count(Status.ABORTED_PHASE2.value)
    joint: dict = {}
    for t in trials:
        for key, c in t.joint().items():
            joint[key] = joint.get(key, 0) + c
    encoded_bits = sum(joint.values())
    guesses = encoded_bits - joint[0, None] - joint[1, None]
    correct = joint[0, 0] + joint[1, 1]
    p1 = _rate(tot.get("phase1_mismatches", 0), tot.get("phase1_compared", 0))
    p2 = _rate(tot.get("phase2_mismatches", 0), tot.get("phase2_compared", 0))
    return {
        "trials": n,
        "completed": statuses.count(Status.COMPLETED.value),
        "aborted_phase1": a1,
        "aborted_phase2": a2,
        "phase1_error": p1,
        "phase2_error": p2,
        "abort_rate_phase1": _rate(a1, n),
        # among sessions that reached phase 2
        "abort_rate_phase2": _rate(a2, n - a1),
        "basis_discard_rate": _ratio(tot.get("phase1_discarded", 0), tot.get("checked", 0)),
        "message_bit_error_rate": _ratio(tot.get("message_bit_errors", 0),
                                         tot.get("message_bits", 0) - tot.get("erasures", 0)),
        "erasure_rate": _ratio(tot.get("erasures", 0), tot.get("message_bits", 0)),
        "eve_guess_accuracy": _ratio(correct, guesses),
        "eve_guesses_per_message_bit": _ratio(guesses, encoded_bits),
        "eve_conclusive_accuracy": _ratio(tot.get("conclusive_correct", 0), tot.get("conclusive_guesses", 0)),
        "usd_conclusive_rate": _ratio(tot.get("eve_conclusive", 0), tot.get("eve_usd_attempts", 0)),
        "empirical_mutual_information": empirical_mutual_information(joint) if encoded_bits else None,
        "ordering_violations": tot.get("ordering_violations", 0),
    }


def build_report(ensemble: TrialEnsemble, max_m: int = 8) -> dict:
    """Pure function of the ensemble (plus library versions)."""
    theory = theoretical_references(ensemble.config, max_m)
    return {
        "format": REPORT_FORMAT,
        "empirical": empirical_block(ensemble.trials),
        "theoretical": theory,
        "provenance": {
            "config": ensemble.config.to_dict(),
            "seed": ensemble.config.seed,
            "trials": ensemble.trial_count,
            "versions": {"qsdc_sim": __version__, "python": platform.python_version(),
                         "numpy": np.__version__},
        },
    }
