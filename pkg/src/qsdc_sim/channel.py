"""Per-photon quantum channel models: ideal, depolarizing, lossy, and chains.

A transmission returns the delivered state, or ``None`` when the photon is
lost. Text form (used by configs and flags)::

    ideal | depol:P | loss:ETA | STAGE+STAGE+...

ETA is the probability that a photon is lost.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .qstate import InvalidStateError, QubitState

_HALF_I = np.eye(2, dtype=complex) / 2


def _unit(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
    return value


@dataclass(frozen=True)
class Ideal:
    def to_spec(self) -> str:
        return "ideal"


@dataclass(frozen=True)
class Depolarizing:
    p: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "p", _unit("depolarizing p", self.p))

    def to_spec(self) -> str:
        return f"depol:{self.p!r}"


@dataclass(frozen=True)
class Lossy:
    eta: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "eta", _unit("loss eta", self.eta))

    def to_spec(self) -> str:
        return f"loss:{self.eta!r}"


@dataclass(frozen=True)
class Composite:
    stages: tuple

    def __post_init__(self) -> None:
        flat: list = []
        for stage in self.stages:
            if isinstance(stage, Composite):
                flat.extend(stage.stages)
            elif isinstance(stage, (Ideal, Depolarizing, Lossy)):
                flat.append(stage)
            else:
                raise TypeError(f"not a channel model: {stage!r}")
        if not flat:
            raise ValueError("composite channel needs at least one stage")
        object.__setattr__(self, "stages", tuple(flat))

    def to_spec(self) -> str:
        return "+".join(s.to_spec() for s in self.stages)


ChannelModel = Union[Ideal, Depolarizing, Lossy, Composite]


def parse_channel(spec: str) -> ChannelModel:
    parts = [p.strip() for p in spec.strip().lower().split("+")]
    stages: list[ChannelModel] = []
    for part in parts:
        name, _, arg = part.partition(":")
        try:
            if name == "ideal" and not arg:
                stages.append(Ideal())
            elif name == "depol":
                stages.append(Depolarizing(float(arg)))
            elif name == "loss":
                stages.append(Lossy(float(arg)))
            else:
                raise ValueError("unknown stage")
        except ValueError as exc:
            raise ValueError(f"bad channel spec {spec!r} at {part!r}: {exc}") from None
    return stages[0] if len(stages) == 1 else Composite(tuple(stages))


def stages_of(model: ChannelModel) -> tuple:
    return model.stages if isinstance(model, Composite) else (model,)


def transmit(state: QubitState, model: ChannelModel, rng) -> Optional[QubitState]:
    """Send one photon through ``model``; ``None`` means the photon was lost.

    Depolarizing stages act deterministically on the density matrix. Each
    lossy stage reached consumes exactly one variate.
    """
    if not isinstance(state, QubitState):
        raise InvalidStateError(f"transmit needs a QubitState, got {type(state).__name__}")
    for stage in stages_of(model):
        if isinstance(stage, Depolarizing):
            if stage.p:
                state = QubitState((1.0 - stage.p) * state.rho + stage.p * _HALF_I)
        elif isinstance(stage, Lossy):
            if rng.uniform() < stage.eta:
                return None
    return state


def has_loss(model: ChannelModel) -> bool:
    return any(isinstance(s, Lossy) for s in stages_of(model))


def survival_probability(model: ChannelModel) -> float:
    out = 1.0
    for stage in stages_of(model):
        if isinstance(stage, Lossy):
            out *= 1.0 - stage.eta
    return out


def without_loss(model: ChannelModel) -> ChannelModel:
    kept = [s for s in stages_of(model) if not isinstance(s, Lossy)]
    if not kept:
        return Ideal()
    return kept[0] if len(kept) == 1 else Composite(tuple(kept))


def matched_basis_error_rate(model: ChannelModel) -> float:
    """Flip probability for a photon prepared and measured in the same basis."""
    if has_loss(model):
        raise ValueError("matched-basis error rate is undefined for lossy channels")
    err = 0.0
    for stage in stages_of(model):
        if isinstance(stage, Depolarizing):
            q = stage.p / 2
            err = err * (1 - q) + q * (1 - err)
    return err
