"""Run configuration: YAML file plus command-line overrides.

Keys (flags use the same names with dashes, e.g. ``--check-frac1``)::

    n: 4096                 # photons per batch
    message: "1010"         # bit string; or message_hex: "a5"
    check_frac1: 0.5        # phase-1 check fraction
    check_frac2: 0.1        # phase-2 check fraction
    threshold: 0.05         # abort when error rate exceeds this
    state_set: four         # four | cai2
    forward_channel: ideal  # ideal | depol:P | loss:ETA | chains joined by '+'
    backward_channel: ideal
    forward_attack: none    # none | ir:random|plus|cross:F | usd:block|pass:F
    backward_attack: none
    seed: 42
    max_comparisons: null   # cap on matched phase-1 comparisons
    trials: 1
    out: "."
    format: both            # text | table | both
    workers: 1
    emit_transcripts: false
    detection_m: 8          # detection curve evaluated for m = 1..detection_m
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

import yaml

from .adversary import parse_attack
from .channel import parse_channel
from .protocol import ConfigError, SessionConfig, StateSet, bits_from_str

FORMATS = ("text", "table", "both")

DEFAULTS: dict[str, Any] = {
    "n": 4096,
    "message": "",
    "check_frac1": 0.5,
    "check_frac2": 0.1,
    "threshold": 0.05,
    "state_set": "four",
    "forward_channel": "ideal",
    "backward_channel": "ideal",
    "forward_attack": "none",
    "backward_attack": "none",
    "seed": 42,
    "max_comparisons": None,
    "trials": 1,
    "out": ".",
    "format": "both",
    "workers": 1,
    "emit_transcripts": False,
    "detection_m": 8,
}
KEYS = frozenset(DEFAULTS) | {"message_hex"}


@dataclass(frozen=True)
class RunConfig:
    session: SessionConfig = field(default_factory=SessionConfig)
    trials: int = 1
    out: str = "."
    format: str = "both"
    workers: int = 1
    emit_transcripts: bool = False
    detection_m: int = 8

    def to_dict(self) -> dict:
        return {**self.session.to_dict(), "trials": self.trials, "out": self.out,
                "format": self.format, "workers": self.workers,
                "emit_transcripts": self.emit_transcripts, "detection_m": self.detection_m}

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)


def hex_to_bits(text: str) -> str:
    text = text.strip().lower().removeprefix("0x")
    try:
        value = int(text, 16) if text else 0
    except ValueError:
        raise ConfigError("message_hex", f"not a hexadecimal string: {text!r}") from None
    return format(value, f"0{4 * len(text)}b") if text else ""


def _convert(key: str, fn, value):
    try:
        return fn(value)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(key, f"invalid value {value!r} ({exc})") from None


def _int(value) -> int:
    if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
        raise ValueError("expected an integer")
    return int(value)


def _bool(value) -> bool:
    if isinstance(value, bool):
        return value
    if str(value).lower() in ("true", "1", "yes"):
        return True
    if str(value).lower() in ("false", "0", "no"):
        return False
    raise ValueError("expected true or false")


def from_mapping(values: Mapping[str, Any]) -> RunConfig:
    unknown = sorted(set(values) - KEYS)
    if unknown:
        raise ConfigError(unknown[0], "unknown configuration key")
    merged = {**DEFAULTS, **{k: v for k, v in values.items() if k != "message_hex"}}
    if values.get("message_hex") is not None:
        if "message" in values and values["message"] not in (None, ""):
            raise ConfigError("message_hex", "give either message or message_hex, not both")
        merged["message"] = hex_to_bits(str(values["message_hex"]))
    m = merged
    session = SessionConfig(
        n=_convert("n", _int, m["n"]),
        check_fraction_phase1=_convert("check_frac1", float, m["check_frac1"]),
        check_fraction_phase2=_convert("check_frac2", float, m["check_frac2"]),
        error_threshold=_convert("threshold", float, m["threshold"]),
        state_set=_convert("state_set", StateSet, m["state_set"]),
        message=_convert("message", bits_from_str, str(m["message"] if m["message"] is not None else "")),
        forward_channel=_convert("forward_channel", parse_channel, str(m["forward_channel"])),
        backward_channel=_convert("backward_channel", parse_channel, str(m["backward_channel"])),
        forward_attack=_convert("forward_attack", parse_attack, str(m["forward_attack"])),
        backward_attack=_convert("backward_attack", parse_attack, str(m["backward_attack"])),
        seed=_convert("seed", _int, m["seed"]),
        max_comparisons=None if m["max_comparisons"] is None
        else _convert("max_comparisons", _int, m["max_comparisons"]),
    )
    session.validate()
    cfg = RunConfig(
        session=session,
        trials=_convert("trials", _int, m["trials"]),
        out=str(m["out"]),
        format=str(m["format"]),
        workers=_convert("workers", _int, m["workers"]),
        emit_transcripts=_convert("emit_transcripts", _bool, m["emit_transcripts"]),
        detection_m=_convert("detection_m", _int, m["detection_m"]),
    )
    if cfg.trials < 1:
        raise ConfigError("trials", f"must be >= 1, got {cfg.trials}")
    if cfg.workers < 1:
        raise ConfigError("workers", f"must be >= 1, got {cfg.workers}")
    if cfg.format not in FORMATS:
        raise ConfigError("format", f"must be one of {', '.join(FORMATS)}, got {cfg.format!r}")
    if cfg.detection_m < 0:
        raise ConfigError("detection_m", f"must be >= 0, got {cfg.detection_m}")
    return cfg


def load_file(path: Path) -> dict:
    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise ConfigError("config", f"{path} is not valid YAML: {exc}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("config", f"{path} must contain a mapping of keys to values")
    return data


def parse_config(path: Optional[Path] = None, overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """File values first, then non-None overrides (flags), then defaults."""
    values = load_file(path) if path is not None else {}
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key == "message_hex":
            values.pop("message", None)
        elif key == "message":
            values.pop("message_hex", None)
        values[key] = value
    return from_mapping(values)
