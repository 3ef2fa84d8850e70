"""Documented schemas of report.txt (YAML) and trials.csv."""

from __future__ import annotations

import csv
import io

import jsonschema

from .analysis import CSV_COLUMNS, TrialSummary

_num = {"type": ["number", "null"]}
_rate = {
    "type": "object",
    "required": ["rate", "ci_low", "ci_high", "count", "total"],
    "properties": {"rate": _num, "ci_low": _num, "ci_high": _num,
                   "count": {"type": "integer", "minimum": 0},
                   "total": {"type": "integer", "minimum": 0}},
}
_unit = {"type": ["number", "null"], "minimum": 0, "maximum": 1}

THEORY_SCHEMA = {
    "type": "object",
    "required": ["state_set", "holevo_chi", "source_entropy", "matched_basis_error_rate",
                 "forward_check_error_rate", "forward_delivery_rate", "detection_curve"],
    "properties": {
        "state_set": {"enum": ["four", "cai2"]},
        "holevo_chi": {"type": "number"},
        "source_entropy": {"type": "number"},
        "matched_basis_error_rate": {
            "type": "object", "required": ["forward", "backward"],
            "properties": {"forward": _unit, "backward": _unit}},
        "forward_check_error_rate": {"type": "number"},
        "forward_delivery_rate": _unit,
        "detection_curve": {"type": "array", "items": {
            "type": "object", "required": ["m", "p"],
            "properties": {"m": {"type": "integer", "minimum": 0}, "p": _unit}}},
    },
}

REPORT_SCHEMA = {
    "type": "object",
    "required": ["format", "empirical", "theoretical", "provenance"],
    "properties": {
        "format": {"const": "qsdc-report/1"},
        "empirical": {
            "type": "object",
            "required": ["trials", "completed", "aborted_phase1", "aborted_phase2", "phase1_error",
                         "phase2_error", "abort_rate_phase1", "abort_rate_phase2",
                         "message_bit_error_rate", "erasure_rate", "eve_guess_accuracy",
                         "eve_guesses_per_message_bit", "empirical_mutual_information"],
            "properties": {
                "trials": {"type": "integer", "minimum": 1},
                "phase1_error": _rate, "phase2_error": _rate,
                "abort_rate_phase1": _rate, "abort_rate_phase2": _rate,
                "message_bit_error_rate": _unit, "erasure_rate": _unit,
                "eve_guess_accuracy": _unit, "eve_guesses_per_message_bit": _unit,
                "eve_conclusive_accuracy": _unit, "usd_conclusive_rate": _unit,
                "basis_discard_rate": _unit,
                "empirical_mutual_information": _unit,
                "ordering_violations": {"type": "integer", "minimum": 0},
            },
        },
        "theoretical": THEORY_SCHEMA,
        "provenance": {
            "type": "object", "required": ["config", "seed", "trials", "versions"],
            "properties": {"config": {"type": "object"}, "seed": {"type": "integer"},
                           "trials": {"type": "integer"}, "versions": {"type": "object"}},
        },
    },
}


def validate_report(report: dict) -> None:
    jsonschema.validate(report, REPORT_SCHEMA)


def validate_trials_csv(text: str) -> list[TrialSummary]:
    """Check header and per-row types; returns the parsed rows."""
    reader = csv.DictReader(io.StringIO(text, newline=""))
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError(f"trials.csv header {reader.fieldnames} != {list(CSV_COLUMNS)}")
    rows = []
    for i, row in enumerate(reader, start=2):
        try:
            rows.append(TrialSummary.from_row(row))
        except (TypeError, ValueError, KeyError) as exc:
            raise ValueError(f"trials.csv line {i}: {exc}") from None
    return rows
