"""Command-line harness: ``qsdc-sim run|replay|theory``.

Exit codes: 0 clean run (or replay identical), 1 usage/config/I-O error,
2 detection fired (most trials aborted) or replay mismatch.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path
from typing import Optional, Sequence

import yaml

from . import analysis, transcript
from .config import FORMATS, RunConfig, parse_config
from .protocol import ConfigError, SessionConfig, replay

EXIT_OK, EXIT_USAGE, EXIT_DETECTED = 0, 1, 2

_FLAG_KEYS = ("n", "message", "message_hex", "check_frac1", "check_frac2", "threshold", "state_set",
              "forward_channel", "backward_channel", "forward_attack", "backward_attack", "seed",
              "max_comparisons", "trials", "out", "format", "workers", "emit_transcripts",
              "detection_m")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="YAML run configuration")
    p.add_argument("--n", type=int, help="photons per batch (default 4096)")
    msg = p.add_mutually_exclusive_group()
    msg.add_argument("--message", help="message as a bit string")
    msg.add_argument("--message-hex", help="message as hexadecimal, high bit first")
    p.add_argument("--check-frac1", type=float, help="phase-1 check fraction (default 0.5)")
    p.add_argument("--check-frac2", type=float, help="phase-2 check fraction (default 0.1)")
    p.add_argument("--threshold", type=float, help="error-rate abort threshold (default 0.05)")
    p.add_argument("--state-set", choices=("four", "cai2"))
    p.add_argument("--forward-channel", metavar="SPEC", help="ideal | depol:p | loss:eta, joined by '+'")
    p.add_argument("--backward-channel", metavar="SPEC")
    p.add_argument("--forward-attack", metavar="SPEC", help="none | ir:policy:fraction | usd:block|pass:fraction")
    p.add_argument("--backward-attack", metavar="SPEC")
    p.add_argument("--seed", type=int)
    p.add_argument("--max-comparisons", type=int, help="use at most this many matched phase-1 comparisons")
    p.add_argument("--detection-m", type=int, help="largest m of the detection curve (default 8)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qsdc-sim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate an ensemble of sessions and write reports")
    _add_config_flags(run)
    run.add_argument("--trials", type=int)
    run.add_argument("--out", help="existing output directory (default .)")
    run.add_argument("--format", choices=FORMATS)
    run.add_argument("--workers", type=int, help="worker processes; never changes results")
    run.add_argument("--emit-transcripts", action="store_true", default=None)

    rep = sub.add_parser("replay", help="re-derive transcripts and check byte equality")
    rep.add_argument("transcripts", nargs="+", type=Path)

    theory = sub.add_parser("theory", help="print theoretical reference values only")
    _add_config_flags(theory)
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides = {k: getattr(args, k, None) for k in _FLAG_KEYS}
    return parse_config(args.config, overrides)


def dump_yaml(data: dict) -> str:
    return yaml.safe_dump(data, sort_keys=False, default_flow_style=False)


def trials_csv(trials: Sequence[analysis.TrialSummary]) -> str:
    buf = io.StringIO(newline="")
    writer = csv.DictWriter(buf, fieldnames=analysis.CSV_COLUMNS)
    writer.writeheader()
    for t in trials:
        writer.writerow(t.row())
    return buf.getvalue()


def load_ensemble(out_dir: Path) -> analysis.TrialEnsemble:
    """Rebuild a TrialEnsemble from report.txt provenance and trials.csv."""
    from .schema import validate_trials_csv

    report = yaml.safe_load((out_dir / "report.txt").read_text(encoding="utf-8"))
    prov = report["provenance"]
    trials = validate_trials_csv((out_dir / "trials.csv").read_text(encoding="utf-8"))
    return analysis.TrialEnsemble(SessionConfig.from_dict(prov["config"]), prov["trials"], trials)


def cmd_run(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    if not out.is_dir():
        print(f"error: output directory {out} does not exist", file=sys.stderr)
        return EXIT_USAGE
    ensemble = analysis.run_ensemble(cfg.session, cfg.trials, cfg.workers, cfg.emit_transcripts)
    report = analysis.build_report(ensemble, cfg.detection_m)
    text = dump_yaml(report)
    try:
        if cfg.format in ("text", "both"):
            (out / "report.txt").write_text(text, encoding="utf-8")
        if cfg.format in ("table", "both"):
            (out / "trials.csv").write_text(trials_csv(ensemble.trials), encoding="utf-8", newline="")
        if cfg.emit_transcripts:
            tdir = out / "transcripts"
            tdir.mkdir(exist_ok=True)
            for i, body in enumerate(ensemble.transcripts):
                (tdir / f"trial-{i}.log").write_text(body, encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot write {exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_USAGE
    print(text, end="")
    emp = report["empirical"]
    return EXIT_OK if 2 * emp["completed"] > emp["trials"] else EXIT_DETECTED


def cmd_replay(paths: Sequence[Path]) -> int:
    status = EXIT_OK
    for path in paths:
        try:
            text = Path(path).read_text(encoding="utf-8")
            result = replay(text)
        except OSError as exc:
            print(f"{path}: cannot read: {exc.strerror}", file=sys.stderr)
            return EXIT_USAGE
        except transcript.TranscriptParseError as exc:
            print(f"{path}: parse error at {exc}", file=sys.stderr)
            return EXIT_USAGE
        if result.ok:
            print(f"{path}: identical")
        else:
            where = "" if result.divergent_event is None else f" at event {result.divergent_event}"
            print(f"{path}: MISMATCH{where}: {result.detail}", file=sys.stderr)
            status = EXIT_DETECTED
    return status


def cmd_theory(cfg: RunConfig) -> int:
    print(dump_yaml({"theoretical": analysis.theoretical_references(cfg.session, cfg.detection_m)}), end="")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "replay":
            return cmd_replay(args.transcripts)
        cfg = _config_from_args(args)
        return cmd_run(cfg) if args.command == "run" else cmd_theory(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
