"""Phase-1 error and abort rates as depolarizing noise grows."""

import argparse

from qsdc_sim.analysis import build_report, run_ensemble
from qsdc_sim.channel import Depolarizing
from qsdc_sim.protocol import SessionConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=float, nargs="+", default=[0.0, 0.02, 0.05, 0.08, 0.1, 0.15, 0.2])
    ap.add_argument("--trials", type=int, default=40)
    ap.add_argument("--n", type=int, default=2048)
    ap.add_argument("--threshold", type=float, default=0.05)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    print(f"{'p':>6} {'error':>8} {'ci':>19} {'ref':>7} {'abort1':>7}")
    for p in args.p:
        cfg = SessionConfig(n=args.n, forward_channel=Depolarizing(p), error_threshold=args.threshold)
        rep = build_report(run_ensemble(cfg, args.trials, workers=args.workers))
        e = rep["empirical"]["phase1_error"]
        ref = rep["theoretical"]["forward_check_error_rate"]
        abort = rep["empirical"]["abort_rate_phase1"]["rate"]
        print(f"{p:>6.3f} {e['rate']:>8.4f} [{e['ci_low']:.4f}, {e['ci_high']:.4f}] {ref:>7.4f} {abort:>7.3f}")


if __name__ == "__main__":
    main()
