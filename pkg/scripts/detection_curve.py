"""Empirical abort frequency under full intercept-resend versus 1 - (3/4)^m.

    python scripts/detection_curve.py --sessions 10000 --m 1 2 4 8
"""

import argparse
import math

from qsdc_sim.adversary import InterceptResend
from qsdc_sim.analysis import detection_curve, run_ensemble
from qsdc_sim.protocol import SessionConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sessions", type=int, default=2000)
    ap.add_argument("--m", type=int, nargs="+", default=[1, 2, 4, 8])
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    print(f"{'m':>3} {'empirical':>10} {'theory':>8} {'4 sigma':>8}")
    for m in args.m:
        # n large enough that m matched comparisons are always available
        cfg = SessionConfig(n=max(64, 8 * m), check_fraction_phase1=0.9, forward_attack=InterceptResend(),
                            max_comparisons=m, seed=args.seed)
        trials = run_ensemble(cfg, args.sessions, workers=args.workers).trials
        freq = sum(t.status == "aborted_phase1" for t in trials) / len(trials)
        ((_, p),) = detection_curve([m], 0.25)
        print(f"{m:>3} {freq:>10.4f} {p:>8.4f} {4 * math.sqrt(p * (1 - p) / len(trials)):>8.4f}")


if __name__ == "__main__":
    main()
