"""Blocking USD attack against the two-state and four-state preparations.

With only |H> and |u> in play, Eve's conclusive results are always right and
her resent photons pass the check untouched. Adding |V> and |d> exposes her.
"""

import argparse

from qsdc_sim.adversary import OpaqueUSD
from qsdc_sim.analysis import build_report, run_ensemble
from qsdc_sim.protocol import SessionConfig, StateSet


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=25)
    ap.add_argument("--n", type=int, default=4096)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    attack = OpaqueUSD(block_inconclusive=True, fraction=1.0)
    message = tuple(i % 2 for i in range(256))
    for state_set in StateSet:
        cfg = SessionConfig(n=args.n, state_set=state_set, message=message,
                            forward_attack=attack, backward_attack=attack)
        rep = build_report(run_ensemble(cfg, args.trials, workers=args.workers))
        emp, th = rep["empirical"], rep["theoretical"]
        p1 = emp["phase1_error"]
        print(f"[{state_set.value}]")
        print(f"  phase-1 error      {p1['rate']:.4f}  ({p1['count']}/{p1['total']}), "
              f"reference {th['forward_check_error_rate']:.4f}")
        print(f"  completed          {emp['completed']}/{emp['trials']}")
        print(f"  conclusive rate    {emp['usd_conclusive_rate']:.4f}")
        print(f"  conclusive acc.    {emp['eve_conclusive_accuracy']}")
        print(f"  empirical MI       {emp['empirical_mutual_information']}")
        print(f"  holevo chi / H(B)  {th['holevo_chi']:.6f} / {th['source_entropy']:.6f}")


if __name__ == "__main__":
    main()
