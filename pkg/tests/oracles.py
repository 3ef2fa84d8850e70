"""Independent reference values written out from kets, not from the library."""

import math

import numpy as np

from qsdc_sim.qstate import Basis

S = 1 / math.sqrt(2)
KETS = {"H": np.array([1, 0]), "V": np.array([0, 1]),
        "u": np.array([S, S]), "d": np.array([S, -S])}
PREP_OF = {"H": (Basis.PLUS, 0), "V": (Basis.PLUS, 1), "u": (Basis.CROSS, 0), "d": (Basis.CROSS, 1)}


def proj(label):
    k = KETS[label].astype(complex)
    return np.outer(k, k.conj())


def usd_oracle_four_state_error():
    """Matched-basis error rate on photons that survive a blocking USD attack.

    Enumerates 4 preparations x {conclusive H, conclusive u} x resend, with a
    POVM written out here rather than taken from the library.
    """
    c = 1 / (1 + S)
    povm = {"H": c * proj("d"), "u": c * proj("V")}
    weight = err = 0.0
    for label, k in KETS.items():
        flipped = {"H": "V", "V": "H", "u": "d", "d": "u"}[label]
        for outcome, e in povm.items():
            p = 0.25 * np.trace(e @ proj(label)).real
            weight += p
            err += p * abs(KETS[flipped] @ KETS[outcome]) ** 2
    return err / weight


def ir_oracle_error():
    """Intercept-resend in a random basis: 4 preps x 2 Eve bases x outcomes."""
    err = 0.0
    for label in KETS:
        flipped = {"H": "V", "V": "H", "u": "d", "d": "u"}[label]
        for eve_basis in (("H", "V"), ("u", "d")):
            for outcome in eve_basis:
                p = 0.25 * 0.5 * abs(KETS[outcome] @ KETS[label]) ** 2
                err += p * abs(KETS[flipped] @ KETS[outcome]) ** 2
    return err
