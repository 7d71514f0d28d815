"""Fit the large-time L2 decay rates of the linearized two-fluid system.

Evolves the default radial momentum perturbation with the exact Fourier
semigroup, records Plancherel norms on a logarithmic time grid, and fits
power laws.  Expected slopes: -1/4 for the densities, -3/4 for the momenta
and for the weighted density combination that removes the singular mode.
"""

from __future__ import annotations

import argparse

import numpy as np

from twofluid import sim
from twofluid.model import ModelParams, solve_equilibrium


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--t-lo", type=float, default=1e2)
    ap.add_argument("--t-hi", type=float, default=1e4)
    ap.add_argument("--n-t", type=int, default=12)
    args = ap.parse_args()

    eq = solve_equilibrium(ModelParams())
    ts = np.logspace(np.log10(args.t_lo), np.log10(args.t_hi), args.n_t)
    state0 = sim.default_linear_state(eq)

    keys = ("n_p", "n_m", "m_p", "m_m", "combo")
    series = {k: [] for k in keys}
    print(f"{'t':>10} " + " ".join(f"{k:>12}" for k in keys))
    for t in ts:
        norms = sim.l2_norms(sim.linear_evolve(state0, t))
        for k in keys:
            series[k].append(norms[k])
        print(f"{t:10.1f} " + " ".join(f"{norms[k]:12.5e}" for k in keys))

    print("\nfitted slopes (L2 norm ~ t^slope):")
    for k in keys:
        slope, err = sim.fit_decay_slope(ts, np.array(series[k]))
        print(f"  {k:6s} {slope:+.4f}  (+/- {err:.4f})")


if __name__ == "__main__":
    main()
