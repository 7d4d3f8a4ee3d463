"""KS distance between the scale-k process and the SDE, and where it comes from.

When beta(0) < c the limit reaches 0 and its density near 0 behaves like
y**(beta(0)/c - 1).  A lattice-valued Y_k must put the mass of (0, 1/k) on
a lattice point, so the KS distance cannot fall below roughly
P(Y_t < 1/k), which decays only like k**(-beta(0)/c).
"""
import argparse

import numpy as np

from cbdilab.cbdi_sim import SdeConfig, sde_marginals
from cbdilab.config import load_config, resolved_K_hat
from cbdilab.construct import build_scaled_model
from cbdilab.discrete_sim import rescaled_marginals
from cbdilab.verify import ks_two_sample


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--config", default="configs/c1.yaml")
    ap.add_argument("--k", type=int, nargs="+", default=[32, 64, 128, 256])
    ap.add_argument("--n-paths", type=int, default=20_000)
    ap.add_argument("--t", type=float, default=1.0)
    args = ap.parse_args()
    cfg = load_config(args.config)
    sde = sde_marginals(SdeConfig(cfg.mech, cfg.imm, cfg.dt, (args.t,), args.n_paths, 1, cfg.y0)).at(args.t)
    print(f"beta(0)/c = {cfg.imm.beta(0.0) / cfg.mech.c:.3f}; t = {args.t}; {args.n_paths} paths per side")
    print(f"{'k':>6} {'D':>8} {'p':>10} {'P(Yk=0)':>9} {'P(Y<1/k)':>9}")
    for k in args.k:
        model = build_scaled_model(cfg.mech, cfg.imm, k, resolved_K_hat(cfg))
        disc = rescaled_marginals(model, cfg.y0, (args.t,), args.n_paths, 2).at(args.t)
        d, p = ks_two_sample(disc, sde)
        print(f"{k:6d} {d:8.4f} {p:10.3g} {np.mean(disc == 0):9.4f} {np.mean(sde < 1 / k):9.4f}")


if __name__ == "__main__":
    main()
