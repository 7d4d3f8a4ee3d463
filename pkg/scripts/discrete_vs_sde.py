"""Discrete process at scale k against the limit SDE: Laplace transforms and KS.

    python3 scripts/discrete_vs_sde.py --k 512 --n-paths 50000 --workers 4
"""
import argparse
import time

import numpy as np

from cbdilab.cbdi_sim import SdeConfig, sde_marginals
from cbdilab.config import load_config, resolved_K_hat
from cbdilab.construct import build_scaled_model
from cbdilab.discrete_sim import rescaled_marginals
from cbdilab.verify import ks_two_sample, laplace_compare


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--config", default="configs/c1.yaml")
    ap.add_argument("--k", type=int, default=512)
    ap.add_argument("--n-paths", type=int, default=50_000)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    cfg = load_config(args.config)
    seed = cfg.master_seed if args.seed is None else args.seed
    model = build_scaled_model(cfg.mech, cfg.imm, args.k, resolved_K_hat(cfg))
    print(f"k={args.k} gamma={model.gamma:.2f} paths={args.n_paths} t_grid={cfg.t_grid}")

    t0 = time.time()
    disc = rescaled_marginals(model, cfg.y0, cfg.t_grid, args.n_paths, seed, workers=args.workers)
    t1 = time.time()
    sde = sde_marginals(SdeConfig(cfg.mech, cfg.imm, cfg.dt, cfg.t_grid, args.n_paths, seed, cfg.y0),
                        workers=args.workers)
    t2 = time.time()
    print(f"discrete {t1 - t0:.1f}s, sde {t2 - t1:.1f}s")

    rep = laplace_compare(disc, sde, [0.5, 1.0, 2.0])
    print(f"{'t':>5} {'lam':>5} {'LT disc':>10} {'LT sde':>10} {'diff':>10} {'se':>8}")
    for c in rep.cells:
        print(f"{c.t:5.2f} {c.lam:5.2f} {c.lt_a:10.5f} {c.lt_b:10.5f} {c.diff:+10.5f} {c.se:8.5f}")
    print(f"max |diff| = {rep.max_abs_diff:.5f}")
    for t in cfg.t_grid:
        d, p = ks_two_sample(disc.at(t), sde.at(t))
        print(f"KS t={t}: D={d:.5f} p={p:.4g}  means {np.mean(disc.at(t)):.4f} / {np.mean(sde.at(t)):.4f}")


if __name__ == "__main__":
    main()
