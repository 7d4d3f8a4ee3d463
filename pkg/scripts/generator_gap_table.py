"""Sup-norm generator gap across scales for a configuration, per lambda."""
import argparse

from cbdilab.config import load_config, resolved_K_hat
from cbdilab.construct import build_scaled_model
from cbdilab.verify import generator_gap


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default="configs/c1.yaml")
    args = ap.parse_args()
    cfg = load_config(args.config)
    lams = [0.5, 1.0, 2.0, 4.0]
    print(f"{'k':>6} {'gamma':>10} " + " ".join(f"{'lam=' + str(l):>10}" for l in lams) + f" {'sup':>10} {'split':>9}")
    prev = None
    for k in cfg.k_list:
        model = build_scaled_model(cfg.mech, cfg.imm, k, resolved_K_hat(cfg))
        xs = [x for x in cfg.x_grid if abs(x * k - round(x * k)) < 1e-9]
        rep = generator_gap(model, cfg.mech, cfg.imm, lams, xs)
        by = rep.sup_gap_by_lambda()
        ratio = "" if prev is None else f"  ratio {rep.sup_gap / prev:.3f}"
        print(f"{k:6d} {model.gamma:10.1f} " + " ".join(f"{by[l]:10.3e}" for l in lams)
              + f" {rep.sup_gap:10.3e} {rep.max_split_error:9.1e}{ratio}")
        prev = rep.sup_gap


if __name__ == "__main__":
    main()
