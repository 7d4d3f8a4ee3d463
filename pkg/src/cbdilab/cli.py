"""Command-line entry point.

    cbdilab <command> --config PATH [--out DIR] [--seed N] [--workers N] [--k K] [--quiet]

Every command writes one or more CSV files (single header row, reals with
17 significant digits) plus a ``.meta.json`` sidecar.  Exit status: 0 all
assertions pass, 1 an assertion failed, 2 configuration error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import json
import os
import platform
import sys
import time
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .cbdi_sim import SdeConfig, sde_marginals
from .config import ConfigError, ExperimentConfig, load_config, resolved_K_hat
from .construct import ConstructionError, ScaledModel, build_scaled_model, mean_drift_residual
from .discrete_sim import generations_at, rescaled_marginals
from .ensemble import IntegrityError, fingerprint, fmt, read_ensemble
from .pgf import Dirac, Poisson
from .verify import (
    GAP_COLUMNS,
    bernstein_report,
    cbi_laplace_oracle,
    condition_report,
    generator_gap,
    ks_two_sample,
    laplace_compare,
    martingale_residual,
    moment_bound_check,
    weight_audit,
)

COMMANDS = ("construct", "sim-discrete", "sim-sde", "verify-generator", "verify-conditions",
            "verify-moments", "verify-martingale", "compare", "oracle", "bernstein")
OUT_ENV = "CBDILAB_OUT"

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3


class Run:
    """Collects outputs and failure records for one command invocation."""

    def __init__(self, command: str, cfg: ExperimentConfig | None, out: Path, seed: int | None,
                 quiet: bool):
        self.command = command
        self.cfg = cfg
        self.out = out
        self.seed = seed
        self.quiet = quiet
        self.failures: list[dict] = []
        self.files: list[str] = []
        self.started = time.time()

    def check(self, ok: bool, what: str, **detail) -> bool:
        if not ok:
            self.failures.append({"check": what, **{k: _plain(v) for k, v in detail.items()}})
        return ok

    def log(self, msg: str):
        if not self.quiet:
            print(msg)

    def write_csv(self, name: str, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
        path = self.out / name
        path.parent.mkdir(parents=True, exist_ok=True)
        lines = [",".join(columns)]
        for row in rows:
            lines.append(",".join(_cell(v) for v in row))
        path.write_text("\n".join(lines) + "\n")
        self.files.append(name)
        self.log(f"wrote {path}")
        return path

    def finish(self) -> int:
        meta = {
            "command": self.command,
            "config_hash": fingerprint(self.cfg.raw) if self.cfg is not None else None,
            "config_source": self.cfg.source if self.cfg is not None else None,
            "seed": self.seed,
            "versions": {"cbdilab": __version__, "numpy": np.__version__,
                         "python": platform.python_version()},
            "wall_time_s": time.time() - self.started,
            "warnings": self.cfg.warnings if self.cfg is not None else [],
            "files": self.files,
            "passed": not self.failures,
            "failures": self.failures,
        }
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / f"{self.command}.meta.json").write_text(json.dumps(meta, indent=2, default=_plain))
        for f in self.failures:
            print(json.dumps({"command": self.command, **f}, default=_plain), file=sys.stderr)
        return EXIT_OK if not self.failures else EXIT_FAIL


def _plain(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    return v


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt(v)
    return str(v)


def _ks(cfg: ExperimentConfig, k_filter: int | None) -> list[int]:
    ks = [k for k in cfg.k_list if k_filter is None or k == k_filter]
    if not ks:
        raise ConfigError([f"no scale k matches the filter {k_filter} in scaling.k_list"])
    return ks


def _models(cfg: ExperimentConfig, ks: Sequence[int]) -> list[ScaledModel]:
    return [build_scaled_model(cfg.mech, cfg.imm, k, resolved_K_hat(cfg)) for k in ks]


def cmd_construct(run: Run, cfg: ExperimentConfig, args) -> None:
    cols = ("k", "gamma", "gamma_min", "gamma_tilde", "gamma_hat", "K_hat", "K1", "K2",
            "drift_residual", "min_weight", "w_dirac0", "w_dirac1", "w_dirac2", "w_poisson")
    rows = []
    for m in _models(cfg, _ks(cfg, args.k)):
        w = {0: 0.0, 1: 0.0, 2: 0.0, "p": 0.0}
        for wt, comp in m.offspring:
            w[comp.order if isinstance(comp, Dirac) else "p"] += wt
        min_w, sum_err = weight_audit(m)
        resid = mean_drift_residual(m)
        c = m.cert
        rows.append((m.k, m.gamma, c.gamma_min, c.gamma_tilde, c.gamma_hat, c.K_hat, c.K1, c.K2,
                     resid, min_w, w[0], w[1], w[2], w["p"]))
        run.check(min_w >= 0, "weights nonnegative", k=m.k, min_weight=min_w)
        run.check(sum_err <= 1e-12, "weights sum to 1", k=m.k, error=sum_err)
        run.check(resid <= cfg.tolerances["drift_residual"], "mean drift identity", k=m.k, residual=resid)
        run.log(f"k={m.k}: gamma={m.gamma:.6g} gamma_min={c.gamma_min:.6g}")
    run.write_csv("construct.csv", cols, rows)


def cmd_sim_discrete(run: Run, cfg: ExperimentConfig, args) -> None:
    for m in _models(cfg, _ks(cfg, args.k)):
        ens = rescaled_marginals(m, cfg.y0, cfg.t_grid, cfg.n_paths, run.seed, workers=args.workers)
        name = f"discrete_k{m.k}.csv"
        ens.write(run.out / name)
        run.files.append(name)
        run.log(f"wrote {run.out / name} ({ens.n_paths} paths, generations {ens.meta['generations']})")


def _sde_config(cfg: ExperimentConfig, seed: int) -> SdeConfig:
    return SdeConfig(cfg.mech, cfg.imm, cfg.dt, cfg.t_grid, cfg.n_paths, seed, cfg.y0)


def cmd_sim_sde(run: Run, cfg: ExperimentConfig, args) -> None:
    ens = sde_marginals(_sde_config(cfg, run.seed), workers=args.workers)
    ens.write(run.out / "sde.csv", {"config_warnings": cfg.warnings})
    run.files.append("sde.csv")
    run.log(f"wrote {run.out / 'sde.csv'} (drift floor events: {ens.meta['drift_floor_events']})")


def cmd_verify_generator(run: Run, cfg: ExperimentConfig, args) -> None:
    tol = cfg.tolerances
    reports = []
    for m in _models(cfg, _ks(cfg, args.k)):
        xs = [x for x in cfg.x_grid if abs(x * m.k - round(x * m.k)) < 1e-9]
        rep = generator_gap(m, cfg.mech, cfg.imm, cfg.lambda_grid, xs)
        reports.append(rep)
        run.check(rep.max_split_error <= tol["split_identity"], "A_k = B_k + C_k", k=m.k,
                  error=rep.max_split_error)
        run.log(f"k={m.k}: sup gap {rep.sup_gap:.6g}")
    run.write_csv("gap_report.csv", GAP_COLUMNS, (r for rep in reports for r in rep.rows()))
    sups = [r.sup_gap for r in reports]
    if len(sups) >= 2:
        run.check(all(b < a for a, b in zip(sups, sups[1:])), "sup gap decreases in k", sup_gaps=sups)
        run.check(sups[-1] < sups[0] / tol["gap_decay_factor"], "sup gap decay factor", sup_gaps=sups)


def cmd_verify_conditions(run: Run, cfg: ExperimentConfig, args) -> None:
    lam_max = max(cfg.lambda_grid)
    rows = condition_report(_models(cfg, _ks(cfg, args.k)), cfg.mech, cfg.imm, cfg.lambda_grid, cfg.x_grid)
    cols = list(rows[0].as_dict()) if rows else []
    run.write_csv("conditions.csv", cols, (list(r.as_dict().values()) for r in rows))
    for r in rows:
        run.check(r.drift_residual <= cfg.tolerances["drift_residual"], "mean drift identity", k=r.k,
                  residual=r.drift_residual)
        run.check(r.min_weight >= 0 and r.max_weight_sum_error <= 1e-12, "mixture weights valid", k=r.k)
        run.check(r.moment_margin >= 0, "first-moment condition margin", k=r.k, margin=r.moment_margin)
        run.check(r.F_growth_margin >= 0, "|F_k| <= K1 lam (1+x)", k=r.k, margin=r.F_growth_margin)
        run.check(r.R_lipschitz <= r.R_lipschitz_bound, "R_k Lipschitz bound", k=r.k)
        bound = cfg.mech.b_minus * min(lam_max, r.k) ** 2 / r.k + 1e-9
        run.check(r.sup_R_error <= bound, "|R_k - R| bound", k=r.k, error=r.sup_R_error, bound=bound)


def cmd_verify_moments(run: Run, cfg: ExperimentConfig, args) -> None:
    n_paths = int(cfg.moments.get("n_paths", cfg.n_paths))
    rows = []
    for m in _models(cfg, _ks(cfg, args.k)):
        ens = rescaled_marginals(m, cfg.y0, cfg.t_grid, n_paths, run.seed, workers=args.workers)
        for r in moment_bound_check(m, ens):
            rows.append((m.k, r.t, r.generations, r.mean, r.se, r.bound, r.passed))
            run.check(r.passed, "mean - 3 SE <= moment bound", k=m.k, t=r.t, mean=r.mean, bound=r.bound)
    run.write_csv("moments.csv", ("k", "t", "generations", "mean", "se", "bound", "pass"), rows)


def cmd_verify_martingale(run: Run, cfg: ExperimentConfig, args) -> None:
    lam = float(cfg.martingale.get("lambda", 1.0))
    n_paths = int(cfg.martingale.get("n_paths", cfg.n_paths))
    rows = []
    for m in _models(cfg, _ks(cfg, args.k)):
        checkpoints = generations_at(m.gamma, cfg.martingale.get("t_checkpoints", [0.5, 1.0]))
        for r in martingale_residual(m, n_paths, checkpoints, lam, run.seed, cfg.y0):
            rows.append((m.k, lam, r.n, r.mean, r.se, r.passed))
            run.check(r.passed, "|mean M| <= 4 SE", k=m.k, n=r.n, mean=r.mean, se=r.se)
    run.write_csv("martingale.csv", ("k", "lambda", "n", "mean", "se", "pass"), rows)


def cmd_compare(run: Run, cfg: ExperimentConfig, args) -> None:
    if not (args.a and args.b):
        raise ConfigError(["compare needs --a and --b ensemble files"])
    a, b = read_ensemble(args.a), read_ensemble(args.b)
    rep = laplace_compare(a, b, cfg.lambda_grid, bias_budget=cfg.tolerances["lt_abs"])
    run.write_csv("compare.csv", ("t", "lambda", "lt_a", "lt_b", "diff", "se", "tolerance", "pass"),
                  ((c.t, c.lam, c.lt_a, c.lt_b, c.diff, c.se, c.tolerance, c.passed) for c in rep.cells))
    for c in rep.cells:
        run.check(c.passed, "Laplace transform agreement", t=c.t, lam=c.lam, diff=c.diff, tol=c.tolerance)
    ks_rows = []
    for t in a.t_grid:
        d, p = ks_two_sample(a.at(t), b.at(t))
        ks_rows.append((t, d, p))
        run.check(p >= cfg.tolerances["ks_alpha"], "two-sample KS", t=t, D=d, p=p)
    run.write_csv("ks.csv", ("t", "D", "p"), ks_rows)


def cmd_oracle(run: Run, cfg: ExperimentConfig, args) -> None:
    mech, imm = cfg.mech, cfg.imm
    if mech.b != 0 or len(mech.m) or imm.atoms or imm.beta.lipschitz != 0:
        raise ConfigError(["oracle needs b = 0, constant beta and no jump atoms"])
    beta = imm.beta.values[0]
    rows = [(t, lam, cbi_laplace_oracle(0.0, mech.c, beta, cfg.y0, t, lam))
            for t in cfg.t_grid for lam in cfg.lambda_grid]
    run.write_csv("oracle.csv", ("t", "lambda", "laplace"), rows)


def cmd_bernstein(run: Run, cfg: ExperimentConfig, args) -> None:
    p = cfg.bernstein.get("p", [0.0, 1.0, -1.0])
    n_list = cfg.bernstein.get("n_list", [16, 64, 256])
    grid = np.linspace(0.0, float(cfg.bernstein.get("x_max", 10.0)), int(cfg.bernstein.get("n_grid", 2001)))
    rows = bernstein_report(p, n_list, grid)
    run.write_csv("bernstein.csv", ("n", "err_f", "err_f1", "err_f2"),
                  ((r.n, r.err_f, r.err_f1, r.err_f2) for r in rows))
    for col in ("err_f", "err_f1", "err_f2"):
        vals = [getattr(r, col) for r in rows]
        run.check(all(b <= a * 1.1 for a, b in zip(vals, vals[1:])), f"{col} decreases in n", values=vals)


HANDLERS = {
    "construct": cmd_construct, "sim-discrete": cmd_sim_discrete, "sim-sde": cmd_sim_sde,
    "verify-generator": cmd_verify_generator, "verify-conditions": cmd_verify_conditions,
    "verify-moments": cmd_verify_moments, "verify-martingale": cmd_verify_martingale,
    "compare": cmd_compare, "oracle": cmd_oracle, "bernstein": cmd_bernstein,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cbdilab", description=__doc__.split("\n")[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="YAML experiment configuration")
    ap.add_argument("--out", default=None, help=f"output directory (default: ${OUT_ENV} or ./out)")
    ap.add_argument("--seed", type=int, default=None, help="master seed; overrides the config")
    ap.add_argument("--workers", type=int, default=1, help="worker processes (never changes results)")
    ap.add_argument("--k", type=int, default=None, help="restrict to one scale k")
    ap.add_argument("--quiet", action="store_true")
    ap.add_argument("--a", default=None, help="compare: first ensemble CSV")
    ap.add_argument("--b", default=None, help="compare: second ensemble CSV")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out or os.environ.get(OUT_ENV, "out"))
    try:
        cfg = load_config(args.config)
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError(["--seed must lie in [0, 2^64)"])
        if args.workers < 1:
            raise ConfigError(["--workers must be >= 1"])
    except (ConfigError, OSError) as exc:
        errors = exc.errors if isinstance(exc, ConfigError) else [str(exc)]
        for e in errors:
            print(json.dumps({"error": "config", "message": e}), file=sys.stderr)
        return EXIT_CONFIG
    seed = args.seed if args.seed is not None else cfg.master_seed
    run = Run(args.command, cfg, out, seed, args.quiet)
    for w in cfg.warnings:
        print(f"warning: {w}", file=sys.stderr)
    try:
        HANDLERS[args.command](run, cfg, args)
    except ConfigError as exc:
        for e in exc.errors:
            print(json.dumps({"error": "config", "message": e}), file=sys.stderr)
        return EXIT_CONFIG
    except (ConstructionError, IntegrityError, ArithmeticError, ValueError, OSError) as exc:
        print(json.dumps({"error": "runtime", "type": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return EXIT_RUNTIME
    return run.finish()


if __name__ == "__main__":
    sys.exit(main())
