"""Experiment configuration: YAML parsing and whole-file validation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .cbdi_sim import snap_grid
from .construct import ConstructionError, default_K_hat, gamma_min
from .mechanism import (
    BranchingMechanism,
    FiniteAtomicMeasure,
    ImmigrationAtom,
    ImmigrationMechanism,
    MechanismError,
    PiecewiseLinearFn,
    growth_constant,
)


class ConfigError(ValueError):
    """Carries every violation found, not just the first."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


DEFAULT_TOLERANCES = {
    "gap_decay_factor": 4.0,      # sup-gap(largest k) < sup-gap(smallest k) / factor
    "split_identity": 1e-12,      # |A_k - (B_k + C_k)|
    "drift_residual": 1e-10,      # |gamma (1 - g'(1)) - b|
    "lt_abs": 0.02,               # discrete vs SDE Laplace transform difference
    "ks_alpha": 1e-3,             # minimum KS p-value
    "oracle_abs": 0.005,          # SDE vs closed-form Laplace transform
}


@dataclass
class ExperimentConfig:
    mech: BranchingMechanism
    imm: ImmigrationMechanism
    k_list: list[int]
    K_hat: float | None
    y0: float
    t_grid: tuple[float, ...]
    dt: float
    n_paths: int
    master_seed: int
    lambda_grid: list[float]
    x_grid: list[float]
    tolerances: dict[str, float]
    martingale: dict[str, Any] = field(default_factory=dict)
    moments: dict[str, Any] = field(default_factory=dict)
    bernstein: dict[str, Any] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    raw: dict = field(default_factory=dict)
    source: str | None = None

    def gamma_min_by_k(self) -> dict[int, float]:
        return {k: gamma_min(self.mech, k) for k in self.k_list}


def _pl(spec, where: str, errors: list[str]) -> PiecewiseLinearFn | None:
    if not isinstance(spec, dict):
        errors.append(f"{where}: expected a mapping with breakpoints/values/tail_slope")
        return None
    try:
        return PiecewiseLinearFn(tuple(spec.get("breakpoints", [0.0])), tuple(spec.get("values", [])),
                                 spec.get("tail_slope", 0.0))
    except (MechanismError, TypeError, ValueError) as exc:
        errors.append(f"{where}: {exc}")
        return None


def _grid(spec, where: str, errors: list[str]) -> list[float]:
    if isinstance(spec, dict):
        try:
            start, stop, step = float(spec["start"]), float(spec["stop"]), float(spec["step"])
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            return [start + i * step for i in range(n)]
        except (KeyError, TypeError, ValueError) as exc:
            errors.append(f"{where}: grid mapping needs numeric start/stop/step ({exc})")
            return []
    try:
        return [float(v) for v in spec]
    except (TypeError, ValueError):
        errors.append(f"{where}: expected a list of numbers")
        return []


def parse_config(raw: dict, source: str | None = None) -> ExperimentConfig:
    errors: list[str] = []
    if not isinstance(raw, dict):
        raise ConfigError(["top level must be a mapping"])
    br = raw.get("branching") or {}
    imm_raw = raw.get("immigration") or {}
    sc = raw.get("scaling") or {}
    sim = raw.get("simulation") or {}
    ver = raw.get("verification") or {}

    mech = None
    atoms = br.get("m_atoms", []) or []
    for j, a in enumerate(atoms):
        if not (isinstance(a, (list, tuple)) and len(a) == 2):
            errors.append(f"branching.m_atoms[{j}]: expected [site, weight]")
        elif not (isinstance(a[0], (int, float)) and a[0] > 0):
            errors.append(f"branching.m_atoms[{j}]: site must be positive")
        elif not (isinstance(a[1], (int, float)) and a[1] >= 0):
            errors.append(f"branching.m_atoms[{j}]: weight must be nonnegative")
    try:
        c = float(br.get("c", 0.0))
        if c < 0:
            errors.append("branching.c: must be nonnegative")
        if not errors:
            mech = BranchingMechanism(float(br.get("b", 0.0)), c, FiniteAtomicMeasure.from_pairs(atoms))
    except (MechanismError, TypeError, ValueError) as exc:
        errors.append(f"branching: {exc}")

    beta = _pl(imm_raw.get("beta", {"breakpoints": [0.0], "values": [0.0]}), "immigration.beta", errors)
    imm_atoms = []
    for j, a in enumerate(imm_raw.get("atoms", []) or []):
        where = f"immigration.atoms[{j}]"
        if not isinstance(a, dict):
            errors.append(f"{where}: expected a mapping with z, pi, q")
            continue
        q = _pl(a.get("q"), f"{where}.q", errors)
        try:
            if q is not None:
                imm_atoms.append(ImmigrationAtom(float(a.get("z", 0.0)), float(a.get("pi", 0.0)), q))
        except (MechanismError, TypeError, ValueError) as exc:
            errors.append(f"{where}: {exc}")
    imm = ImmigrationMechanism(beta, tuple(imm_atoms)) if beta is not None else None

    k_list = []
    for k in sc.get("k_list", []) or []:
        if not (isinstance(k, int) and k >= 1):
            errors.append(f"scaling.k_list: {k!r} is not a positive integer")
        else:
            k_list.append(k)
    K_hat = sc.get("K_hat")
    if mech is not None:
        for k in k_list:
            try:
                gamma_min(mech, k)
            except ConstructionError as exc:
                errors.append(f"scaling.k_list: {exc}")
    if K_hat is not None and imm is not None:
        try:
            K = growth_constant(imm)
            if not float(K_hat) >= 2 * K:
                errors.append(f"scaling.K_hat: must be >= 2*growth_constant = {2 * K}")
        except (MechanismError, TypeError, ValueError) as exc:
            errors.append(f"scaling.K_hat: {exc}")

    warnings: list[str] = []
    y0 = float(sim.get("y0", 1.0))
    if y0 < 0:
        errors.append("simulation.y0: must be nonnegative")
    t_grid = _grid(sim.get("t_grid", [1.0]), "simulation.t_grid", errors)
    if any(t < 0 for t in t_grid) or any(b <= a for a, b in zip(t_grid, t_grid[1:])):
        errors.append("simulation.t_grid: must be strictly increasing and nonnegative")
    dt = float(sim.get("dt", 2.0**-10))
    if not dt > 0:
        errors.append("simulation.dt: must be positive")
    elif t_grid:
        spacing = np.diff([0.0] + t_grid)
        positive = spacing[spacing > 0]
        if positive.size and dt > positive.min() + 1e-15:
            errors.append(f"simulation.dt: {dt} exceeds the smallest t_grid spacing {positive.min()}")
        snapped, moved = snap_grid(t_grid, dt)
        if moved:
            warnings.append(f"t_grid {t_grid} snapped to multiples of dt={dt}: {list(snapped)}")
        t_grid = list(snapped)
    n_paths = sim.get("n_paths", 1000)
    if not (isinstance(n_paths, int) and n_paths >= 1):
        errors.append("simulation.n_paths: must be a positive integer")
    seed = sim.get("master_seed", 0)
    if not (isinstance(seed, int) and 0 <= seed < 2**64):
        errors.append("simulation.master_seed: must be an integer in [0, 2^64)")

    lambda_grid = _grid(ver.get("lambda_grid", [0.5, 1.0, 2.0]), "verification.lambda_grid", errors)
    if any(l < 0 for l in lambda_grid):
        errors.append("verification.lambda_grid: values must be nonnegative")
    x_grid = _grid(ver.get("x_grid", {"start": 0.0, "stop": 8.0, "step": 0.25}),
                   "verification.x_grid", errors)
    if any(x < 0 for x in x_grid):
        errors.append("verification.x_grid: values must be nonnegative")
    tolerances = dict(DEFAULT_TOLERANCES)
    for key, val in (ver.get("tolerances") or {}).items():
        if key not in DEFAULT_TOLERANCES:
            errors.append(f"verification.tolerances: unknown key {key!r}")
        else:
            tolerances[key] = float(val)

    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(
        mech=mech, imm=imm, k_list=k_list, K_hat=None if K_hat is None else float(K_hat),
        y0=y0, t_grid=tuple(t_grid), dt=dt, n_paths=n_paths, master_seed=seed,
        lambda_grid=lambda_grid, x_grid=x_grid, tolerances=tolerances,
        martingale=dict(ver.get("martingale") or {}), moments=dict(ver.get("moments") or {}),
        bernstein=dict(ver.get("bernstein") or {}), warnings=warnings, raw=raw, source=source,
    )


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f"{path}:{mark.line + 1}:{mark.column + 1}" if mark else str(path)
        raise ConfigError([f"{loc}: parse error: {getattr(exc, 'problem', exc)}"]) from exc
    return parse_config(raw, str(path))


def resolved_K_hat(cfg: ExperimentConfig) -> float:
    return cfg.K_hat if cfg.K_hat is not None else default_K_hat(cfg.imm)
