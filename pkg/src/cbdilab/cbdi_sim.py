"""Splitting scheme for the limit SDE with dependent immigration.

Each step of length ``h``, with intensities frozen at the entry state ``y``:

1. drift: ``y + h*(beta(y) - y*sum_j z_j m_j)``, floored at 0
2. branching jumps: ``Poisson(y*m_j*h)`` jumps of size ``z_j`` per m-atom
3. immigration jumps: ``Poisson(q_j(y)*pi_j*h)`` jumps of size ``z_j`` per pi-atom
4. exact transition of ``dY = -bY dt + sqrt(2cY) dB`` over ``h``

The Feller transition is a Poisson mixture of Gamma laws: with
``p = exp(-b h)`` and ``theta = c(1 - exp(-b h))/b`` (``c h`` when b = 0),
draw ``N ~ Poisson(y p / theta)`` and return ``Gamma(N, theta)``.  Its
Laplace transform is ``exp(-y p lam / (1 + theta lam))``.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence
import warnings

import numpy as np

from .ensemble import Ensemble, fingerprint
from .mechanism import BranchingMechanism, ImmigrationMechanism
from .rng import BLOCK_SIZE, blocks, stream


def feller_params(b: float, c: float, h: float) -> tuple[float, float]:
    """``(p_h, theta_h)`` of the Feller transition over time ``h``."""
    p = math.exp(-b * h)
    theta = c * h if b == 0 else c * -math.expm1(-b * h) / b
    return p, theta


def feller_laplace(b: float, c: float, y, h: float, lam):
    """``E[exp(-lam Y_h) | Y_0 = y]`` of the Feller diffusion."""
    p, theta = feller_params(b, c, h)
    lam = np.asarray(lam, dtype=float)
    return np.exp(-np.asarray(y) * p * lam / (1.0 + theta * lam))


def feller_step_exact(b: float, c: float, y, h: float, rng: np.random.Generator):
    """Exact draw of the Feller diffusion at time ``h`` started from ``y``."""
    if h <= 0:
        raise ValueError("h must be positive")
    scalar = np.ndim(y) == 0
    y = np.atleast_1d(np.asarray(y, dtype=float))
    p, theta = feller_params(b, c, h)
    if c == 0:
        out = y * p
    else:
        n = rng.poisson(y * p / theta)
        out = np.zeros_like(y)
        pos = n > 0
        out[pos] = rng.gamma(n[pos], theta)
    return float(out[0]) if scalar else out


def _sde_step(mech: BranchingMechanism, imm: ImmigrationMechanism, y: np.ndarray, h: float,
              rng: np.random.Generator) -> tuple[np.ndarray, int]:
    y0 = y
    comp = mech.m.first_moment
    moved = y0 + h * (imm.beta(y0) - y0 * comp)
    floored = moved < 0
    y = np.where(floored, 0.0, moved)
    for z, w in zip(mech.m.sites, mech.m.weights):
        y = y + z * rng.poisson(y0 * w * h)
    for a in imm.atoms:
        y = y + a.z * rng.poisson(a.q(y0) * a.pi * h)
    return feller_step_exact(mech.b, mech.c, y, h, rng), int(floored.sum())


def sde_step(mech: BranchingMechanism, imm: ImmigrationMechanism, y, h: float,
             rng: np.random.Generator):
    """One splitting step from state(s) ``y``."""
    scalar = np.ndim(y) == 0
    out, _ = _sde_step(mech, imm, np.atleast_1d(np.asarray(y, dtype=float)), h, rng)
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class SdeConfig:
    mech: BranchingMechanism
    imm: ImmigrationMechanism
    dt: float
    t_grid: tuple[float, ...]
    n_paths: int
    master_seed: int
    y0: float = 1.0

    def __post_init__(self):
        t_grid = tuple(float(t) for t in self.t_grid)
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if any(t < 0 for t in t_grid) or any(b <= a for a, b in zip(t_grid, t_grid[1:])):
            raise ValueError("t_grid must be strictly increasing and nonnegative")
        if self.y0 < 0:
            raise ValueError("y0 must be nonnegative")
        for t in t_grid:
            if abs(t / self.dt - round(t / self.dt)) > 1e-12 * max(1.0, t / self.dt):
                raise ValueError(f"t={t} is not a multiple of dt={self.dt}; snap the grid first")
        object.__setattr__(self, "t_grid", t_grid)

    def step_indices(self) -> list[int]:
        return [int(round(t / self.dt)) for t in self.t_grid]


def snap_grid(t_grid: Sequence[float], dt: float) -> tuple[tuple[float, ...], bool]:
    """Round each ``t`` to the nearest multiple of ``dt``; report whether anything moved."""
    snapped = tuple(round(t / dt) * dt for t in t_grid)
    moved = any(abs(a - b) > 1e-12 * max(1.0, abs(a)) for a, b in zip(t_grid, snapped))
    return snapped, moved


def _run_block(cfg: SdeConfig, block_id: int, size: int, domain: str = "sde"):
    idx = cfg.step_indices()
    out = np.empty((size, len(idx)))
    y = np.full(size, float(cfg.y0))
    floors = 0
    pos = 0
    horizon = idx[-1] if idx else 0
    for n in range(horizon + 1):
        while pos < len(idx) and idx[pos] == n:
            out[:, pos] = y
            pos += 1
        if n == horizon:
            break
        y, f = _sde_step(cfg.mech, cfg.imm, y, cfg.dt, stream(cfg.master_seed, domain, block_id, n))
        floors += f
    return out, floors


def _block_job(args):
    cfg, block_id, size = args
    return _run_block(cfg, block_id, size)


def sde_config_dict(cfg: SdeConfig) -> dict:
    return {"kind": "sde", "mech": repr(cfg.mech), "imm": repr(cfg.imm), "dt": cfg.dt,
            "t_grid": list(cfg.t_grid), "n_paths": cfg.n_paths, "master_seed": cfg.master_seed,
            "y0": cfg.y0, "block_size": BLOCK_SIZE}


def sde_marginals(cfg: SdeConfig, workers: int = 1) -> Ensemble:
    """Samples of ``Y_t`` on ``cfg.t_grid``; output is independent of ``workers``."""
    jobs = [(cfg, b, stop - start) for b, start, stop in blocks(cfg.n_paths)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_block_job, jobs))
    else:
        parts = [_block_job(j) for j in jobs]
    data = np.concatenate([p[0] for p in parts]) if parts else np.empty((0, len(cfg.t_grid)))
    floors = sum(p[1] for p in parts)
    if floors:
        warnings.warn(f"drift substep floored at 0 in {floors} path-steps")
    config = sde_config_dict(cfg)
    meta = {"config": config, "fingerprint": fingerprint(config), "drift_floor_events": floors}
    return Ensemble(cfg.t_grid, data, meta)
