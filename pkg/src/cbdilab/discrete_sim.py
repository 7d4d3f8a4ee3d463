"""Exact simulation of the scale-k controlled branching process.

One generation maps ``z`` to the sum of ``z + psi`` i.i.d. offspring, with
``psi`` drawn from the control law at state ``z``.  The rescaled process is
``Y_k(t) = Z_k(floor(gamma_k t)) / k``.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .construct import ScaledModel
from .ensemble import Ensemble, fingerprint
from .pgf import iid_sum_sample
from .rng import BLOCK_SIZE, blocks, stream

POPULATION_CAP = 2**62


class PopulationOverflow(OverflowError):
    pass


@dataclass
class DiscretePathRecord:
    k: int
    gamma: float
    generation_indices: tuple[int, ...]
    states: tuple[int, ...]
    seed: dict = field(default_factory=dict)


def step(model: ScaledModel, z, rng: np.random.Generator):
    """One generation for a state or an array of states."""
    scalar = np.ndim(z) == 0
    z = np.asarray(z, dtype=np.int64)
    if np.any(z < 0):
        raise ValueError("population must be nonnegative")
    n = z + model.control.sample(z, rng)
    if np.any(n >= POPULATION_CAP):
        raise PopulationOverflow("population exceeded 2**62")
    out = iid_sum_sample(model.offspring, n, rng)
    if np.any(out >= POPULATION_CAP) or np.any(out < 0):
        raise PopulationOverflow("population exceeded 2**62")
    return int(out) if scalar else out


def generations_at(gamma: float, t_grid: Sequence[float]) -> list[int]:
    """``floor(gamma * t)`` for each t."""
    return [int(math.floor(round(gamma * t, 9))) for t in t_grid]


def _run_block(model: ScaledModel, z0: int, record_at: Sequence[int], master_seed: int,
               domain: str, block_id: int, size: int) -> np.ndarray:
    record_at = list(record_at)
    out = np.empty((size, len(record_at)), dtype=np.int64)
    z = np.full(size, z0, dtype=np.int64)
    pos = 0
    horizon = record_at[-1] if record_at else 0
    for g in range(horizon + 1):
        while pos < len(record_at) and record_at[pos] == g:
            out[:, pos] = z
            pos += 1
        if g == horizon:
            break
        z = step(model, z, stream(master_seed, domain, block_id, g))
    return out


def simulate_generations(model: ScaledModel, z0: int, n_gens: int, record_at: Sequence[int],
                         master_seed: int, path_id: int = 0) -> DiscretePathRecord:
    """Single path from ``z0``; generation ``g`` uses the stream of ``(path_id, g)``."""
    record_at = sorted(set(int(g) for g in record_at))
    if any(g < 0 or g > n_gens for g in record_at):
        raise ValueError("record_at must lie within [0, n_gens]")
    states = _run_block(model, int(z0), record_at, master_seed, "path", path_id, 1)[0]
    return DiscretePathRecord(model.k, model.gamma, tuple(record_at), tuple(int(s) for s in states),
                              {"master_seed": master_seed, "path_id": path_id})


def _model_config(model: ScaledModel) -> dict:
    return {
        "k": model.k, "gamma": model.gamma,
        "offspring": [[w, repr(c)] for w, c in model.offspring],
        "mech": repr(model.mech), "imm": repr(model.imm), "K_hat": model.control.K_hat,
    }


def _block_job(args):
    model, z0, gens, seed, block_id, size = args
    return _run_block(model, z0, gens, seed, "discrete", block_id, size)


def rescaled_marginals(model: ScaledModel, y0: float, t_grid: Sequence[float], n_paths: int,
                       master_seed: int, workers: int = 1) -> Ensemble:
    """Samples of ``Y_k(t)`` for each ``t`` in ``t_grid``, one row per path.

    Paths are grouped in fixed blocks of ``BLOCK_SIZE``; each block and
    generation has its own stream, so output does not depend on ``workers``.
    """
    t_grid = [float(t) for t in t_grid]
    if any(b < a for a, b in zip(t_grid, t_grid[1:])) or any(t < 0 for t in t_grid):
        raise ValueError("t_grid must be sorted and nonnegative")
    if y0 < 0:
        raise ValueError("y0 must be nonnegative")
    z0 = int(math.floor(round(model.k * y0, 9)))
    gens = generations_at(model.gamma, t_grid)
    uniq = sorted(set(gens))
    jobs = [(model, z0, uniq, master_seed, b, stop - start) for b, start, stop in blocks(n_paths)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_block_job, jobs))
    else:
        parts = [_block_job(j) for j in jobs]
    raw = np.concatenate(parts, axis=0) if parts else np.empty((0, len(uniq)), dtype=np.int64)
    cols = [uniq.index(g) for g in gens]
    config = {"kind": "discrete", "model": _model_config(model), "y0": y0, "t_grid": t_grid,
              "n_paths": n_paths, "master_seed": master_seed, "block_size": BLOCK_SIZE}
    meta = {"config": config, "fingerprint": fingerprint(config), "generations": gens,
            "z0": z0, "k": model.k, "gamma": model.gamma}
    return Ensemble(tuple(t_grid), raw[:, cols] / model.k, meta)
