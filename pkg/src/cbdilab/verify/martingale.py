"""Monte Carlo check that the discrete martingale has zero mean."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..construct import ScaledModel
from ..discrete_sim import step
from ..rng import blocks, stream
from .generator import discrete_generator_exp


@dataclass
class MartingaleRow:
    n: int
    mean: float
    se: float

    @property
    def passed(self) -> bool:
        return abs(self.mean) <= 4.0 * self.se


def martingale_paths(model: ScaledModel, z0: int, checkpoints: Sequence[int], lam: float,
                     n_paths: int, master_seed: int) -> np.ndarray:
    """Values of ``M(n) = gamma e^{-lam Y(n)} - gamma e^{-lam Y(0)} - sum_{i<n} A_k e_lam(Y(i))``.

    Returns shape ``(n_paths, len(checkpoints))``.
    """
    checkpoints = sorted(int(c) for c in checkpoints)
    out = np.empty((n_paths, len(checkpoints)))
    for block_id, start, stop in blocks(n_paths):
        z = np.full(stop - start, int(z0), dtype=np.int64)
        base = model.gamma * np.exp(-lam * z / model.k)
        acc = np.zeros(stop - start)
        pos = 0
        for g in range(checkpoints[-1] + 1 if checkpoints else 0):
            while pos < len(checkpoints) and checkpoints[pos] == g:
                out[start:stop, pos] = model.gamma * np.exp(-lam * z / model.k) - base - acc
                pos += 1
            if pos == len(checkpoints):
                break
            acc = acc + discrete_generator_exp(model, lam, z / model.k)
            z = step(model, z, stream(master_seed, "martingale", block_id, g))
    return out


def martingale_residual(model: ScaledModel, n_paths: int, checkpoints: Sequence[int], lam: float,
                        master_seed: int, y0: float = 1.0) -> list[MartingaleRow]:
    if not lam > 0:
        raise ValueError("lambda must be positive")
    z0 = int(np.floor(round(model.k * y0, 9)))
    vals = martingale_paths(model, z0, checkpoints, lam, n_paths, master_seed)
    rows = []
    for j, n in enumerate(sorted(int(c) for c in checkpoints)):
        col = vals[:, j]
        se = float(col.std(ddof=1) / np.sqrt(col.size)) if col.size > 1 else 0.0
        rows.append(MartingaleRow(n, float(col.mean()), se))
    return rows
