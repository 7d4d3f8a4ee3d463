"""First-moment bound for the rescaled process."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..construct import ScaledModel
from ..discrete_sim import generations_at
from ..ensemble import Ensemble


def moment_bound(y0: float, K1: float, K2: float, gamma: float, n_gens: int) -> float:
    """``a^n y0 + (K1/gamma) (a^n - 1)/(a - 1)`` with ``a = (1 + K2/gamma)(1 + K1/gamma)``.

    When ``a == 1`` the geometric sum is replaced by its limit ``n``.
    """
    excess = K2 / gamma + K1 / gamma + K1 * K2 / gamma**2
    if excess == 0.0:
        return y0 + (K1 / gamma) * n_gens
    log_a = math.log1p(excess)
    growth = math.exp(n_gens * log_a)
    return growth * y0 + (K1 / gamma) * math.expm1(n_gens * log_a) / excess


@dataclass
class MomentRow:
    t: float
    generations: int
    mean: float
    se: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.mean - 3.0 * self.se <= self.bound


def moment_bound_check(model: ScaledModel, ensemble: Ensemble, K1: float | None = None,
                       K2: float | None = None) -> list[MomentRow]:
    """Compare empirical ``E[Y_k(t)]`` against the bound at each ``t`` of the ensemble."""
    K1 = model.cert.K1 if K1 is None else K1
    K2 = model.cert.K2 if K2 is None else K2
    y_start = ensemble.meta.get("z0", 0) / model.k
    rows = []
    for t, n in zip(ensemble.t_grid, generations_at(model.gamma, ensemble.t_grid)):
        s = ensemble.at(t)
        se = float(s.std(ddof=1) / np.sqrt(s.size)) if s.size > 1 else 0.0
        rows.append(MomentRow(t, n, float(s.mean()), se, moment_bound(y_start, K1, K2, model.gamma, n)))
    return rows
