"""Certificates for the convergence conditions of a family of scaled models."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from ..construct import (
    ScaledModel,
    discrete_branching_exponent,
    discrete_immigration_exponent,
    mean_drift_residual,
)
from ..mechanism import BranchingMechanism, ImmigrationMechanism, branching_exponent, immigration_exponent

WEIGHT_TOL = 1e-12


@dataclass
class ConditionRow:
    k: int
    gamma: float
    sup_R_error: float          # sup |R_k - R| on the lambda grid
    sup_F_error: float          # sup |F_k - F| on the (lambda, x) grid
    R_lipschitz: float          # grid Lipschitz constant of R_k
    R_lipschitz_bound: float
    moment_margin: float        # min of K1(1+x) - (gamma/k) E[psi(kx)]
    F_growth_margin: float      # min of K1 lam (1+x) - |F_k(lam, x)|
    drift_residual: float       # |gamma (1 - g'(1)) - b|
    min_weight: float
    max_weight_sum_error: float

    def as_dict(self) -> dict:
        return asdict(self)


def weight_audit(model: ScaledModel, n_states: int = 1000) -> tuple[float, float]:
    """Smallest weight and worst normalization error over the offspring law and
    the control laws at ``n_states`` states spread over ``[0, 2k^2]``."""
    laws = [model.offspring]
    states = np.unique(np.linspace(0, 2 * model.k**2, n_states).astype(np.int64))
    laws += [model.control.law_at(i) for i in states]
    min_w = min(min(law.weights) for law in laws)
    sum_err = max(abs(sum(law.weights) - 1.0) for law in laws)
    # law_at renormalizes; audit the raw control weights too
    a = model.control.hat_weight(states)
    jw = model.control.jump_weights(states)
    raw0 = 1.0 - 2 * a - jw.sum(axis=0)
    min_w = min(min_w, float(raw0.min()), float(a.min()), float(jw.min()) if jw.size else 1.0)
    return min_w, sum_err


def condition_report(models: Sequence[ScaledModel], mech: BranchingMechanism,
                     imm: ImmigrationMechanism, lambda_grid, x_grid) -> list[ConditionRow]:
    if len(models) < 1:
        raise ValueError("need at least one model")
    rows = []
    lam_all = np.asarray(lambda_grid, dtype=float)
    x = np.asarray(x_grid, dtype=float)
    for model in models:
        lam = lam_all[lam_all <= model.k]
        rk = np.asarray(discrete_branching_exponent(model, lam))
        r = np.asarray(branching_exponent(mech, lam))
        lg, xg = np.meshgrid(lam, x, indexing="ij")
        fk = np.asarray(discrete_immigration_exponent(model, lg, xg))
        f = np.asarray(immigration_exponent(imm, lg, xg))
        slopes = np.abs(np.diff(rk) / np.diff(lam)) if lam.size > 1 else np.zeros(1)
        bound = 2.0 * (abs(mech.b) + 2.0 * mech.c * lam.max() + mech.m.first_moment) if lam.size else 0.0
        i = np.floor(np.round(x * model.k, 9)).astype(np.int64)
        K1 = model.cert.K1
        moment = K1 * (1.0 + x) - model.gamma / model.k * model.control.mean(i)
        growth = K1 * lg * (1.0 + xg) - np.abs(fk)
        min_w, sum_err = weight_audit(model)
        rows.append(ConditionRow(
            k=model.k, gamma=model.gamma,
            sup_R_error=float(np.max(np.abs(rk - r))) if lam.size else 0.0,
            sup_F_error=float(np.max(np.abs(fk - f))) if fk.size else 0.0,
            R_lipschitz=float(np.max(slopes)), R_lipschitz_bound=float(bound),
            moment_margin=float(np.min(moment)), F_growth_margin=float(np.min(growth)),
            drift_residual=mean_drift_residual(model),
            min_weight=float(min_w), max_weight_sum_error=float(sum_err),
        ))
    return rows
