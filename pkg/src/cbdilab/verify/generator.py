"""Exact discrete generator on exponentials and its gap to the limit generator."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..construct import ScaledModel
from ..mechanism import BranchingMechanism, ImmigrationMechanism, branching_exponent, generator_exp
from ..pgf import pgf_shift


def _check_grid(model: ScaledModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    i = np.round(x * model.k)
    if np.any(np.abs(i - x * model.k) > 1e-9 * np.maximum(1.0, i)) or np.any(x < 0):
        raise ValueError(f"x must lie on the lattice E_k with k={model.k}")
    return i.astype(np.int64)


def _pieces(model: ScaledModel, lam, i):
    """``(log g(s), h^(i)(g(s)) - 1)`` at ``s = exp(-lam/k)``, computed via shifts."""
    lam = np.asarray(lam, dtype=float)
    g_minus_1 = pgf_shift(model.offspring, np.expm1(-lam / model.k))
    h_minus_1 = model.control.shift(i, g_minus_1)
    return np.log1p(g_minus_1), h_minus_1


def discrete_generator_exp(model: ScaledModel, lam, x):
    """``A_k e_lam(x) = gamma*[g(e^{-lam/k})^{kx} h^(kx)(g(e^{-lam/k})) - e^{-lam x}]``.

    Evaluated as ``gamma e^{-lam x} expm1(kx log g + log h + lam x)`` so that
    the small difference of two numbers near 1 is not lost.
    """
    lam = np.asarray(lam, dtype=float)
    i = _check_grid(model, x)
    xs = i / model.k
    log_g, h1 = _pieces(model, lam, i)
    arg = i * log_g + np.log1p(h1) + lam * xs
    out = model.gamma * np.exp(-lam * xs) * np.expm1(arg)
    return out if np.ndim(out) else float(out)


def decomposition(model: ScaledModel, lam, x):
    """The two terms ``(B_k, C_k)`` with ``A_k e_lam = B_k + C_k``."""
    lam = np.asarray(lam, dtype=float)
    i = _check_grid(model, x)
    xs = i / model.k
    log_g, h1 = _pieces(model, lam, i)
    power = np.exp(i * log_g)
    b = model.gamma * power * h1
    c = model.gamma * np.exp(-lam * xs) * np.expm1(i * log_g + lam * xs)
    return b, c


@dataclass
class GapReport:
    k: int
    lam: np.ndarray
    x: np.ndarray
    Ak: np.ndarray
    L: np.ndarray
    gap: np.ndarray
    Bk: np.ndarray
    Ck: np.ndarray
    weighted_Ck: np.ndarray

    @property
    def sup_gap(self) -> float:
        return float(np.max(self.gap)) if self.gap.size else 0.0

    def sup_gap_by_lambda(self) -> dict[float, float]:
        return {float(l): float(np.max(self.gap[self.lam == l])) for l in np.unique(self.lam)}

    @property
    def max_split_error(self) -> float:
        return float(np.max(np.abs(self.Ak - (self.Bk + self.Ck)))) if self.gap.size else 0.0

    def rows(self):
        for j in range(self.lam.size):
            yield (self.k, self.lam[j], self.x[j], self.Ak[j], self.L[j], self.gap[j],
                   self.Bk[j], self.Ck[j], self.weighted_Ck[j])


GAP_COLUMNS = ("k", "lambda", "x", "Ak", "L", "gap", "Bk", "Ck", "weighted_Ck")


def generator_gap(model: ScaledModel, mech: BranchingMechanism, imm: ImmigrationMechanism,
                  lambda_grid, x_grid, lambda0_ratio: float = 0.5) -> GapReport:
    """Tabulate ``|A_k e_lam - L e_lam|`` on a (lam, x) grid.

    The weighted column is ``e^{lam0 x}|C_k - x e^{-lam x} R(lam)|`` with
    ``lam0 = lambda0_ratio * lam``.
    """
    lg, xg = np.meshgrid(np.asarray(lambda_grid, float), np.asarray(x_grid, float), indexing="ij")
    lam, x = lg.ravel(), xg.ravel()
    ak = np.asarray(discrete_generator_exp(model, lam, x), dtype=float)
    lim = np.asarray(generator_exp(mech, imm, lam, x), dtype=float)
    bk, ck = decomposition(model, lam, x)
    resid = np.abs(ck - x * np.exp(-lam * x) * branching_exponent(mech, lam))
    weighted = np.exp(lambda0_ratio * lam * x) * resid
    return GapReport(model.k, lam, x, ak, lim, np.abs(ak - lim), bk, ck, weighted)
