"""Scale-k controlled branching processes approximating a given (R, F).

For each scale ``k`` this builds a time scaling ``gamma_k``, an offspring
law ``g_k`` and a state-indexed control family ``i -> h_k^(i)`` such that

    R_k(lam)   = k*gamma_k*[g_k(1 - lam/k) - (1 - lam/k)]
    F_k(lam,x) = gamma_k*[h_k^(floor(kx))(1 - lam/k) - 1]

approximate ``R`` and ``F``.  Offspring weights:

    Dirac(0):      (b+ + c*k + sum_j m_j (z_j - 1/k)) / gamma
    Dirac(2):      (c*k + b-) / gamma
    Poisson(k z_j): m_j / (k*gamma)
    Dirac(1):      remainder

which gives ``R_k = R + b- * lam**2 / k`` exactly on [0, k].  The control
law at state ``i`` (``x = i/k``) mixes Dirac(1) and Dirac(2), each with
weight ``k*beta(x) / (3*gamma)`` while ``x <= sqrt(k)``, Poisson(k z_j) with
weight ``pi_j q_j(x) / gamma`` while ``x <= k``, and Dirac(0) for the rest.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mechanism import (
    BranchingMechanism,
    ImmigrationMechanism,
    MechanismError,
    growth_constant,
)
from .pgf import Dirac, MixturePGF, Poisson, pgf_mean, pgf_shift


class ConstructionError(ValueError):
    pass


def state_index(k: int, x):
    """``floor(k*x)`` robust to representation error in ``x = i/k``."""
    return np.floor(np.round(np.asarray(x, dtype=float) * k, 9)).astype(np.int64)


def gamma_min(mech: BranchingMechanism, k: int) -> float:
    """Smallest admissible ``gamma_k`` for the offspring construction.

    The max of the classical floor ``|b| + 2ck + int u(1-e^{-ku}) m(du)``
    and the Dirac(1)-positivity bound ``|b| + 2ck + sum_j m_j z_j``, floored at 1.
    """
    if k < 1:
        raise ConstructionError(f"k must be >= 1, got {k}")
    sites = np.asarray(mech.m.sites)
    weights = np.asarray(mech.m.weights)
    if len(sites) and k * sites.min() < 1.0:
        raise ConstructionError(
            f"k={k} is below 1/min(z_j)={1.0 / sites.min():g}: "
            "the Dirac(0) offspring weight would be negative"
        )
    base = abs(mech.b) + 2.0 * mech.c * k
    classical = base + float(np.sum(weights * sites * -np.expm1(-k * sites)))
    positivity = base + float(np.sum(weights * sites))
    return max(classical, positivity, 1.0)


def build_offspring(mech: BranchingMechanism, k: int, gamma: float) -> MixturePGF:
    floor = gamma_min(mech, k)
    if gamma < floor * (1.0 - 1e-12):
        raise ConstructionError(f"gamma={gamma} is below gamma_min={floor}")
    w0 = (mech.b_plus + mech.c * k
          + sum(w * (z - 1.0 / k) for z, w in zip(mech.m.sites, mech.m.weights))) / gamma
    w2 = (mech.c * k + mech.b_minus) / gamma
    jumps = [(w / (k * gamma), Poisson(k * z)) for z, w in zip(mech.m.sites, mech.m.weights)]
    w1 = 1.0 - w0 - w2 - sum(p for p, _ in jumps)
    pairs = [(w0, Dirac(0)), (w1, Dirac(1)), (w2, Dirac(2))] + jumps
    return MixturePGF.from_pairs([(w, c) for w, c in pairs if w != 0.0] or [(1.0, Dirac(1))])


@dataclass(frozen=True)
class ControlFamily:
    """State-indexed control laws ``i -> h^(i)``; weights computed on demand."""

    k: int
    gamma: float
    gamma_tilde: float
    gamma_hat: float
    K_hat: float
    imm: ImmigrationMechanism

    def _x(self, i):
        return np.asarray(i, dtype=float) / self.k

    def hat_weight(self, i):
        """Weight of Dirac(1) (equal to that of Dirac(2)) at state ``i``."""
        x = self._x(i)
        a = self.imm.beta(np.minimum(x, math.sqrt(self.k))) / (3.0 * math.sqrt(self.k) * self.K_hat)
        return np.where(x <= math.sqrt(self.k), self.gamma_hat * a / self.gamma, 0.0)

    def jump_weights(self, i):
        """Weights of the Poisson(k z_j) components, shape ``(n_atoms,) + i.shape``."""
        x = self._x(i)
        active = x <= self.k
        rows = [np.where(active, a.pi * a.q(np.minimum(x, self.k)), 0.0) / self.gamma
                for a in self.imm.atoms]
        return np.asarray(rows).reshape((len(rows),) + x.shape)

    def law_at(self, i: int) -> MixturePGF:
        i = int(i)
        if i < 0:
            raise ValueError("state must be nonnegative")
        a = float(self.hat_weight(i))
        jw = self.jump_weights(i)
        if 2 * a * self.gamma > self.gamma_hat * (1.0 + 1e-12):
            raise ConstructionError("hat coefficient exceeds 1/2; K_hat too small")
        pairs = [(a, Dirac(1)), (a, Dirac(2))]
        pairs += [(float(w), Poisson(self.k * at.z)) for w, at in zip(jw, self.imm.atoms)]
        pairs = [(w, c) for w, c in pairs if w > 0.0]
        w0 = 1.0 - sum(w for w, _ in pairs)
        return MixturePGF.from_pairs([(w0, Dirac(0))] + pairs)

    def mean(self, i):
        """``E[psi(i)]`` vectorized over states."""
        out = 3.0 * self.hat_weight(i)
        for w, at in zip(self.jump_weights(i), self.imm.atoms):
            out = out + w * self.k * at.z
        return out

    def shift(self, i, d):
        """``h^(i)(1 + d) - 1`` vectorized over states and shifts."""
        a = self.hat_weight(i)
        d = np.asarray(d, dtype=float)
        out = a * d + a * d * (2.0 + d)
        for w, at in zip(self.jump_weights(i), self.imm.atoms):
            out = out + w * np.expm1(self.k * at.z * d)
        return out

    def sample(self, i, rng: np.random.Generator) -> np.ndarray:
        """One draw of ``psi`` per state in ``i``."""
        i = np.asarray(i, dtype=np.int64)
        a = self.hat_weight(i)
        u = rng.random(i.shape)
        psi = np.where(u < a, 1, 0).astype(np.int64)
        psi[(u >= a) & (u < 2 * a)] = 2
        edge = 2 * a
        for w, at in zip(self.jump_weights(i), self.imm.atoms):
            hit = (u >= edge) & (u < edge + w)
            if np.any(hit):
                psi[hit] = rng.poisson(self.k * at.z, size=int(hit.sum()))
            edge = edge + w
        return psi


@dataclass(frozen=True)
class ConstructionCertificate:
    K1: float
    K2: float
    K_hat: float
    gamma_tilde: float
    gamma_hat: float
    gamma_min: float
    validity_region: tuple[float, float]


@dataclass(frozen=True)
class ScaledModel:
    k: int
    gamma: float
    offspring: MixturePGF
    control: ControlFamily
    cert: ConstructionCertificate
    mech: BranchingMechanism
    imm: ImmigrationMechanism


def default_K_hat(imm: ImmigrationMechanism) -> float:
    K = growth_constant(imm)
    return 2.0 * K if K > 0 else 1.0


def build_control(imm: ImmigrationMechanism, k: int, K_hat: float | None = None) -> ControlFamily:
    """Undiluted control family with ``gamma = gamma_tilde + gamma_hat``."""
    if K_hat is None:
        K_hat = default_K_hat(imm)
    K = growth_constant(imm)
    if not K_hat > 0:
        raise ConstructionError("K_hat must be positive")
    if K_hat < 2.0 * K * (1.0 - 1e-12):
        raise ConstructionError(f"K_hat={K_hat} is below 2*growth_constant={2 * K}")
    sup_rate = 0.0
    if imm.atoms:
        pts = sorted({p for a in imm.atoms for p in a.q.breakpoints if p <= k} | {0.0, float(k)})
        sup_rate = float(np.max(imm.jump_rate(np.asarray(pts))))
    gamma_tilde = max(1.0, sup_rate)
    gamma_hat = K_hat * k**1.5
    fam = ControlFamily(k, gamma_tilde + gamma_hat, gamma_tilde, gamma_hat, float(K_hat), imm)
    root = math.sqrt(k)
    if imm.beta.sup_on(root) / (3.0 * root * K_hat) > 0.5:
        raise ConstructionError("hat coefficient exceeds 1/2; K_hat too small")
    return fam


def build_scaled_model(mech: BranchingMechanism, imm: ImmigrationMechanism, k: int,
                       K_hat: float | None = None) -> ScaledModel:
    try:
        floor = gamma_min(mech, k)
        control = build_control(imm, k, K_hat)
    except MechanismError as exc:
        raise ConstructionError(str(exc)) from exc
    gamma = max(floor, control.gamma_tilde + control.gamma_hat)
    control = ControlFamily(k, gamma, control.gamma_tilde, control.gamma_hat, control.K_hat, imm)
    offspring = build_offspring(mech, k, gamma)
    cert = ConstructionCertificate(
        K1=growth_constant(imm), K2=abs(mech.b), K_hat=control.K_hat,
        gamma_tilde=control.gamma_tilde, gamma_hat=control.gamma_hat,
        gamma_min=floor, validity_region=(float(k), float(k)),
    )
    return ScaledModel(k, gamma, offspring, control, cert, mech, imm)


def standstill_model(k: int = 1, gamma: float = 1.0) -> ScaledModel:
    """Offspring Dirac(1), no control: ``Z`` never moves."""
    mech, imm = BranchingMechanism(), ImmigrationMechanism()
    control = ControlFamily(k, gamma, 1.0, 0.0, 1.0, imm)
    cert = ConstructionCertificate(0.0, 0.0, 1.0, 1.0, 0.0, 1.0, (float(k), float(k)))
    return ScaledModel(k, gamma, MixturePGF.dirac(1), control, cert, mech, imm)


def _check_lambda(model: ScaledModel, lam):
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0) or np.any(lam > model.k):
        raise ValueError(f"lambda must lie in [0, k={model.k}]")
    return lam


def discrete_branching_exponent(model: ScaledModel, lam):
    """``R_k(lam) = k*gamma*[g(1 - lam/k) - (1 - lam/k)]``."""
    lam = _check_lambda(model, lam)
    out = model.k * model.gamma * (pgf_shift(model.offspring, -lam / model.k) + lam / model.k)
    return out if np.ndim(out) else float(out)


def discrete_immigration_exponent(model: ScaledModel, lam, x):
    """``F_k(lam, x) = gamma*[h^(floor(kx))(1 - lam/k) - 1]``."""
    lam = _check_lambda(model, lam)
    i = state_index(model.k, x)
    out = model.gamma * model.control.shift(i, -lam / model.k)
    return out if np.ndim(out) else float(out)


def laplace_image(model: ScaledModel, lam):
    """``u_k(lam) = k*[1 - g(exp(-lam/k))]``; tends to ``lam`` as k grows."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ValueError("lambda must be nonnegative")
    out = -model.k * pgf_shift(model.offspring, np.expm1(-lam / model.k))
    return out if np.ndim(out) else float(out)


def mean_drift_residual(model: ScaledModel) -> float:
    """``|gamma*(1 - g'(1)) - b|``; zero up to rounding for constructed models."""
    return abs(model.gamma * (1.0 - pgf_mean(model.offspring)) - model.mech.b)
