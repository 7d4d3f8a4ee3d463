"""Limit mechanisms of the branching process with dependent immigration.

The branching mechanism is

    R(lam) = b*lam + c*lam**2 + sum_j m_j * (exp(-lam*z_j) - 1 + lam*z_j)

and the immigration mechanism is

    F(lam, x) = -beta(x)*lam + sum_j (exp(-lam*z_j) - 1) * q_j(x) * pi_j

with finite atomic jump measures and nonnegative piecewise-linear
``beta`` and ``q_j``.  The generator of the limit SDE acting on
``e_lam(x) = exp(-lam*x)`` is ``x*e_lam(x)*R(lam) + e_lam(x)*F(lam, x)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class MechanismError(ValueError):
    """Raised when a mechanism is malformed."""


def exp_compensated(t):
    """Return ``exp(-t) - 1 + t`` without cancellation for small ``t``."""
    t = np.asarray(t, dtype=float)
    small = np.abs(t) < 0.5
    ts = np.where(small, t, 0.0)
    # alternating series t^2/2 - t^3/6 + ...; 20 terms reach machine precision for |t|<0.5
    series = np.zeros_like(ts)
    term = ts * ts / 2.0
    for n in range(3, 23):
        series = series + term
        term = -term * ts / n
    direct = np.expm1(-t) + t
    out = np.where(small, series, direct)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class FiniteAtomicMeasure:
    """Finite measure ``sum_j w_j * delta_{z_j}`` on (0, inf)."""

    sites: tuple[float, ...] = ()
    weights: tuple[float, ...] = ()

    def __post_init__(self):
        sites = tuple(float(s) for s in self.sites)
        weights = tuple(float(w) for w in self.weights)
        if len(sites) != len(weights):
            raise MechanismError("sites and weights must have equal length")
        for s in sites:
            if not (s > 0 and np.isfinite(s)):
                raise MechanismError(f"site must be positive, got {s}")
        for w in weights:
            if not (w >= 0 and np.isfinite(w)):
                raise MechanismError(f"weight must be nonnegative, got {w}")
        if any(b <= a for a, b in zip(sites, sites[1:])):
            order = np.argsort(sites, kind="stable")
            sites = tuple(sites[i] for i in order)
            weights = tuple(weights[i] for i in order)
            if any(b <= a for a, b in zip(sites, sites[1:])):
                raise MechanismError("atom sites must be distinct")
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_pairs(cls, pairs: Sequence[Sequence[float]]) -> "FiniteAtomicMeasure":
        pairs = list(pairs)
        return cls(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))

    def __len__(self):
        return len(self.sites)

    @property
    def mass(self) -> float:
        return float(sum(self.weights))

    @property
    def first_moment(self) -> float:
        return float(sum(w * z for z, w in zip(self.sites, self.weights)))


@dataclass(frozen=True)
class PiecewiseLinearFn:
    """Continuous nonnegative piecewise-linear function on [0, inf).

    Linear interpolation between ``breakpoints`` (the first must be 0), then
    linear extension with ``tail_slope`` past the last breakpoint.
    """

    breakpoints: tuple[float, ...] = (0.0,)
    values: tuple[float, ...] = (0.0,)
    tail_slope: float = 0.0

    def __post_init__(self):
        bp = tuple(float(v) for v in self.breakpoints)
        vals = tuple(float(v) for v in self.values)
        slope = float(self.tail_slope)
        if not bp or len(bp) != len(vals):
            raise MechanismError("breakpoints and values must be nonempty and of equal length")
        if bp[0] != 0.0:
            raise MechanismError("first breakpoint must be 0")
        if any(b <= a for a, b in zip(bp, bp[1:])):
            raise MechanismError("breakpoints must be strictly increasing")
        if any(not (v >= 0 and np.isfinite(v)) for v in vals):
            raise MechanismError("values must be finite and nonnegative")
        if not (slope >= 0 and np.isfinite(slope)):
            raise MechanismError("tail_slope must be finite and nonnegative")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "tail_slope", slope)

    @classmethod
    def constant(cls, value: float) -> "PiecewiseLinearFn":
        return cls((0.0,), (value,), 0.0)

    @classmethod
    def affine(cls, intercept: float, slope: float) -> "PiecewiseLinearFn":
        return cls((0.0,), (intercept,), slope)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        bp = np.asarray(self.breakpoints)
        vals = np.asarray(self.values)
        inner = np.interp(x, bp, vals)
        out = np.where(x > bp[-1], vals[-1] + self.tail_slope * (x - bp[-1]), inner)
        return out if out.ndim else float(out)

    def slopes(self) -> np.ndarray:
        bp = np.asarray(self.breakpoints)
        vals = np.asarray(self.values)
        inner = np.diff(vals) / np.diff(bp) if len(bp) > 1 else np.zeros(0)
        return np.append(inner, self.tail_slope)

    @property
    def lipschitz(self) -> float:
        return float(np.max(np.abs(self.slopes())))

    def sup_on(self, upper: float) -> float:
        """Maximum over [0, upper]; attained at a breakpoint or at ``upper``."""
        pts = [b for b in self.breakpoints if b <= upper] + [upper]
        return float(np.max(self(np.asarray(pts))))


@dataclass(frozen=True)
class BranchingMechanism:
    b: float = 0.0
    c: float = 0.0
    m: FiniteAtomicMeasure = field(default_factory=FiniteAtomicMeasure)

    def __post_init__(self):
        if not np.isfinite(self.b):
            raise MechanismError("b must be finite")
        if not (self.c >= 0 and np.isfinite(self.c)):
            raise MechanismError("c must be nonnegative")
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "c", float(self.c))

    @property
    def b_plus(self) -> float:
        return max(self.b, 0.0)

    @property
    def b_minus(self) -> float:
        return max(-self.b, 0.0)


@dataclass(frozen=True)
class ImmigrationAtom:
    z: float
    pi: float
    q: PiecewiseLinearFn

    def __post_init__(self):
        if not (self.z > 0 and np.isfinite(self.z)):
            raise MechanismError(f"site must be positive, got {self.z}")
        if not (self.pi >= 0 and np.isfinite(self.pi)):
            raise MechanismError(f"pi must be nonnegative, got {self.pi}")
        object.__setattr__(self, "z", float(self.z))
        object.__setattr__(self, "pi", float(self.pi))


@dataclass(frozen=True)
class ImmigrationMechanism:
    beta: PiecewiseLinearFn = field(default_factory=lambda: PiecewiseLinearFn.constant(0.0))
    atoms: tuple[ImmigrationAtom, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))

    def jump_rate(self, x):
        """Total immigration jump intensity ``sum_j pi_j q_j(x)``."""
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for a in self.atoms:
            out = out + a.pi * a.q(x)
        return out if out.ndim else float(out)

    def mean_rate(self, x):
        """Immigration mean rate ``beta(x) + sum_j q_j(x) z_j pi_j``."""
        x = np.asarray(x, dtype=float)
        out = np.asarray(self.beta(x), dtype=float)
        for a in self.atoms:
            out = out + a.z * a.pi * a.q(x)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class ExpPolynomial:
    """Finite combination ``x -> sum_i a_i exp(-rate_i x)`` with rates >= 0."""

    coefficients: tuple[float, ...] = ()
    rates: tuple[float, ...] = ()

    def __post_init__(self):
        if len(self.coefficients) != len(self.rates):
            raise ValueError("coefficients and rates must have equal length")
        merged: dict[float, float] = {}
        for a, r in zip(self.coefficients, self.rates):
            r = float(r)
            if not (r >= 0 and np.isfinite(r)):
                raise ValueError(f"rates must be nonnegative, got {r}")
            merged[r] = merged.get(r, 0.0) + float(a)
        rates = tuple(sorted(merged))
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "coefficients", tuple(merged[r] for r in rates))

    def __call__(self, x):
        return self.derivative_eval(x, 0)

    def derivative_eval(self, x, order: int = 0):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for a, r in zip(self.coefficients, self.rates):
            out = out + a * (-r) ** order * np.exp(-r * x)
        return out if out.ndim else float(out)

    def __len__(self):
        return len(self.rates)


def branching_exponent(mech: BranchingMechanism, lam):
    """R(lam) for the branching mechanism."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ValueError("lambda must be nonnegative")
    out = mech.b * lam + mech.c * lam * lam
    for z, w in zip(mech.m.sites, mech.m.weights):
        out = out + w * exp_compensated(lam * z)
    out = np.where(lam == 0.0, 0.0, out)
    return out if out.ndim else float(out)


def immigration_exponent(imm: ImmigrationMechanism, lam, x):
    """F(lam, x) for the immigration mechanism; always <= 0."""
    lam = np.asarray(lam, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(lam < 0) or np.any(x < 0):
        raise ValueError("lambda and x must be nonnegative")
    out = -imm.beta(x) * lam
    for a in imm.atoms:
        out = out + np.expm1(-lam * a.z) * a.q(x) * a.pi
    out = np.where(lam == 0.0, 0.0, out)
    return out if out.ndim else float(out)


def generator_exp(mech: BranchingMechanism, imm: ImmigrationMechanism, lam, x):
    """Limit generator applied to ``exp(-lam * .)`` evaluated at ``x``."""
    lam = np.asarray(lam, dtype=float)
    x = np.asarray(x, dtype=float)
    e = np.exp(-lam * x)
    out = x * e * branching_exponent(mech, lam) + e * immigration_exponent(imm, lam, x)
    return out if np.ndim(out) else float(out)


def generator_apply(mech: BranchingMechanism, imm: ImmigrationMechanism, f: ExpPolynomial, x):
    """Limit generator applied to an exponential polynomial, by linearity."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for a, r in zip(f.coefficients, f.rates):
        if r == 0.0:
            continue
        out = out + a * generator_exp(mech, imm, r, x)
    return out if out.ndim else float(out)


def _mean_rate_pieces(imm: ImmigrationMechanism):
    pts = set(imm.beta.breakpoints)
    slope = imm.beta.tail_slope
    for a in imm.atoms:
        pts.update(a.q.breakpoints)
        slope += a.q.tail_slope * a.z * a.pi
    return np.array(sorted(pts)), slope


def growth_constant(imm: ImmigrationMechanism) -> float:
    """Smallest K with ``beta(x) + sum_j q_j(x) z_j pi_j <= K (1 + x)`` on [0, inf).

    The ratio to ``1 + x`` is monotone on each linear piece, so the supremum
    is attained at a breakpoint or approached along the tail.
    """
    pts, tail = _mean_rate_pieces(imm)
    ratios = imm.mean_rate(pts) / (1.0 + pts)
    k = max(float(np.max(ratios)), tail)
    if not np.isfinite(k):
        raise MechanismError("immigration growth is unbounded")
    return k


def lipschitz_constant(imm: ImmigrationMechanism) -> float:
    """Linear modulus ``L`` with ``|beta(x)-beta(y)| + sum_j |q_j(x)-q_j(y)| z_j pi_j <= L|x-y|``."""
    return imm.beta.lipschitz + sum(a.q.lipschitz * a.z * a.pi for a in imm.atoms)
