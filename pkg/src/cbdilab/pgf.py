"""Finite-mixture probability generating functions.

A law is a mixture of ``Dirac(0)``, ``Dirac(1)``, ``Dirac(2)`` and
``Poisson(mu)`` components.  This class is closed under the constructions
in :mod:`cbdilab.construct`, and sums of ``n`` i.i.d. draws can be sampled
in ``O(#components)`` steps: split ``n`` multinomially over components,
then use Poisson additivity.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

WEIGHT_TOL = 1e-9


@dataclass(frozen=True)
class Dirac:
    order: int

    def __post_init__(self):
        if self.order not in (0, 1, 2):
            raise ValueError(f"Dirac order must be 0, 1 or 2, got {self.order}")

    @property
    def mean(self) -> float:
        return float(self.order)


@dataclass(frozen=True)
class Poisson:
    mu: float

    def __post_init__(self):
        if not (self.mu > 0 and np.isfinite(self.mu)):
            raise ValueError(f"Poisson mean must be positive, got {self.mu}")
        object.__setattr__(self, "mu", float(self.mu))

    @property
    def mean(self) -> float:
        return self.mu


Component = Union[Dirac, Poisson]


@dataclass(frozen=True)
class MixturePGF:
    weights: tuple[float, ...]
    components: tuple[Component, ...]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or len(w) != len(self.components) or len(w) == 0:
            raise ValueError("need one weight per component")
        if np.any(~np.isfinite(w)) or np.any(w < -WEIGHT_TOL):
            raise ValueError(f"weights must be nonnegative, got {w.tolist()}")
        w = np.clip(w, 0.0, None)
        total = w.sum()
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights sum to {total!r}, not 1")
        w = w / total
        object.__setattr__(self, "weights", tuple(float(v) for v in w))
        object.__setattr__(self, "components", tuple(self.components))

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[float, Component]]) -> "MixturePGF":
        pairs = list(pairs)
        return cls(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))

    @classmethod
    def dirac(cls, order: int) -> "MixturePGF":
        return cls((1.0,), (Dirac(order),))

    @classmethod
    def poisson(cls, mu: float) -> "MixturePGF":
        return cls((1.0,), (Poisson(mu),))

    def __iter__(self):
        return iter(zip(self.weights, self.components))


def _check_unit(s):
    s = np.asarray(s, dtype=float)
    if np.any((s < 0) | (s > 1)) or np.any(np.isnan(s)):
        raise ValueError("pgf argument must lie in [0, 1]")
    return s


def pgf_eval(law: MixturePGF, s):
    """``E[s^X]`` for ``s`` in [0, 1]."""
    s = _check_unit(s)
    out = np.zeros_like(s)
    for w, comp in law:
        if isinstance(comp, Dirac):
            out = out + w * s**comp.order
        else:
            out = out + w * np.exp(-comp.mu * (1.0 - s))
    return out if out.ndim else float(out)


def pgf_shift(law: MixturePGF, d):
    """``E[(1+d)^X] - 1`` for ``d`` in [-1, 0], accurate when ``d`` is tiny."""
    d = np.asarray(d, dtype=float)
    if np.any((d < -1) | (d > 0)):
        raise ValueError("shift must lie in [-1, 0]")
    out = np.zeros_like(d)
    for w, comp in law:
        if isinstance(comp, Dirac):
            if comp.order == 1:
                out = out + w * d
            elif comp.order == 2:
                out = out + w * d * (2.0 + d)
        else:
            out = out + w * np.expm1(comp.mu * d)
    return out if out.ndim else float(out)


def pgf_mean(law: MixturePGF) -> float:
    return float(sum(w * comp.mean for w, comp in law))


def pgf_variance(law: MixturePGF) -> float:
    second = 0.0
    for w, comp in law:
        if isinstance(comp, Dirac):
            second += w * comp.order**2
        else:
            second += w * (comp.mu + comp.mu**2)
    return second - pgf_mean(law) ** 2


def pgf_power_eval(law: MixturePGF, s, n):
    """``pgf_eval(law, s) ** n`` in the log domain."""
    n = np.asarray(n, dtype=float)
    if np.any(n < 0):
        raise ValueError("exponent must be nonnegative")
    g = np.asarray(pgf_eval(law, s), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        logged = np.exp(n * np.log(g))
    out = np.where(n == 0, 1.0, np.where(g == 0, 0.0, logged))
    return out if out.ndim else float(out)


def pgf_sample(law: MixturePGF, rng: np.random.Generator, size=None):
    """Draw from the mixture law."""
    shape = () if size is None else size
    idx = rng.choice(len(law.weights), size=shape, p=np.asarray(law.weights))
    idx = np.asarray(idx)
    out = np.zeros(idx.shape, dtype=np.int64)
    for j, comp in enumerate(law.components):
        hit = idx == j
        if isinstance(comp, Dirac):
            out[hit] = comp.order
        else:
            out[hit] = rng.poisson(comp.mu, size=int(hit.sum()))
    return int(out) if size is None else out


def multinomial_counts(n, probs, rng: np.random.Generator) -> np.ndarray:
    """Split counts ``n`` over categories by sequential conditional binomials.

    Returns an array of shape ``n.shape + (len(probs),)``.  Categories are
    visited rarest first; the last one takes the remainder.
    """
    n = np.asarray(n, dtype=np.int64)
    probs = np.asarray(probs, dtype=float)
    order = np.argsort(probs, kind="stable")
    counts = np.zeros(n.shape + (len(probs),), dtype=np.int64)
    remaining = n.copy()
    rest = 1.0
    for pos, j in enumerate(order):
        if pos == len(order) - 1:
            counts[..., j] = remaining
            break
        p = probs[j]
        if p <= 0.0:
            continue
        cond = min(1.0, p / rest) if rest > 0 else 1.0
        draw = rng.binomial(remaining, cond)
        counts[..., j] = draw
        remaining = remaining - draw
        rest -= p
    return counts


def iid_sum_sample(law: MixturePGF, n, rng: np.random.Generator):
    """Sum of ``n`` i.i.d. draws from ``law`` without an ``n``-fold loop.

    ``n`` may be an integer or an integer array; the output has its shape.
    """
    scalar = np.ndim(n) == 0
    n = np.asarray(n, dtype=np.int64)
    if np.any(n < 0):
        raise ValueError("n must be nonnegative")
    counts = multinomial_counts(n, law.weights, rng)
    total = np.zeros(n.shape, dtype=np.int64)
    for j, comp in enumerate(law.components):
        cj = counts[..., j]
        if isinstance(comp, Dirac):
            if comp.order:
                total += comp.order * cj
        else:
            active = cj > 0
            if np.any(active):
                total[active] += rng.poisson(cj[active] * comp.mu)
    return int(total) if scalar else total
