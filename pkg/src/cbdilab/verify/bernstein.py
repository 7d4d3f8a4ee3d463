"""Exponential-polynomial approximation ``f_n(x) = B_n(p, e^{-x})`` of ``f(x) = p(e^{-x})``.

For a polynomial ``p`` the Bernstein operator has a closed form in the
monomial basis,

    B_n(u^m)(y) = sum_j S(m, j) * n(n-1)...(n-j+1) / n^m * y^j

with ``S`` the Stirling numbers of the second kind, so ``f_n`` has at most
``deg(p) + 1`` exponential terms and no cancellation between the ``n + 1``
Bernstein basis functions.  :func:`bernstein_eval_direct` evaluates the
defining sum instead and serves as an independent check.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.special import gammaln

from ..mechanism import ExpPolynomial


@lru_cache(maxsize=None)
def stirling2(m: int, j: int) -> int:
    if m == j:
        return 1
    if j == 0 or j > m:
        return 0
    return j * stirling2(m - 1, j) + stirling2(m - 1, j - 1)


def _coeffs(p_coeffs: Sequence[float]) -> np.ndarray:
    c = np.trim_zeros(np.asarray(p_coeffs, dtype=float), "b")
    return c if c.size else np.zeros(1)


def bernstein_approx(p_coeffs: Sequence[float], n: int) -> ExpPolynomial:
    """``f_n`` as an exponential polynomial; ``p_coeffs`` are ascending powers of ``u``."""
    c = _coeffs(p_coeffs)
    if c[0] != 0.0:
        raise ValueError("p(0) must be 0 so that f_n decays at infinity")
    deg = c.size - 1
    if n < 1 or deg > n:
        raise ValueError(f"need n >= max(1, deg p) (deg p = {deg}, n = {n})")
    out = np.zeros(deg + 1)
    for m in range(1, deg + 1):
        if c[m] == 0.0:
            continue
        falling = 1
        for j in range(1, m + 1):
            falling *= n - j + 1
            out[j] += c[m] * float(Fraction(stirling2(m, j) * falling, n**m))
    rates = [float(j) for j in range(1, deg + 1) if out[j] != 0.0]
    coeffs = [out[j] for j in range(1, deg + 1) if out[j] != 0.0]
    return ExpPolynomial(tuple(coeffs), tuple(rates))


def bernstein_eval_direct(p_coeffs: Sequence[float], n: int, x) -> np.ndarray:
    """``sum_{r=1}^n C(n,r) p(r/n) e^{-rx} (1 - e^{-x})^{n-r}`` with log-space binomials."""
    c = _coeffs(p_coeffs)
    x = np.atleast_1d(np.asarray(x, dtype=float))[:, None]
    r = np.arange(1, n + 1)[None, :]
    log_binom = gammaln(n + 1) - gammaln(r + 1) - gammaln(n - r + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_rest = np.log(-np.expm1(-x))
        expo = log_binom - r * x + np.where(n - r > 0, (n - r) * log_rest, 0.0)
    terms = P.polyval(r / n, c) * np.exp(expo)
    return terms.sum(axis=1)


def target_derivatives(p_coeffs: Sequence[float], x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``f, f', f''`` for ``f(x) = p(e^{-x})``."""
    c = _coeffs(p_coeffs)
    y = np.exp(-np.asarray(x, dtype=float))
    d1, d2 = P.polyder(c), P.polyder(c, 2)
    f = P.polyval(y, c)
    f1 = -y * P.polyval(y, d1)
    f2 = y * P.polyval(y, d1) + y * y * P.polyval(y, d2)
    return f, f1, f2


@dataclass
class BernsteinRow:
    n: int
    err_f: float
    err_f1: float
    err_f2: float


def bernstein_report(p_coeffs: Sequence[float], n_list: Sequence[int], grid) -> list[BernsteinRow]:
    """Sup-norm errors of ``f_n, f_n', f_n''`` on ``grid`` for each ``n``."""
    grid = np.asarray(grid, dtype=float)
    f, f1, f2 = target_derivatives(p_coeffs, grid)
    rows = []
    for n in n_list:
        fn = bernstein_approx(p_coeffs, n)
        rows.append(BernsteinRow(
            int(n),
            float(np.max(np.abs(fn.derivative_eval(grid, 0) - f))),
            float(np.max(np.abs(fn.derivative_eval(grid, 1) - f1))),
            float(np.max(np.abs(fn.derivative_eval(grid, 2) - f2))),
        ))
    return rows
