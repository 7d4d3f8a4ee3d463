"""Closed-form and quadrature Laplace transforms for the constant-immigration case."""
from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp

from ..cbdi_sim import feller_params


def cbi_laplace_oracle(b: float, c: float, beta: float, y0: float, t: float, lam):
    """``E[exp(-lam Y_t)]`` for ``dY = beta dt + sqrt(2cY) dB`` (critical, no jumps).

    ``exp(-y0 lam/(1 + c lam t)) * (1 + c lam t)**(-beta/c)``.
    """
    if b != 0:
        raise ValueError("closed form requires b = 0; use cbi_laplace_riccati")
    if not c > 0:
        raise ValueError("c must be positive")
    lam = np.asarray(lam, dtype=float)
    growth = 1.0 + c * lam * t
    out = np.exp(-y0 * lam / growth) * growth ** (-beta / c)
    return out if out.ndim else float(out)


def cbi_laplace_riccati(b: float, c: float, beta: float, y0: float, t: float, lam: float,
                        rtol: float = 1e-11) -> float:
    """Same transform by integrating ``v' = -(b v + c v^2)``, ``v(0) = lam``, numerically."""
    if t == 0:
        return float(np.exp(-lam * y0))

    def rhs(_s, u):
        v = u[0]
        return [-(b * v + c * v * v), v]

    sol = solve_ivp(rhs, (0.0, t), [lam, 0.0], method="DOP853", rtol=rtol, atol=1e-14)
    v_t, integral = sol.y[:, -1]
    return float(np.exp(-y0 * v_t - beta * integral))


def splitting_laplace_cbi(b: float, c: float, beta: float, y0: float, t: float, lam: float,
                          dt: float) -> float:
    """Exact Laplace transform of the splitting scheme (constant beta, no jumps) after ``t/dt`` steps.

    Each step maps ``y`` to the Feller transition of ``y + beta dt``, so the
    scheme replaces ``int_0^t v_s ds`` by the right Riemann sum ``dt sum_i v_{i dt}``.
    """
    n = int(round(t / dt))

    def v(s):
        p, theta = feller_params(b, c, s)
        return lam * p / (1.0 + theta * lam)

    riemann = sum(v(i * dt) for i in range(1, n + 1))
    return float(np.exp(-y0 * v(n * dt) - beta * dt * riemann))
