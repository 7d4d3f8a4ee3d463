import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cbdilab.cbdi_sim import (
    SdeConfig,
    feller_laplace,
    feller_params,
    feller_step_exact,
    sde_marginals,
    sde_step,
    snap_grid,
)
from cbdilab.mechanism import (
    BranchingMechanism,
    FiniteAtomicMeasure,
    ImmigrationMechanism,
    PiecewiseLinearFn,
)
from cbdilab.rng import stream
from cbdilab.verify import cbi_laplace_oracle, cbi_laplace_riccati, splitting_laplace_cbi
from conftest import c1_mechanisms, zero_mechanisms

EMPTY = FiniteAtomicMeasure((), ())


def cbi(beta=1.0, b=0.0, c=1.0):
    return BranchingMechanism(b, c, EMPTY), ImmigrationMechanism(PiecewiseLinearFn.constant(beta), ())


# --- Feller step ---------------------------------------------------------------

@given(st.floats(-1, 1), st.floats(0, 5), st.floats(0.01, 2))
def test_feller_deterministic_case(b, y, h):
    assert feller_step_exact(b, 0.0, y, h, stream(0, "test", 0)) == y * feller_params(b, 0.0, h)[0]


def test_feller_absorbing_zero():
    assert feller_step_exact(0.3, 1.0, 0.0, 0.5, stream(0, "test", 0)) == 0.0
    assert np.all(feller_step_exact(-0.3, 2.0, np.zeros(100), 0.5, stream(0, "test", 0)) == 0.0)


def test_feller_rejects_nonpositive_h():
    with pytest.raises(ValueError):
        feller_step_exact(0.0, 1.0, 1.0, 0.0, stream(0, "test", 0))


@pytest.mark.parametrize("b", [-0.4, 0.0, 0.4])
def test_feller_transform_matches_riccati(b):
    for lam in (0.5, 1.0, 2.0):
        closed = feller_laplace(b, 1.0, 2.0, 0.25, lam)
        assert closed == pytest.approx(cbi_laplace_riccati(b, 1.0, 0.0, 2.0, 0.25, lam), abs=1e-10)


@pytest.mark.parametrize("b", [-0.4, 0.0, 0.4])
def test_feller_sampler_laplace(b):
    y = feller_step_exact(b, 1.0, np.full(200_000, 2.0), 0.25, stream(1, "test", 0))
    assert np.all(y >= 0)
    for lam in (0.5, 1.0, 2.0):
        v = np.exp(-lam * y)
        se = v.std(ddof=1) / np.sqrt(v.size)
        assert abs(v.mean() - feller_laplace(b, 1.0, 2.0, 0.25, lam)) <= 3 * se


def test_feller_params_b_zero_limit():
    p, theta = feller_params(1e-12, 2.0, 0.5)
    assert p == pytest.approx(1.0) and theta == pytest.approx(1.0, rel=1e-9)
    assert feller_params(0.0, 2.0, 0.5) == (1.0, 1.0)


# --- splitting step ---------------------------------------------------------------

def test_sde_step_zero_mechanisms():
    mech, imm = zero_mechanisms()
    y = np.array([0.0, 0.7, 3.0])
    assert np.array_equal(sde_step(mech, imm, y, 0.01, stream(0, "test", 0)), y)


def test_sde_step_pure_immigration():
    mech, imm = cbi(beta=1.0, c=0.0)
    y, h = 0.25, 2.0**-6
    for _ in range(64):
        y = sde_step(mech, imm, y, h, stream(0, "test", 0))
    assert y == 0.25 + 64 * h


def test_sde_step_null_jumps_is_feller():
    mech, imm = cbi(beta=0.0, b=0.3, c=0.7)
    y = np.linspace(0, 5, 1000)
    a = sde_step(mech, imm, y, 0.01, stream(4, "test", 0))
    b = feller_step_exact(0.3, 0.7, y, 0.01, stream(4, "test", 0))
    assert np.array_equal(a, b)


def test_sde_step_nonnegative():
    mech, imm = c1_mechanisms(-0.3)
    y = np.linspace(0, 10, 5000)
    for n in range(20):
        y = sde_step(mech, imm, y, 0.05, stream(5, "test", n))
        assert np.all(y >= 0)


def test_weak_order_one():
    # the scheme's exact Laplace transform for constant immigration is a Riemann sum of v_s
    oracle = cbi_laplace_oracle(0.0, 1.0, 1.0, 1.0, 1.0, 1.0)
    bias = [splitting_laplace_cbi(0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 2.0**-e) - oracle for e in (8, 9, 10)]
    assert bias[1] / bias[0] == pytest.approx(0.5, rel=0.5)
    assert bias[2] / bias[1] == pytest.approx(0.5, rel=0.5)
    assert abs(bias[2]) < 1e-3


def test_scheme_transform_matches_sampler():
    mech, imm = cbi(beta=1.0)
    cfg = SdeConfig(mech, imm, 2.0**-4, (1.0,), 100_000, 3)
    ens = sde_marginals(cfg)
    for lam in (0.5, 2.0):
        v = np.exp(-lam * ens.at(1.0))
        se = v.std(ddof=1) / np.sqrt(v.size)
        assert abs(v.mean() - splitting_laplace_cbi(0.0, 1.0, 1.0, 1.0, 1.0, lam, 2.0**-4)) <= 4 * se


def test_compensated_branching_is_mean_preserving():
    mech = BranchingMechanism(0.0, 0.5, FiniteAtomicMeasure.from_pairs([(0.5, 2.0)]))
    imm = ImmigrationMechanism(PiecewiseLinearFn.constant(0.0), ())
    ens = sde_marginals(SdeConfig(mech, imm, 2.0**-6, (0.25, 0.5, 1.0), 40_000, 8, y0=1.0))
    for t in ens.t_grid:
        x = ens.at(t)
        assert abs(x.mean() - 1.0) <= 4 * x.std(ddof=1) / np.sqrt(x.size)


# --- marginals ------------------------------------------------------------------

def test_marginals_time_zero_and_zero_mechanisms():
    mech, imm = c1_mechanisms()
    ens = sde_marginals(SdeConfig(mech, imm, 0.01, (0.0,), 20, 1, y0=1.7))
    assert np.all(ens.samples == 1.7)
    zm, zi = zero_mechanisms()
    ens = sde_marginals(SdeConfig(zm, zi, 0.125, (0.0, 0.5, 1.0), 20, 1, y0=0.4))
    assert np.all(ens.samples == 0.4)


def test_marginals_workers_and_determinism():
    mech, imm = c1_mechanisms()
    cfg = SdeConfig(mech, imm, 2.0**-5, (0.5, 1.0), 9000, 12)
    a, b = sde_marginals(cfg, workers=1), sde_marginals(cfg, workers=3)
    assert a.to_csv_text() == b.to_csv_text()
    assert np.all(a.samples >= 0)


def test_drift_floor_reported():
    mech = BranchingMechanism(0.0, 0.1, FiniteAtomicMeasure.from_pairs([(1.0, 2000.0)]))
    imm = ImmigrationMechanism(PiecewiseLinearFn.constant(0.0), ())
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        ens = sde_marginals(SdeConfig(mech, imm, 2.0**-10, (2.0**-8,), 50, 1))
    assert ens.meta["drift_floor_events"] > 0
    assert any("floored" in str(w.message) for w in caught)
    assert np.all(ens.samples >= 0)


def test_config_validation():
    mech, imm = cbi()
    with pytest.raises(ValueError):
        SdeConfig(mech, imm, 0.3, (1.0,), 10, 0)
    with pytest.raises(ValueError):
        SdeConfig(mech, imm, 0.25, (1.0, 0.5), 10, 0)
    with pytest.raises(ValueError):
        SdeConfig(mech, imm, 0.0, (1.0,), 10, 0)
    assert SdeConfig(mech, imm, 0.25, (0.5, 1.0), 10, 0).step_indices() == [2, 4]


def test_snap_grid():
    snapped, moved = snap_grid([0.5, 1.0], 0.3)
    assert moved and snapped == pytest.approx((0.6, 0.9))
    snapped, moved = snap_grid([0.5, 1.0], 2.0**-10)
    assert not moved and snapped == (0.5, 1.0)
