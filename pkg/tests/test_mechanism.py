import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cbdilab.mechanism import (
    BranchingMechanism,
    ExpPolynomial,
    FiniteAtomicMeasure,
    ImmigrationAtom,
    ImmigrationMechanism,
    MechanismError,
    PiecewiseLinearFn,
    branching_exponent,
    exp_compensated,
    generator_apply,
    generator_exp,
    growth_constant,
    immigration_exponent,
    lipschitz_constant,
)

EMPTY = FiniteAtomicMeasure((), ())
pos = st.floats(0.01, 5.0)
nonneg = st.floats(0.0, 5.0)


@st.composite
def branching(draw):
    n = draw(st.integers(0, 3))
    sites = sorted(set(draw(st.lists(pos, min_size=n, max_size=n))))
    weights = draw(st.lists(nonneg, min_size=len(sites), max_size=len(sites)))
    return BranchingMechanism(draw(st.floats(-2, 2)), draw(nonneg), FiniteAtomicMeasure(tuple(sites), tuple(weights)))


@st.composite
def pl_fn(draw):
    n = draw(st.integers(1, 4))
    bps = sorted(set([0.0] + draw(st.lists(st.floats(0.1, 20), min_size=n - 1, max_size=n - 1))))
    vals = draw(st.lists(nonneg, min_size=len(bps), max_size=len(bps)))
    return PiecewiseLinearFn(tuple(bps), tuple(vals), draw(st.floats(0, 2)))


@st.composite
def immigration(draw):
    atoms = tuple(ImmigrationAtom(draw(pos), draw(nonneg), draw(pl_fn()))
                  for _ in range(draw(st.integers(0, 2))))
    return ImmigrationMechanism(draw(pl_fn()), atoms)


# --- branching exponent -------------------------------------------------

def test_R_zero_mechanism():
    assert branching_exponent(BranchingMechanism(0.0, 0.0, EMPTY), 5.0) == 0.0


def test_R_drift_and_diffusion():
    assert branching_exponent(BranchingMechanism(1.0, 2.0, EMPTY), 2.0) == pytest.approx(10.0, abs=1e-14)


def test_R_single_atom():
    mech = BranchingMechanism(0.0, 0.0, FiniteAtomicMeasure.from_pairs([(1.0, 1.0)]))
    assert branching_exponent(mech, 1.0) == pytest.approx(math.exp(-1), abs=1e-12)


def test_exp_compensated_matches_direct_away_from_zero():
    t = np.array([0.6, 1.0, 3.0, 10.0])
    np.testing.assert_allclose(exp_compensated(t), np.exp(-t) - 1 + t, rtol=1e-14)


def test_exp_compensated_small_argument_has_no_cancellation():
    t = 1e-6
    assert exp_compensated(t) == pytest.approx(t * t / 2 - t**3 / 6, rel=1e-12)
    assert exp_compensated(0.0) == 0.0


@given(branching())
def test_R_vanishes_at_zero(mech):
    assert branching_exponent(mech, 0.0) == 0.0


@given(branching(), st.lists(st.floats(0, 8), min_size=3, max_size=3, unique=True))
def test_R_convex(mech, lams):
    l1, l2, l3 = sorted(lams)
    if l3 - l1 < 1e-3 or min(l2 - l1, l3 - l2) < 1e-4:
        return
    r1, r2, r3 = (branching_exponent(mech, l) for l in (l1, l2, l3))
    dd = ((r3 - r2) / (l3 - l2) - (r2 - r1) / (l2 - l1)) / (l3 - l1)
    assert dd >= -1e-9 * (1 + abs(r3))


@given(branching())
def test_R_slope_at_zero_is_b(mech):
    h = 1e-5
    # R is only defined for lam >= 0; Richardson-extrapolated forward difference is second order
    fd = 2 * branching_exponent(mech, h) / h - branching_exponent(mech, 2 * h) / (2 * h)
    assert fd == pytest.approx(mech.b, abs=1e-6 * (1 + mech.c + sum(mech.m.weights) * 25))


# --- immigration exponent -----------------------------------------------

def test_F_zero_mechanism():
    imm = ImmigrationMechanism(PiecewiseLinearFn.constant(0.0), ())
    for lam, x in [(0.0, 0.0), (1.0, 3.0), (7.5, 0.2)]:
        assert immigration_exponent(imm, lam, x) == 0.0


def test_F_constant_beta():
    imm = ImmigrationMechanism(PiecewiseLinearFn.constant(1.0), ())
    assert immigration_exponent(imm, 2.0, 7.0) == pytest.approx(-2.0, abs=1e-15)


def test_F_linear_rate_atom():
    imm = ImmigrationMechanism(PiecewiseLinearFn.constant(0.0),
                               (ImmigrationAtom(1.0, 1.0, PiecewiseLinearFn.affine(0.0, 1.0)),))
    assert immigration_exponent(imm, 1.0, 2.0) == pytest.approx(2 * (math.exp(-1) - 1), abs=1e-12)


@given(immigration(), st.floats(0, 10), st.floats(0, 50))
def test_F_sign_zero_and_growth(imm, lam, x):
    assert immigration_exponent(imm, 0.0, x) == 0.0
    f = immigration_exponent(imm, lam, x)
    assert f <= 0.0
    bound = lam * (imm.beta(x) + sum(a.q(x) * a.z * a.pi for a in imm.atoms))
    assert abs(f) <= bound * (1 + 1e-12) + 1e-15


# --- generator ------------------------------------------------------------

def test_generator_at_origin_reduces_to_F(c1):
    mech, imm = c1
    for lam in (0.5, 1.0, 2.0):
        assert generator_exp(mech, imm, lam, 0.0) == pytest.approx(immigration_exponent(imm, lam, 0.0), abs=1e-15)


def test_generator_zero_mechanisms(zero):
    mech, imm = zero
    lam, x = np.meshgrid([0.0, 0.5, 3.0], [0.0, 1.0, 9.0])
    assert np.all(generator_exp(mech, imm, lam, x) == 0.0)


def test_generator_c1_composition(c1):
    mech, imm = c1
    # hand values: R(1) = 0.5 + 0.5 + 2(e^{-1/2} - 1 + 1/2); F(1,1) = -0.3 + (e^{-1} - 1) * 0.3
    R1 = 1.0 + 2 * (math.exp(-0.5) - 0.5)
    F11 = -0.3 + (math.exp(-1) - 1) * 0.3
    assert generator_exp(mech, imm, 1.0, 1.0) == pytest.approx(math.exp(-1) * (R1 + F11), abs=1e-14)


def test_generator_vanishes_at_infinity(c1):
    mech, imm = c1
    xs = np.array([50.0, 100.0, 200.0])
    vals = np.abs(generator_exp(mech, imm, 1.0, xs))
    assert vals[-1] < 1e-70 and np.all(np.diff(vals) < 0)


def test_generator_apply_linearity(c1):
    mech, imm = c1
    f = ExpPolynomial((1.0,), (1.5,))
    assert generator_apply(mech, imm, f, 2.0) == pytest.approx(generator_exp(mech, imm, 1.5, 2.0), abs=1e-15)
    const = ExpPolynomial((3.0,), (0.0,))
    assert generator_apply(mech, imm, const, np.array([0.0, 1.0, 5.0])).tolist() == [0.0, 0.0, 0.0]
    diff = ExpPolynomial((1.0, -1.0), (1.0, 2.0))
    expect = immigration_exponent(imm, 1.0, 0.0) - immigration_exponent(imm, 2.0, 0.0)
    assert generator_apply(mech, imm, diff, 0.0) == pytest.approx(expect, abs=1e-15)


@given(branching(), immigration(),
       st.lists(st.tuples(st.floats(-3, 3), st.floats(0, 6)), min_size=1, max_size=5), st.floats(0, 10))
def test_generator_apply_exact_linearity(mech, imm, terms, x):
    f = ExpPolynomial(tuple(a for a, _ in terms), tuple(r for _, r in terms))
    direct = sum(a * generator_exp(mech, imm, r, x) for a, r in zip(f.coefficients, f.rates) if r > 0)
    assert generator_apply(mech, imm, f, x) == pytest.approx(direct, abs=1e-12)


def test_exp_polynomial_canonical_rates():
    f = ExpPolynomial((1.0, 2.0, -0.5), (1.0, 1.0, 0.0))
    assert len(set(f.rates)) == len(f.rates)
    assert f(0.7) == pytest.approx(3 * math.exp(-0.7) - 0.5)
    xs = np.linspace(0, 100, 11)
    assert np.all(np.abs(f(xs)) <= sum(abs(c) for c in f.coefficients))


# --- certificates -----------------------------------------------------------

def test_growth_constant_examples():
    assert growth_constant(ImmigrationMechanism(PiecewiseLinearFn.constant(1.0), ())) == 1.0
    assert growth_constant(ImmigrationMechanism(PiecewiseLinearFn.affine(0.0, 1.0), ())) == pytest.approx(1.0)
    assert growth_constant(ImmigrationMechanism(PiecewiseLinearFn.constant(0.0), ())) == 0.0


def test_growth_constant_c1(c1):
    # sup of (0.2 + 0.1x + min(0.3x, 15)) / (1 + x) is attained at the kink x = 50
    assert growth_constant(c1[1]) == pytest.approx(20.2 / 51, rel=1e-14)


@given(immigration())
def test_growth_constant_is_a_valid_and_tight_bound(imm):
    K = growth_constant(imm)
    bps = [imm.beta.breakpoints] + [a.q.breakpoints for a in imm.atoms]
    xs = np.concatenate([np.linspace(0, 60, 601), [1e3, 1e5], *bps])
    ratio = imm.mean_rate(xs) / (1 + xs)
    assert np.all(ratio <= K * (1 + 1e-12) + 1e-15)
    assert ratio.max() >= K * (1 - 1e-9) - 1e-12 or K == pytest.approx(max(imm.beta.tail_slope, 0) + sum(
        a.q.tail_slope * a.z * a.pi for a in imm.atoms), rel=1e-9)


def test_lipschitz_examples():
    const = ImmigrationMechanism(PiecewiseLinearFn.constant(0.4),
                                 (ImmigrationAtom(1.0, 1.0, PiecewiseLinearFn.constant(2.0)),))
    assert lipschitz_constant(const) == 0.0
    assert lipschitz_constant(ImmigrationMechanism(PiecewiseLinearFn.affine(0.2, 0.1), ())) == pytest.approx(0.1)
    one = ImmigrationMechanism(PiecewiseLinearFn.constant(0.0),
                               (ImmigrationAtom(2.0, 0.5, PiecewiseLinearFn.affine(0.0, 3.0)),))
    assert lipschitz_constant(one) == pytest.approx(3.0)


@given(immigration(), st.floats(0, 30), st.floats(0, 30))
def test_lipschitz_bounds_mean_rate_increments(imm, x, y):
    L = lipschitz_constant(imm)
    assert abs(imm.mean_rate(x) - imm.mean_rate(y)) <= L * abs(x - y) * (1 + 1e-9) + 1e-12


# --- validation ---------------------------------------------------------------

def test_atomic_measure_validation():
    with pytest.raises(MechanismError):
        FiniteAtomicMeasure((0.0,), (1.0,))
    with pytest.raises(MechanismError):
        FiniteAtomicMeasure((1.0,), (-1.0,))
    with pytest.raises(MechanismError):
        FiniteAtomicMeasure((1.0, 1.0), (1.0, 1.0))
    assert FiniteAtomicMeasure((2.0, 1.0), (3.0, 4.0)).weights == (4.0, 3.0)
    m = FiniteAtomicMeasure.from_pairs([(2.0, 1.0), (0.5, 4.0)])
    assert m.sites == (0.5, 2.0) and m.mass == 5.0 and m.first_moment == pytest.approx(4.0)


def test_branching_rejects_negative_c():
    with pytest.raises(MechanismError):
        BranchingMechanism(0.0, -1.0, EMPTY)


@given(pl_fn(), st.floats(0, 100))
def test_pl_fn_continuous_nonnegative(f, x):
    assert f(x) >= 0
    assert abs(f(x + 1e-7) - f(x)) <= f.lipschitz * 1e-7 * (1 + 1e-6) + 1e-12
