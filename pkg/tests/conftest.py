import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

from cbdilab.mechanism import (  # noqa: E402
    BranchingMechanism,
    FiniteAtomicMeasure,
    ImmigrationAtom,
    ImmigrationMechanism,
    PiecewiseLinearFn,
)

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

REPO = Path(__file__).resolve().parents[1]
C1_PATH = REPO / "configs" / "c1.yaml"


def c1_mechanisms(b: float = 0.5):
    mech = BranchingMechanism(b, 0.5, FiniteAtomicMeasure.from_pairs([(0.5, 2.0)]))
    imm = ImmigrationMechanism(
        PiecewiseLinearFn.affine(0.2, 0.1),
        (ImmigrationAtom(1.0, 1.0, PiecewiseLinearFn((0.0, 50.0), (0.0, 15.0), 0.0)),),
    )
    return mech, imm


def zero_mechanisms():
    return (BranchingMechanism(0.0, 0.0, FiniteAtomicMeasure((), ())),
            ImmigrationMechanism(PiecewiseLinearFn.constant(0.0), ()))


@pytest.fixture(scope="session")
def c1():
    return c1_mechanisms()


@pytest.fixture(scope="session")
def zero():
    return zero_mechanisms()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for ac in sorted(results, key=lambda a: int(a[2:])):
        ok, detail = results[ac]
        terminalreporter.write_line(f"{ac} {'PASS' if ok else 'FAIL'}: {detail}")
