import numpy as np
import pytest

from homlab.channels import additive_mac, build_mac_joint
from homlab.prob import Pmf


@pytest.fixture
def additive():
    """Y = X1 + X2 + Z over F_2, Z ~ Bern(0.1), uniform inputs, a = (1, 1)."""
    return additive_mac(2, [0.9, 0.1])


@pytest.fixture
def additive_joint(additive):
    return build_mac_joint(additive)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def h2(p):
    return 0.0 if p in (0, 1) else -p * np.log2(p) - (1 - p) * np.log2(1 - p)


@pytest.fixture
def uniform2():
    return Pmf.uniform(2)


# ---------------------------------------------------------------- acceptance log

_ACCEPTANCE = {}


def record_acceptance(number, title, passed, detail=""):
    _ACCEPTANCE[number] = (title, passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, passed, detail = _ACCEPTANCE[number]
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d} {verdict}  {title}: {detail}")
