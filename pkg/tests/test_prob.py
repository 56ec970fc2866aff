import itertools
from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from homlab.errors import (AbsoluteContinuityViolation, EmptySequence, LengthMismatch,
                           OverlappingAxes, PmfError, UnknownAxis)
from homlab.gf import FieldVector
from homlab.prob import (JointPmf, Pmf, conditional_entropy, empirical_type, entropy,
                         is_typical, kl_divergence, mutual_information)

from conftest import h2


def bsc_joint(p=0.1):
    return JointPmf(("X", "Y"), [[0.5 * (1 - p), 0.5 * p], [0.5 * p, 0.5 * (1 - p)]])


def single(probs, name="X"):
    return JointPmf((name,), probs)


def test_entropy_examples():
    assert entropy(single([0.5, 0.5]), "X") == pytest.approx(1.0)
    assert entropy(single([1.0, 0.0]), "X") == 0.0
    assert entropy(single([0.9, 0.1]), "X") == pytest.approx(0.46900, abs=1e-5)
    assert entropy(single([1 / 3] * 3), "X", base=3) == pytest.approx(1.0)


def test_conditional_entropy_examples():
    j = bsc_joint()
    assert conditional_entropy(j, "X", "Y") == pytest.approx(0.46900, abs=1e-5)
    ind = JointPmf(("X", "Y"), np.outer([0.3, 0.7], [0.5, 0.5]))
    assert conditional_entropy(ind, "X", "Y") == pytest.approx(entropy(ind, "X"))
    with pytest.raises(OverlappingAxes):
        conditional_entropy(j, "X", "X")


def test_mutual_information_examples():
    assert mutual_information(bsc_joint(), "X", "Y") == pytest.approx(0.53100, abs=1e-5)
    eq = JointPmf(("X", "Y"), [[0.5, 0], [0, 0.5]])
    assert mutual_information(eq, "X", "Y") == pytest.approx(1.0)
    ind = JointPmf(("X", "Y"), np.outer([0.3, 0.7], [0.2, 0.8]))
    assert mutual_information(ind, "X", "Y") == 0.0
    with pytest.raises(UnknownAxis):
        mutual_information(ind, "X", "Z")


def test_kl_examples():
    p = Pmf([0.9, 0.1])
    assert kl_divergence(p, p) == 0.0
    assert kl_divergence(Pmf.uniform(2), Pmf.uniform(2)) == 0.0
    assert kl_divergence(p, Pmf.uniform(2)) == pytest.approx(1 - h2(0.1), abs=1e-12)
    with pytest.raises(AbsoluteContinuityViolation):
        kl_divergence(Pmf.uniform(2), Pmf([1.0, 0.0]))


def test_empirical_type_examples():
    assert empirical_type(FieldVector([0, 1, 0, 1], 2)).as_dict() == {0: Fraction(1, 2),
                                                                     1: Fraction(1, 2)}
    assert empirical_type(FieldVector([0, 0, 0, 0], 2)).as_dict() == {0: Fraction(1)}
    t = empirical_type(FieldVector([0, 0, 1, 2], 3))
    assert t.as_dict() == {0: Fraction(1, 2), 1: Fraction(1, 4), 2: Fraction(1, 4)}
    assert t.probs.sum() == 1
    with pytest.raises(EmptySequence):
        empirical_type([])


def test_is_typical_examples():
    u = single([0.5, 0.5])
    assert is_typical([1, 1, 1, 1, 0, 0, 0, 0], u, 0.2)
    assert not is_typical([1, 1, 0, 0, 0, 0, 0, 0], u, 0.2)
    assert not is_typical([0, 1, 0], single([1.0, 0.0]), 0.5)
    with pytest.raises(LengthMismatch):
        is_typical([[0, 1], [0, 1, 1]], bsc_joint(), 0.1)


def test_is_typical_joint():
    j = JointPmf(("X", "Y"), [[0.5, 0.0], [0.0, 0.5]])
    assert is_typical([[0, 1, 0, 1], [0, 1, 0, 1]], j, 0.1)
    assert not is_typical([[0, 1, 0, 1], [0, 1, 1, 1]], j, 10.0)  # p = 0 cell occupied


def test_invalid_pmfs():
    with pytest.raises(PmfError):
        Pmf([0.5, 0.6])
    with pytest.raises(PmfError):
        Pmf([1.2, -0.2])
    with pytest.raises(PmfError):
        JointPmf(("X", "X"), [[0.5, 0.5]])


def test_typical_count_matches_enumeration():
    p = single([0.25, 0.75])
    for n, eps in ((8, 0.0), (8, 0.35), (10, 0.2), (4, 0.0)):
        got = sum(is_typical(list(x), p, eps) for x in itertools.product((0, 1), repeat=n))
        want = sum(comb(n, k) for k in range(n + 1)
                   if abs(k / n - 0.75) <= eps * 0.75 + 1e-12
                   and abs((n - k) / n - 0.25) <= eps * 0.25 + 1e-12)
        assert got == want


def test_eps_zero_is_exact_type():
    p = single([0.25, 0.75])
    for x in itertools.product((0, 1), repeat=4):
        assert is_typical(list(x), p, 0.0) == (sum(x) == 3)


tables = st.integers(0, 2 ** 31).map(
    lambda s: np.random.default_rng(s).dirichlet(np.ones(12)).reshape(2, 3, 2))


@settings(max_examples=60, deadline=None)
@given(tables)
def test_chain_rules(t):
    j = JointPmf(("A", "B", "C"), t)
    assert entropy(j, ("A", "B")) == pytest.approx(
        entropy(j, "A") + conditional_entropy(j, "B", "A"), abs=1e-9)
    assert mutual_information(j, "A", "B") == pytest.approx(
        entropy(j, "A") - conditional_entropy(j, "A", "B"), abs=1e-9)
    assert mutual_information(j, "A", "B", "C") >= 0.0


@settings(max_examples=60, deadline=None)
@given(tables)
def test_base_change(t):
    j = JointPmf(("A", "B", "C"), t)
    h2_, h3 = entropy(j, ("A", "C"), 2), entropy(j, ("A", "C"), 3)
    assert h3 == pytest.approx(h2_ * np.log(2) / np.log(3), abs=1e-9)
