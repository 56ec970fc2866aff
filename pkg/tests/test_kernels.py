import itertools
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from homlab import _accel
from homlab.kernels import scan_pairs, typical_pair_mask, typical_rows

BACKENDS = ["numpy"] + (["numba"] if _accel.HAVE_NUMBA else [])


def brute_typical(counts, tp, eps):
    return bool(np.all(np.abs(counts - tp) <= eps * tp + 1e-9))


def brute_scan(A, B, y, table, eps, dA, dB, cA, cB, r):
    sa, sb, sy = table.shape
    n = A.shape[1]
    labels, first = set(), None
    for i, j in itertools.product(range(A.shape[0]), range(B.shape[0])):
        c = np.zeros(table.size)
        np.add.at(c, (A[i] * sb + B[j]) * sy + y, 1)
        if brute_typical(c, n * table.ravel(), eps):
            labels.add(tuple((cA * dA[i] + cB * dB[j]) % r))
            first = first or (i, j)
    if not labels:
        return 0, None
    return (1 if len(labels) == 1 else 2), first


def test_typical_rows_example():
    table2 = np.array([[0.5, 0.0], [0.0, 0.5]])
    rows = np.array([[0, 1, 0, 1], [0, 0, 1, 1], [1, 0, 1, 0]])
    y = np.array([0, 1, 0, 1])
    for b in BACKENDS:
        assert typical_rows(rows, y, 2, table2, 0.1, backend=b).tolist() == [0]
    assert typical_rows(np.zeros((0, 4), int), y, 2, table2, 0.1).size == 0


def test_pair_mask_example():
    table = np.full((2, 2), 0.25)
    A = np.array([[0, 0, 1, 1], [0, 0, 0, 0]])
    B = np.array([[0, 1, 0, 1], [0, 0, 1, 1]])
    for b in BACKENDS:
        m = typical_pair_mask(A, B, table, 0.01, backend=b)
        assert m.tolist() == [[True, False], [False, False]]
        sub = typical_pair_mask(A, B, table, 0.01, ia=[0], ib=[1, 0], backend=b)
        assert sub.tolist() == [[False, True]]


def test_scan_rejects_oversized_labels():
    A = np.zeros((1, 2), int)
    with pytest.raises(OverflowError):
        scan_pairs(A, A, [0, 0], (1, 1, 1), np.ones((1, 1, 1)), 0.1,
                   np.zeros((1, 70), int), np.zeros((1, 70), int), 1, 1, 2)


def test_unknown_backend():
    with pytest.raises(ValueError):
        typical_rows(np.zeros((1, 2), int), [0, 0], 1, np.ones((1, 1)), 0.1, backend="cuda")


@st.composite
def scan_case(draw):
    seed = draw(st.integers(0, 2 ** 32 - 1))
    rng = np.random.default_rng(seed)
    sa, sb, sy = (int(v) for v in rng.integers(1, 4, 3))
    n = int(rng.integers(2, 9))
    table = rng.dirichlet(np.ones(sa * sb * sy)).reshape(sa, sb, sy)
    A = rng.integers(0, sa, (int(rng.integers(1, 9)), n))
    B = rng.integers(0, sb, (int(rng.integers(1, 9)), n))
    y = rng.integers(0, sy, n)
    K = int(rng.integers(1, 3))
    r = int(rng.integers(2, 4))
    dA = rng.integers(0, r, (A.shape[0], K))
    dB = rng.integers(0, r, (B.shape[0], K))
    eps = float(draw(st.sampled_from([0.3, 1.0, 3.0, 20.0])))
    return A, B, y, table, eps, dA, dB, int(rng.integers(0, r)), int(rng.integers(0, r)), r


@settings(max_examples=150, deadline=None)
@given(scan_case())
def test_scan_matches_brute_force_on_both_backends(case):
    A, B, y, table, eps, dA, dB, cA, cB, r = case
    want, first = brute_scan(*case)
    for b in BACKENDS:
        status, i, j = scan_pairs(A, B, y, table.shape, table, eps, dA, dB, cA, cB, r,
                                  backend=b)
        assert status == want
        if status == 1:
            assert (i, j) == first
        if status == 0:
            assert (i, j) == (-1, -1)


@settings(max_examples=100, deadline=None)
@given(scan_case())
def test_row_and_mask_backends_agree(case):
    A, B, y, table, eps, *_ = case
    t2 = table.sum(axis=2)
    tay = table.sum(axis=1)
    masks = [typical_pair_mask(A, B, t2, eps, backend=b) for b in BACKENDS]
    rows = [typical_rows(A, y, table.shape[2], tay, eps, backend=b) for b in BACKENDS]
    for m in masks[1:]:
        assert np.array_equal(m, masks[0])
    for rw in rows[1:]:
        assert np.array_equal(rw, rows[0])
    n = A.shape[1]
    for i in range(A.shape[0]):
        c = np.zeros(tay.size)
        np.add.at(c, A[i] * table.shape[2] + y, 1)
        assert (i in rows[0]) == brute_typical(c, n * tay.ravel(), eps)


@settings(max_examples=60, deadline=None)
@given(scan_case())
def test_pruning_does_not_change_the_verdict(case):
    """Rows failing their (row, y) marginal test can never be in a typical triple."""
    A, B, y, table, eps, dA, dB, cA, cB, r = case
    sy = table.shape[2]
    ia = typical_rows(A, y, sy, table.sum(axis=1), eps)
    ib = typical_rows(B, y, sy, table.sum(axis=0), eps)
    full = scan_pairs(A, B, y, table.shape, table, eps, dA, dB, cA, cB, r)
    pruned = scan_pairs(A, B, y, table.shape, table, eps, dA, dB, cA, cB, r, ia, ib)
    assert full[0] == pruned[0]
    if full[0] == 1:
        assert full[1:] == pruned[1:]


def test_env_flag_forces_numpy():
    env = dict(os.environ, HOMLAB_NO_NUMBA="1")
    out = subprocess.run([sys.executable, "-c",
                          "from homlab._accel import resolve_backend; print(resolve_backend())"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
