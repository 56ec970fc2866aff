"""Joint-typicality scans over pairs of codeword tables.

Both decoders and the Marton encoder reduce to the same question: which
pairs ``(A[i], B[j])`` of rows, together with an observed sequence ``y``,
have a robustly typical joint type?  Rows are first pruned by their
pairwise type with ``y`` (a necessary condition, since joint typicality
of the triple implies typicality of every marginal with the same eps),
then the surviving pairs are scanned.

Each scan has a numba implementation and a pure-numpy one; they return
identical results.
"""
from __future__ import annotations

import numpy as np

from ._accel import njit, resolve_backend

SLACK = 1e-9
_NP_CHUNK_CELLS = 1 << 22


def _row_counts(rows: np.ndarray, y: np.ndarray, sy: int, cells: int) -> np.ndarray:
    """Per-row count table of the pairs (rows[i, t], y[t])."""
    m, n = rows.shape
    idx = rows * sy + y[None, :]
    flat = (np.arange(m, dtype=np.int64)[:, None] * cells + idx).ravel()
    return np.bincount(flat, minlength=m * cells).reshape(m, cells)


@njit
def _typical_rows_nb(rows, y, sy, tp, eps):
    m, n = rows.shape
    C = tp.shape[0]
    counts = np.zeros(C, dtype=np.int64)
    keep = np.zeros(m, dtype=np.bool_)
    for i in range(m):
        for c in range(C):
            counts[c] = 0
        for t in range(n):
            counts[rows[i, t] * sy + y[t]] += 1
        ok = True
        for c in range(C):
            if abs(counts[c] - tp[c]) > eps * tp[c] + 1e-9:
                ok = False
                break
        keep[i] = ok
    return keep


def typical_rows(rows, y, sy, table2, eps, backend=None) -> np.ndarray:
    """Indices of rows whose pair type with ``y`` is eps-typical for ``table2``.

    ``table2`` has shape (alphabet of rows, sy).
    """
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    y = np.ascontiguousarray(y, dtype=np.int64)
    n = rows.shape[1]
    tp = np.ascontiguousarray(n * np.asarray(table2, dtype=float).ravel())
    if rows.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    if resolve_backend(backend) == "numba":
        ok = _typical_rows_nb(rows, y, int(sy), tp, float(eps))
    else:
        counts = _row_counts(rows, y, sy, tp.size)
        ok = (np.abs(counts - tp) <= eps * tp + SLACK).all(axis=1)
    return np.nonzero(ok)[0].astype(np.int64)


@njit
def _scan_nb(A, B, y, ia, ib, sb, sy, tp, eps, dA, dB, cA, cB, r):
    n = A.shape[1]
    C = tp.shape[0]
    K = dA.shape[1]
    counts = np.zeros(C, dtype=np.int64)
    base = np.zeros(n, dtype=np.int64)
    nfound = 0
    first = np.int64(0)
    fi = -1
    fj = -1
    for ii in range(ia.shape[0]):
        i = ia[ii]
        for t in range(n):
            base[t] = A[i, t] * sb * sy + y[t]
        for jj in range(ib.shape[0]):
            j = ib[jj]
            for c in range(C):
                counts[c] = 0
            for t in range(n):
                counts[base[t] + B[j, t] * sy] += 1
            ok = True
            for c in range(C):
                if abs(counts[c] - tp[c]) > eps * tp[c] + 1e-9:
                    ok = False
                    break
            if not ok:
                continue
            lab = np.int64(0)
            for k in range(K):
                lab = lab * r + (cA * dA[i, k] + cB * dB[j, k]) % r
            if nfound == 0:
                first = lab
                fi = i
                fj = j
                nfound = 1
            elif lab != first:
                return 2, fi, fj
    return nfound, fi, fj


def _scan_np(A, B, y, ia, ib, sb, sy, tp, eps, dA, dB, cA, cB, r):
    n = A.shape[1]
    C = tp.shape[0]
    K = dA.shape[1]
    nb = ib.shape[0]
    if ia.shape[0] == 0 or nb == 0:
        return 0, -1, -1
    powers = r ** np.arange(K - 1, -1, -1, dtype=np.int64)
    Bs = B[ib] * sy
    step = max(1, _NP_CHUNK_CELLS // max(1, nb * max(n, C)))
    first = None
    fi = fj = -1
    for start in range(0, ia.shape[0], step):
        rows = ia[start:start + step]
        base = A[rows] * (sb * sy) + y[None, :]
        idx = base[:, None, :] + Bs[None, :, :]
        m = rows.shape[0] * nb
        flat = (np.arange(m, dtype=np.int64)[:, None] * C + idx.reshape(m, n)).ravel()
        counts = np.bincount(flat, minlength=m * C).reshape(m, C)
        ok = (np.abs(counts - tp) <= eps * tp + 1e-9).all(axis=1)
        hits = np.nonzero(ok)[0]
        if hits.size == 0:
            continue
        hi = rows[hits // nb]
        hj = ib[hits % nb]
        labs = (((cA * dA[hi] + cB * dB[hj]) % r) * powers).sum(axis=1)
        if first is None:
            first, fi, fj = labs[0], int(hi[0]), int(hj[0])
        if np.any(labs != first):
            return 2, fi, fj
    if first is None:
        return 0, -1, -1
    return 1, fi, fj


def scan_pairs(A, B, y, sizes, table, eps, dA, dB, cA, cB, r,
               ia=None, ib=None, backend=None):
    """Find the label set of jointly typical row pairs.

    A pair ``(i, j)`` is typical when the joint type of ``(A[i], B[j], y)``
    is eps-typical for ``table`` (shape ``sizes``).  Its label is the
    base-``r`` number with digits ``(cA*dA[i] + cB*dB[j]) mod r``.

    Returns ``(status, i, j)``: status 0 means no typical pair, 1 means all
    typical pairs share one label, 2 means at least two labels occur (the
    scan stops early).  ``(i, j)`` is the first typical pair in row-major
    order, or ``(-1, -1)``.
    """
    sa, sb, sy = sizes
    A = np.ascontiguousarray(A, dtype=np.int64)
    B = np.ascontiguousarray(B, dtype=np.int64)
    y = np.ascontiguousarray(y, dtype=np.int64)
    tp = np.ascontiguousarray(A.shape[1] * np.asarray(table, dtype=float).ravel())
    dA = np.ascontiguousarray(dA, dtype=np.int64)
    dB = np.ascontiguousarray(dB, dtype=np.int64)
    if dA.ndim == 1:
        dA = dA[:, None]
    if dB.ndim == 1:
        dB = dB[:, None]
    if dA.shape[1] != dB.shape[1]:
        raise ValueError("label digit arrays need the same width")
    if float(r) ** dA.shape[1] >= 2.0 ** 62:
        raise OverflowError("labels do not fit in 62 bits")
    ia = np.arange(A.shape[0], dtype=np.int64) if ia is None else np.asarray(ia, dtype=np.int64)
    ib = np.arange(B.shape[0], dtype=np.int64) if ib is None else np.asarray(ib, dtype=np.int64)
    if resolve_backend(backend) == "numba":
        st, i, j = _scan_nb(A, B, y, ia, ib, sb, sy, tp, float(eps), dA, dB,
                            int(cA), int(cB), int(r))
    else:
        st, i, j = _scan_np(A, B, y, ia, ib, sb, sy, tp, float(eps), dA, dB,
                            int(cA), int(cB), int(r))
    return int(st), int(i), int(j)


@njit
def _pair_mask_nb(A, B, ia, ib, sb, tp, eps):
    n = A.shape[1]
    C = tp.shape[0]
    out = np.zeros((ia.shape[0], ib.shape[0]), dtype=np.bool_)
    counts = np.zeros(C, dtype=np.int64)
    for ii in range(ia.shape[0]):
        i = ia[ii]
        for jj in range(ib.shape[0]):
            j = ib[jj]
            for c in range(C):
                counts[c] = 0
            for t in range(n):
                counts[A[i, t] * sb + B[j, t]] += 1
            ok = True
            for c in range(C):
                if abs(counts[c] - tp[c]) > eps * tp[c] + 1e-9:
                    ok = False
                    break
            out[ii, jj] = ok
    return out


def _pair_mask_np(A, B, ia, ib, sb, tp, eps):
    n = A.shape[1]
    C = tp.shape[0]
    na, nb = ia.shape[0], ib.shape[0]
    if na == 0 or nb == 0:
        return np.zeros((na, nb), dtype=bool)
    idx = (A[ia] * sb)[:, None, :] + B[ib][None, :, :]
    m = na * nb
    flat = (np.arange(m, dtype=np.int64)[:, None] * C + idx.reshape(m, n)).ravel()
    counts = np.bincount(flat, minlength=m * C).reshape(m, C)
    return (np.abs(counts - tp) <= eps * tp + 1e-9).all(axis=1).reshape(na, nb)


def typical_pair_mask(A, B, table, eps, ia=None, ib=None, backend=None) -> np.ndarray:
    """Boolean matrix: is the pair type of ``(A[ia[u]], B[ib[v]])`` eps-typical?"""
    A = np.ascontiguousarray(A, dtype=np.int64)
    B = np.ascontiguousarray(B, dtype=np.int64)
    table = np.asarray(table, dtype=float)
    sb = table.shape[1]
    tp = np.ascontiguousarray(A.shape[1] * table.ravel())
    ia = np.arange(A.shape[0], dtype=np.int64) if ia is None else np.asarray(ia, dtype=np.int64)
    ib = np.arange(B.shape[0], dtype=np.int64) if ib is None else np.asarray(ib, dtype=np.int64)
    if resolve_backend(backend) == "numba":
        return _pair_mask_nb(A, B, ia, ib, sb, tp, float(eps))
    return _pair_mask_np(A, B, ia, ib, sb, tp, float(eps))
