"""Discrete pmfs, information measures, types and robust typicality.

Information measures take an explicit ``base``.  The MAC side of the
package works in base q, the broadcast side in bits.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import (AbsoluteContinuityViolation, EmptySequence, LengthMismatch,
                     OverlappingAxes, PmfError, UnknownAxis)

MASS_TOL = 1e-9
MI_CLAMP = 1e-12
# absolute slack on count comparisons (counts are integers, n*p is a float)
_COUNT_SLACK = 1e-9


def _validate_table(table: np.ndarray) -> np.ndarray:
    table = np.array(table, dtype=float)
    if np.any(table < 0):
        raise PmfError("negative probability")
    total = table.sum()
    if abs(total - 1.0) > MASS_TOL:
        raise PmfError(f"total mass {total!r} is not 1 (tolerance {MASS_TOL})")
    table.setflags(write=False)
    return table


class Pmf:
    """A pmf over an ordered support."""

    def __init__(self, probs, support: Sequence | None = None):
        self.probs = _validate_table(probs)
        if self.probs.ndim != 1:
            raise PmfError("Pmf needs a 1-D probability vector")
        self.support = list(range(len(self.probs))) if support is None else list(support)
        if len(self.support) != len(self.probs):
            raise PmfError("support and probs have different lengths")

    @classmethod
    def uniform(cls, k: int) -> "Pmf":
        return cls(np.full(k, 1.0 / k))

    def __len__(self):
        return len(self.probs)

    def __repr__(self):
        return f"Pmf({self.probs.tolist()})"


class JointPmf:
    """Probability tensor with one named axis per random variable."""

    def __init__(self, axes: Sequence[str], table, labels: dict | None = None):
        self.axes = tuple(axes)
        if len(set(self.axes)) != len(self.axes):
            raise PmfError(f"axis names must be unique: {self.axes}")
        self.table = _validate_table(table)
        if self.table.ndim != len(self.axes):
            raise PmfError(f"{len(self.axes)} axes but table has {self.table.ndim} dims")
        self.labels = dict(labels or {})

    @property
    def shape(self):
        return self.table.shape

    def size(self, axis: str) -> int:
        return self.table.shape[self._index(axis)]

    def _index(self, axis: str) -> int:
        try:
            return self.axes.index(axis)
        except ValueError:
            raise UnknownAxis(axis) from None

    def marginal(self, vars: Sequence[str]) -> "JointPmf":
        """Marginal on ``vars``, axes reordered as given."""
        vars = _as_axes(vars)
        idx = [self._index(v) for v in vars]
        if len(set(idx)) != len(idx):
            raise OverlappingAxes(f"repeated axis in {vars}")
        drop = tuple(i for i in range(len(self.axes)) if i not in idx)
        t = self.table.sum(axis=drop) if drop else self.table
        kept = [i for i in range(len(self.axes)) if i in idx]
        t = np.transpose(t, [kept.index(i) for i in idx])
        return JointPmf(vars, t, {v: self.labels[v] for v in vars if v in self.labels})

    def __repr__(self):
        return f"JointPmf(axes={self.axes}, shape={self.shape})"


def _as_axes(vars) -> tuple:
    if isinstance(vars, str):
        return (vars,)
    return tuple(vars)


def _h(p: np.ndarray, base: float) -> float:
    p = p[p > 0]
    return float(-(p * np.log(p)).sum() / np.log(base))


def _check_base(base):
    if not base > 1:
        raise ValueError(f"log base must exceed 1, got {base}")


def entropy(j: JointPmf, vars, base: float = 2.0) -> float:
    _check_base(base)
    vars = _as_axes(vars)
    if not vars:
        raise UnknownAxis("entropy needs a nonempty axis subset")
    return _h(j.marginal(vars).table.ravel(), base)


def _joint_entropy(j: JointPmf, vars: tuple, base) -> float:
    return entropy(j, vars, base) if vars else 0.0


def _disjoint(*groups):
    seen = set()
    for g in groups:
        for v in g:
            if v in seen:
                raise OverlappingAxes(f"axis {v!r} appears in more than one group")
            seen.add(v)


def conditional_entropy(j: JointPmf, target, given=(), base: float = 2.0) -> float:
    target, given = _as_axes(target), _as_axes(given)
    _disjoint(target, given)
    for v in target + given:
        j._index(v)
    return (_joint_entropy(j, target + given, base)
            - _joint_entropy(j, given, base))


def mutual_information(j: JointPmf, a, b, given=(), base: float = 2.0) -> float:
    """I(a; b | given), clamped to 0 when within 1e-12 of zero."""
    a, b, given = _as_axes(a), _as_axes(b), _as_axes(given)
    _disjoint(a, b, given)
    for v in a + b + given:
        j._index(v)
    val = (_joint_entropy(j, a + given, base) + _joint_entropy(j, b + given, base)
           - _joint_entropy(j, a + b + given, base) - _joint_entropy(j, given, base))
    if abs(val) < MI_CLAMP:
        return 0.0
    return val


def kl_divergence(p: Pmf, r: Pmf, base: float = 2.0) -> float:
    _check_base(base)
    pp, rr = np.asarray(p.probs), np.asarray(r.probs)
    if pp.shape != rr.shape:
        raise PmfError("pmfs over different supports")
    mask = pp > 0
    if np.any(rr[mask] == 0):
        raise AbsoluteContinuityViolation("p puts mass where r has none")
    return float((pp[mask] * np.log(pp[mask] / rr[mask])).sum() / np.log(base))


class TypeVector:
    """Empirical pmf of a sequence, kept as exact integer counts."""

    def __init__(self, counts, n: int):
        self.counts = np.asarray(counts, dtype=np.int64)
        self.n = int(n)
        if self.counts.sum() != self.n:
            raise ValueError("counts must sum to n")

    @property
    def probs(self) -> np.ndarray:
        return self.counts / self.n

    def as_dict(self) -> dict:
        return {int(s): Fraction(int(c), self.n)
                for s, c in enumerate(self.counts) if c}

    def __eq__(self, other):
        return (isinstance(other, TypeVector) and self.n == other.n
                and np.array_equal(self.counts, other.counts))

    def __repr__(self):
        return f"TypeVector({self.as_dict()}, n={self.n})"


def _symbols(x) -> np.ndarray:
    data = getattr(x, "data", x)
    return np.asarray(data, dtype=np.int64)


def empirical_type(x, alphabet_size: int | None = None) -> TypeVector:
    s = _symbols(x)
    if s.size == 0:
        raise EmptySequence("type of an empty sequence")
    if alphabet_size is None:
        alphabet_size = getattr(x, "q", None) or int(s.max()) + 1
    return TypeVector(np.bincount(s, minlength=alphabet_size), s.size)


def joint_counts(seqs, shape) -> np.ndarray:
    """Count table of the symbol tuples formed by parallel sequences."""
    seqs = [_symbols(s) for s in seqs]
    n = seqs[0].shape[-1]
    if any(s.shape[-1] != n for s in seqs):
        raise LengthMismatch("parallel sequences must have equal length")
    flat = np.ravel_multi_index(tuple(seqs), shape)
    size = int(np.prod(shape))
    return np.bincount(flat, minlength=size).reshape(shape)


def typical_counts(counts: np.ndarray, table: np.ndarray, n: int, eps: float) -> np.ndarray:
    """Robust typicality test on count tables.

    ``counts`` has shape ``(..., *table.shape)``; the leading axes are
    batched.  Every cell must satisfy ``|p - c/n| <= eps * p``.
    """
    tp = n * np.asarray(table)
    ok = np.abs(counts - tp) <= eps * tp + _COUNT_SLACK
    axes = tuple(range(ok.ndim - np.ndim(table), ok.ndim))
    return ok.all(axis=axes)


def is_typical(x, p: JointPmf, eps: float) -> bool:
    """True iff the joint type of ``x`` lies in the eps-typical set of ``p``.

    ``x`` is a single sequence (for a one-axis ``p``) or a list of parallel
    sequences, one per axis of ``p``.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if isinstance(x, (list, tuple)) and len(x) and not np.isscalar(x[0]):
        seqs = list(x)
    else:
        seqs = [x]
    if len(seqs) != len(p.axes):
        raise LengthMismatch(f"{len(seqs)} sequences for {len(p.axes)} axes")
    arrs = [_symbols(s) for s in seqs]
    n = arrs[0].size
    if any(a.size != n for a in arrs):
        raise LengthMismatch("parallel sequences must have equal length")
    if n == 0:
        raise EmptySequence("typicality of an empty sequence")
    for a, size in zip(arrs, p.shape):
        if a.min() < 0 or a.max() >= size:
            return False
    counts = joint_counts(arrs, p.shape)
    return bool(typical_counts(counts, p.table, n, eps))
