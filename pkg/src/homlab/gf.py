"""Arithmetic and dense linear algebra over prime fields GF(q).

Elements are stored as canonical residues in ``[0, q)``.  Vectors and
matrices wrap read-only ``int64`` numpy arrays, so they are safe to share.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DimensionMismatch, DivisionByZero, InvalidModulus, ModulusMismatch


@lru_cache(maxsize=None)
def is_prime(q: int) -> bool:
    if q < 2:
        return False
    if q < 4:
        return True
    if q % 2 == 0:
        return False
    d = 3
    while d * d <= q:
        if q % d == 0:
            return False
        d += 2
    return True


def check_modulus(q: int) -> int:
    q = int(q)
    if not is_prime(q):
        raise InvalidModulus(f"field size must be prime, got {q}")
    return q


@lru_cache(maxsize=None)
def inverse_table(q: int) -> np.ndarray:
    """inv[a] for a in 1..q-1; inv[0] is set to 0 and must not be used."""
    inv = np.zeros(q, dtype=np.int64)
    for a in range(1, q):
        inv[a] = pow(a, q - 2, q)
    inv.setflags(write=False)
    return inv


@dataclass(frozen=True)
class FieldElement:
    value: int
    q: int

    def __post_init__(self):
        check_modulus(self.q)
        object.__setattr__(self, "value", int(self.value) % self.q)

    def _same(self, other):
        if not isinstance(other, FieldElement):
            other = FieldElement(int(other), self.q)
        if other.q != self.q:
            raise ModulusMismatch(f"GF({self.q}) vs GF({other.q})")
        return other

    def __add__(self, other):
        other = self._same(other)
        return FieldElement((self.value + other.value) % self.q, self.q)

    def __sub__(self, other):
        other = self._same(other)
        return FieldElement((self.value - other.value) % self.q, self.q)

    def __mul__(self, other):
        other = self._same(other)
        return FieldElement((self.value * other.value) % self.q, self.q)

    def __truediv__(self, other):
        other = self._same(other)
        return self * other.inv()

    def __neg__(self):
        return FieldElement(-self.value, self.q)

    def inv(self) -> "FieldElement":
        if self.value == 0:
            raise DivisionByZero(f"0 has no inverse in GF({self.q})")
        return FieldElement(pow(self.value, self.q - 2, self.q), self.q)

    def __int__(self):
        return self.value


def field_op(a: FieldElement, b: FieldElement | None, op: str) -> FieldElement:
    """Apply ``op`` in {'add', 'sub', 'mul', 'div', 'inv'} (``inv`` ignores b)."""
    if op == "inv":
        return a.inv()
    if b is None:
        raise ValueError(f"operation {op!r} needs two operands")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown field operation {op!r}")


def _frozen(values, q) -> np.ndarray:
    arr = np.array(values, dtype=np.int64) % q
    arr.setflags(write=False)
    return arr


class FieldVector:
    __slots__ = ("q", "data")

    def __init__(self, values, q: int):
        self.q = check_modulus(q)
        data = _frozen(values, self.q)
        if data.ndim != 1:
            raise DimensionMismatch("FieldVector needs a 1-D sequence")
        self.data = data

    @classmethod
    def zeros(cls, n, q):
        return cls(np.zeros(n, dtype=np.int64), q)

    def __len__(self):
        return self.data.shape[0]

    def __iter__(self):
        return (FieldElement(int(v), self.q) for v in self.data)

    def __getitem__(self, i):
        return FieldElement(int(self.data[i]), self.q)

    def __eq__(self, other):
        return (isinstance(other, FieldVector) and other.q == self.q
                and np.array_equal(other.data, self.data))

    def __hash__(self):
        return hash((self.q, self.data.tobytes()))

    def _check(self, other):
        if other.q != self.q:
            raise ModulusMismatch(f"GF({self.q}) vs GF({other.q})")
        if len(other) != len(self):
            raise DimensionMismatch(f"lengths {len(self)} and {len(other)}")

    def __add__(self, other):
        self._check(other)
        return FieldVector(self.data + other.data, self.q)

    def __sub__(self, other):
        self._check(other)
        return FieldVector(self.data - other.data, self.q)

    def scale(self, c) -> "FieldVector":
        return FieldVector(self.data * int(c), self.q)

    def tolist(self):
        return [int(v) for v in self.data]

    def __repr__(self):
        return f"FieldVector({self.tolist()}, q={self.q})"


class FieldMatrix:
    __slots__ = ("q", "data")

    def __init__(self, rows, q: int):
        self.q = check_modulus(q)
        data = _frozen(rows, self.q)
        if data.ndim != 2:
            if data.size == 0:
                data = _frozen(np.zeros((0, 0)), self.q)
            else:
                raise DimensionMismatch("FieldMatrix needs a rectangular 2-D grid")
        self.data = data

    @classmethod
    def random(cls, rows, cols, q, rng):
        return cls(rng.integers(0, q, size=(rows, cols)), q)

    @property
    def shape(self):
        return self.data.shape

    def __eq__(self, other):
        return (isinstance(other, FieldMatrix) and other.q == self.q
                and np.array_equal(other.data, self.data))

    def __hash__(self):
        return hash((self.q, self.data.shape, self.data.tobytes()))

    def tolist(self):
        return self.data.tolist()

    def __repr__(self):
        return f"FieldMatrix({self.tolist()}, q={self.q})"


def vec_mat_mul(v: FieldVector, G: FieldMatrix) -> FieldVector:
    if v.q != G.q:
        raise ModulusMismatch(f"GF({v.q}) vs GF({G.q})")
    if len(v) != G.shape[0]:
        raise DimensionMismatch(f"vector length {len(v)} vs {G.shape[0]} rows")
    return FieldVector(v.data @ G.data, v.q)


def rank_array(M: np.ndarray, q: int) -> int:
    """Row rank of an integer array over GF(q) by Gaussian elimination."""
    A = np.array(M, dtype=np.int64) % q
    if A.ndim != 2 or A.size == 0:
        return 0
    inv = inverse_table(q)
    rows, cols = A.shape
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(A[r:, c])[0]
        if nz.size == 0:
            continue
        p = r + nz[0]
        if p != r:
            A[[r, p]] = A[[p, r]]
        A[r] = (A[r] * inv[A[r, c]]) % q
        others = np.nonzero(A[:, c])[0]
        others = others[others != r]
        if others.size:
            A[others] = (A[others] - np.outer(A[others, c], A[r])) % q
        r += 1
    return r


def rank(M: FieldMatrix) -> int:
    return rank_array(M.data, M.q)


def digits(index, length: int, q: int) -> np.ndarray:
    """Big-endian base-q digits of ``index`` (scalar or array) with ``length`` places."""
    idx = np.asarray(index, dtype=np.int64)
    powers = q ** np.arange(length - 1, -1, -1, dtype=np.int64)
    return (idx[..., None] // powers) % q


def from_digits(d, q: int) -> np.ndarray:
    d = np.asarray(d, dtype=np.int64)
    length = d.shape[-1]
    powers = q ** np.arange(length - 1, -1, -1, dtype=np.int64)
    return (d * powers).sum(axis=-1)


def all_vectors(length: int, q: int) -> np.ndarray:
    """Every vector of GF(q)^length, row i holding the digits of i."""
    return digits(np.arange(q ** length, dtype=np.int64), length, q)
