"""Random homologous codebooks: nested coset codes sharing one generator
matrix, with per-sender dithers and shaping indices.

Messages and auxiliary indices are vectors over GF(q).  Internally they are
addressed by integer index (big-endian base-q digits), and the codeword
table of sender j holds row ``m * q**l_j + l`` for the pair ``(m, l)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .channels import MacSpec, sample_mac
from .errors import BudgetExceeded, DecodingFailure, InvalidSpec, WrongMessageLength
from .gf import FieldMatrix, FieldVector, all_vectors, check_modulus, digits, from_digits
from .kernels import scan_pairs, typical_rows
from .prob import Pmf, kl_divergence, typical_counts

DEFAULT_BUDGET = 2 ** 24
FORMAT = "homlab.homologous"
VERSION = 1


def _ceil(x: float) -> int:
    # n * rate is mathematically an integer in many configurations; keep
    # float noise from bumping it up by one
    return int(math.ceil(x - 1e-9))


@dataclass(frozen=True)
class HomologousParams:
    q: int
    n: int
    k1: int
    k2: int
    eps: float = 0.1
    seed: int = 0
    ell: tuple | None = None  # override the auxiliary lengths (negative controls)

    def __post_init__(self):
        check_modulus(self.q)
        if self.ell is not None:
            ell = tuple(int(v) for v in self.ell)
            if len(ell) != 2 or min(ell) < 0:
                raise InvalidSpec("ell override must be two nonnegative lengths")
            object.__setattr__(self, "ell", ell)
        if self.n < 1:
            raise InvalidSpec("n must be at least 1")
        if self.k1 < 0 or self.k2 < 0:
            raise InvalidSpec("message lengths must be nonnegative")
        if not self.eps > 0:
            raise InvalidSpec("eps must be positive")


def redundancy(px: Pmf, q: int, n: int, eps: float) -> int:
    """Auxiliary length ceil(n * (D(p || Unif(F_q)) + eps))."""
    d = kl_divergence(px, Pmf.uniform(q), q)
    return _ceil(n * (d + eps))


@dataclass(frozen=True, eq=False)
class HomologousCodebook:
    params: HomologousParams
    px1: Pmf
    px2: Pmf
    l1: int
    l2: int
    G: FieldMatrix
    d1: FieldVector
    d2: FieldVector
    shaping1: np.ndarray
    shaping2: np.ndarray
    typical_count1: np.ndarray = field(repr=False)
    typical_count2: np.ndarray = field(repr=False)

    @property
    def q(self):
        return self.params.q

    @property
    def n(self):
        return self.params.n

    @property
    def kappa(self) -> int:
        return self.G.shape[0]

    def k(self, j):
        return self.params.k1 if j == 1 else self.params.k2

    def ell(self, j):
        return self.l1 if j == 1 else self.l2

    def dither(self, j) -> FieldVector:
        return self.d1 if j == 1 else self.d2

    def shaping(self, j) -> np.ndarray:
        return self.shaping1 if j == 1 else self.shaping2

    def coefficients(self, j) -> np.ndarray:
        """Row r holds [m l 0] for table row r, padded to kappa."""
        width = self.k(j) + self.ell(j)
        out = np.zeros((self.q ** width, self.kappa), dtype=np.int64)
        out[:, :width] = all_vectors(width, self.q)
        return out

    def rows(self, j) -> np.ndarray:
        return self._rows[j - 1]

    @cached_property
    def _rows(self):
        return tuple(_coset_rows(self.G.data, self.dither(j).data, self.k(j) + self.ell(j), self.q)
                     for j in (1, 2))

    def codeword_index(self, j, m_index: int) -> int:
        return int(m_index) * self.q ** self.ell(j) + int(self.shaping(j)[m_index])

    def __eq__(self, other):
        if not isinstance(other, HomologousCodebook):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def _coset_rows(G, d, width, q) -> np.ndarray:
    coeff = all_vectors(width, q)
    return (coeff @ G[:width] + d[None, :]) % q


def _choose_shaping(typ: np.ndarray, rng) -> tuple:
    """Uniform typical candidate per message, else uniform over all."""
    counts = typ.sum(axis=1)
    u = rng.random(typ.shape[0])
    width = typ.shape[1]
    pick_any = np.minimum((u * width).astype(np.int64), width - 1)
    target = np.floor(u * counts).astype(np.int64) + 1
    cum = np.cumsum(typ, axis=1)
    pick_typ = np.argmax(cum >= target[:, None], axis=1)
    return np.where(counts > 0, pick_typ, pick_any).astype(np.int64), counts.astype(np.int64)


def generate_homologous_codebook(params: HomologousParams, px1: Pmf, px2: Pmf,
                                 rng=None, budget: int = DEFAULT_BUDGET) -> HomologousCodebook:
    """Draw G, dithers and shaping indices.

    ``rng`` defaults to a generator seeded from ``params.seed``; pass an
    explicit generator to draw members of an ensemble.
    """
    q, n, eps = params.q, params.n, params.eps
    if len(px1) != q or len(px2) != q:
        raise InvalidSpec("input pmfs must live on F_q")
    if params.ell is None:
        l1, l2 = redundancy(px1, q, n, eps), redundancy(px2, q, n, eps)
    else:
        l1, l2 = params.ell
    for k, ell in ((params.k1, l1), (params.k2, l2)):
        if q ** (k + ell) > budget:
            raise BudgetExceeded(f"q^(k+l) = {q}^{k + ell} exceeds budget {budget}")
    kappa = max(params.k1 + l1, params.k2 + l2)
    rng = np.random.default_rng(params.seed) if rng is None else rng
    G = rng.integers(0, q, size=(kappa, n))
    d1 = rng.integers(0, q, size=n)
    d2 = rng.integers(0, q, size=n)
    shaping, counts = [], []
    for px, d, k, ell in ((px1, d1, params.k1, l1), (px2, d2, params.k2, l2)):
        rows = _coset_rows(G, d, k + ell, q)
        typ = _typical_mask(rows, px, eps).reshape(q ** k, q ** ell)
        s, c = _choose_shaping(typ, rng)
        shaping.append(s)
        counts.append(c)
    return HomologousCodebook(params, px1, px2, l1, l2, FieldMatrix(G, q),
                              FieldVector(d1, q), FieldVector(d2, q),
                              shaping[0], shaping[1], counts[0], counts[1])


def _typical_mask(rows: np.ndarray, px: Pmf, eps: float) -> np.ndarray:
    q = len(px)
    m, n = rows.shape
    flat = (np.arange(m, dtype=np.int64)[:, None] * q + rows).ravel()
    counts = np.bincount(flat, minlength=m * q).reshape(m, q)
    return typical_counts(counts, px.probs, n, eps)


def sample_shaped_codewords(q: int, n: int, px: Pmf, eps: float, size: int, rng,
                            ell: int | None = None, chunk: int = 1 << 14):
    """Codewords of ``size`` independent single-message (k = 0) codebooks.

    Each draw uses a fresh generator matrix and dither and applies the same
    shaping rule as :func:`generate_homologous_codebook`.  Returns
    ``(words, shaped)`` where ``shaped[s]`` says a typical candidate existed.
    """
    ell = redundancy(px, q, n, eps) if ell is None else int(ell)
    coeff = all_vectors(ell, q)
    words = np.empty((size, n), dtype=np.int64)
    shaped = np.empty(size, dtype=bool)
    for start in range(0, size, chunk):
        s = min(chunk, size - start)
        G = rng.integers(0, q, size=(s, ell, n))
        d = rng.integers(0, q, size=(s, n))
        cand = (np.einsum("li,sin->sln", coeff, G) + d[:, None, :]) % q
        typ = _typical_mask(cand.reshape(-1, n), px, eps).reshape(s, -1)
        pick, counts = _choose_shaping(typ, rng)
        words[start:start + s] = cand[np.arange(s), pick]
        shaped[start:start + s] = counts > 0
    return words, shaped


def _message_index(cb, j, m) -> int:
    data = np.asarray(getattr(m, "data", m), dtype=np.int64)
    if data.ndim != 1 or data.shape[0] != cb.k(j):
        raise WrongMessageLength(f"sender {j} expects {cb.k(j)} message symbols")
    if cb.k(j) == 0:
        return 0
    return int(from_digits(data % cb.q, cb.q))


def encode(cb: HomologousCodebook, j: int, m) -> FieldVector:
    """x_j(m) = [m | L_j(m) | 0] G + d_j."""
    idx = _message_index(cb, j, m)
    return FieldVector(cb.rows(j)[cb.codeword_index(j, idx)], cb.q)


def coset_word(cb: HomologousCodebook, j: int, m, l) -> FieldVector:
    """u_j(m, l) for an arbitrary auxiliary index vector ``l``."""
    idx = _message_index(cb, j, m)
    ld = np.asarray(getattr(l, "data", l), dtype=np.int64)
    lidx = int(from_digits(ld, cb.q)) if ld.size else 0
    return FieldVector(cb.rows(j)[idx * cb.q ** cb.ell(j) + lidx], cb.q)


def true_combination(cb: HomologousCodebook, m1, m2, a) -> FieldVector:
    x1, x2 = encode(cb, 1, m1), encode(cb, 2, m2)
    return x1.scale(a[0]) + x2.scale(a[1])


def design_table(cb: HomologousCodebook, spec: MacSpec) -> np.ndarray:
    """p(x1) p(x2) p(y | x1, x2) with the codebook's target input pmfs."""
    pin = np.outer(cb.px1.probs, cb.px2.probs)
    return pin[:, :, None] * spec.transition


def jt_decode(cb: HomologousCodebook, y, eps_p: float, a, spec: MacSpec,
              budget: int = DEFAULT_BUDGET, backend=None) -> FieldVector:
    """Joint-typicality computation decoder.

    Scans every (m1, l1, m2, l2) and collects the vectors
    s = a1 [m1 l1 0] + a2 [m2 l2 0] of typical tuples.  Returns
    s G + a1 d1 + a2 d2 when exactly one s occurs; raises
    :class:`DecodingFailure` otherwise.
    """
    q = cb.q
    if spec.q != q:
        raise InvalidSpec("codebook and channel use different fields")
    a1, a2 = (int(v) % q for v in a)
    n1, n2 = cb.rows(1).shape[0], cb.rows(2).shape[0]
    if n1 * n2 > budget:
        raise BudgetExceeded(f"{n1 * n2} candidate tuples exceed budget {budget}")
    y = np.asarray(getattr(y, "data", y), dtype=np.int64)
    table = design_table(cb, spec)
    ny = table.shape[2]
    ia = typical_rows(cb.rows(1), y, ny, table.sum(axis=1), eps_p, backend)
    ib = typical_rows(cb.rows(2), y, ny, table.sum(axis=0), eps_p, backend)
    dA, dB = cb.coefficients(1), cb.coefficients(2)
    status, i, j = scan_pairs(cb.rows(1), cb.rows(2), y, (q, q, ny), table, eps_p,
                              dA, dB, a1, a2, q, ia, ib, backend=backend)
    if status == 0:
        raise DecodingFailure(DecodingFailure.NO_CANDIDATE)
    if status == 2:
        raise DecodingFailure(DecodingFailure.AMBIGUOUS)
    s = (a1 * dA[i] + a2 * dB[j]) % q
    w = (s @ cb.G.data + a1 * cb.d1.data + a2 * cb.d2.data) % q
    return FieldVector(w, q)


@dataclass
class TrialRecord:
    success: bool
    failure: str | None
    m1: list
    m2: list
    w: list
    w_hat: list | None

    def to_dict(self):
        return dict(self.__dict__)


def random_message(q, k, rng) -> FieldVector:
    return FieldVector(rng.integers(0, q, size=k), q)


def run_computation_trial(cb: HomologousCodebook, a, spec: MacSpec, eps_p: float, rng,
                          budget: int = DEFAULT_BUDGET, backend=None) -> TrialRecord:
    if spec.q != cb.q:
        raise InvalidSpec("codebook and channel use different fields")
    m1 = random_message(cb.q, cb.params.k1, rng)
    m2 = random_message(cb.q, cb.params.k2, rng)
    x1, x2 = encode(cb, 1, m1), encode(cb, 2, m2)
    w = x1.scale(a[0]) + x2.scale(a[1])
    y = sample_mac(spec, x1, x2, rng)
    try:
        w_hat = jt_decode(cb, y, eps_p, a, spec, budget, backend)
    except DecodingFailure as exc:
        return TrialRecord(False, exc.kind, m1.tolist(), m2.tolist(), w.tolist(), None)
    ok = w_hat == w
    return TrialRecord(bool(ok), None if ok else "wrong_estimate", m1.tolist(), m2.tolist(),
                       w.tolist(), w_hat.tolist())


def injectivity(cb: HomologousCodebook, j: int) -> float:
    """Fraction of messages of sender j whose codeword is unique."""
    k = cb.k(j)
    idx = np.arange(cb.q ** k) * cb.q ** cb.ell(j) + cb.shaping(j)
    words = cb.rows(j)[idx]
    _, inverse, counts = np.unique(words, axis=0, return_inverse=True, return_counts=True)
    return float(np.mean(counts[inverse.ravel()] == 1))


def codebook_to_dict(cb: HomologousCodebook) -> dict:
    p = cb.params
    return {
        "format": FORMAT, "version": VERSION,
        "params": {"q": p.q, "n": p.n, "k1": p.k1, "k2": p.k2, "eps": p.eps, "seed": p.seed,
                   "ell": None if p.ell is None else list(p.ell)},
        "px1": cb.px1.probs.tolist(), "px2": cb.px2.probs.tolist(),
        "l1": cb.l1, "l2": cb.l2,
        "G": cb.G.tolist(), "d1": cb.d1.tolist(), "d2": cb.d2.tolist(),
        "shaping1": cb.shaping1.tolist(), "shaping2": cb.shaping2.tolist(),
        "typical_count1": cb.typical_count1.tolist(),
        "typical_count2": cb.typical_count2.tolist(),
    }


HomologousCodebook.to_dict = codebook_to_dict


def codebook_from_dict(d: dict) -> HomologousCodebook:
    if d.get("format") != FORMAT or d.get("version") != VERSION:
        raise InvalidSpec(f"not a version-{VERSION} homologous codebook document")
    p = HomologousParams(**d["params"])
    q = p.q
    G = np.asarray(d["G"], dtype=np.int64).reshape(-1, p.n)
    return HomologousCodebook(p, Pmf(d["px1"]), Pmf(d["px2"]), int(d["l1"]), int(d["l2"]),
                              FieldMatrix(G, q), FieldVector(d["d1"], q), FieldVector(d["d2"], q),
                              np.asarray(d["shaping1"], dtype=np.int64),
                              np.asarray(d["shaping2"], dtype=np.int64),
                              np.asarray(d["typical_count1"], dtype=np.int64),
                              np.asarray(d["typical_count2"], dtype=np.int64))


def message_vector(index: int, k: int, q: int) -> FieldVector:
    return FieldVector(digits(index, k, q) if k else np.zeros(0, dtype=np.int64), q)
