"""Marton coding for the two-receiver broadcast channel.

Index sets are bit strings: sender-side message j ranges over
``range(2**k_j)`` and its auxiliary index over ``range(2**l_j)``.  Row
``m * 2**l_j + l`` of ``u_j`` holds the sequence u_j(m, l).

The covering step picks, for each message pair, a jointly typical index
pair.  Doing that for all ``2**(k1 + k2)`` message pairs up front is only
feasible for small codebooks, so the choice is computed on demand from a
per-pair random stream (keyed by the codebook's own entropy and the
message pair) and cached.  :meth:`MartonCodebook.materialize` runs it for
every pair and records the coverage-failure count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channels import BcSpec, build_bc_joint, sample_bc
from .errors import BudgetExceeded, DecodingFailure, InvalidSpec, WrongMessageLength
from .kernels import scan_pairs, typical_pair_mask, typical_rows
from .prob import JointPmf, entropy, mutual_information

DEFAULT_BUDGET = 2 ** 24
AUTO_MATERIALIZE = 2 ** 22
FORMAT = "homlab.marton"
VERSION = 1


@dataclass(frozen=True)
class MartonParams:
    n: int
    k1: int
    k2: int
    alpha: float = 0.5
    eps: float = 0.1
    seed: int = 0
    ell: tuple | None = None  # override the auxiliary lengths (negative controls)

    def __post_init__(self):
        if self.n < 1:
            raise InvalidSpec("n must be at least 1")
        if self.k1 < 0 or self.k2 < 0:
            raise InvalidSpec("message lengths must be nonnegative")
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidSpec(f"alpha must lie in [0, 1], got {self.alpha}")
        if not self.eps > 0:
            raise InvalidSpec("eps must be positive")
        if self.ell is not None:
            ell = tuple(int(v) for v in self.ell)
            if len(ell) != 2 or min(ell) < 0:
                raise InvalidSpec("ell override must be two nonnegative lengths")
            object.__setattr__(self, "ell", ell)


def auxiliary_lengths(pu: JointPmf, n: int, alpha: float, eps: float) -> tuple:
    """ceil(n * alpha * T) and ceil(n * (1 - alpha) * T), T = I(U1;U2) + 10 eps H(U1,U2)."""
    total = mutual_information(pu, "U1", "U2") + 10 * eps * entropy(pu, ("U1", "U2"))
    return (int(math.ceil(n * alpha * total - 1e-9)),
            int(math.ceil(n * (1 - alpha) * total - 1e-9)))


@dataclass(eq=False)
class MartonCodebook:
    params: MartonParams
    pu: JointPmf
    symbol_map: np.ndarray
    l1: int
    l2: int
    u1: np.ndarray
    u2: np.ndarray
    pair_key: int
    _chosen: dict = field(default_factory=dict, repr=False)

    @property
    def n(self):
        return self.params.n

    def k(self, j):
        return self.params.k1 if j == 1 else self.params.k2

    def ell(self, j):
        return self.l1 if j == 1 else self.l2

    def rows(self, j):
        return self.u1 if j == 1 else self.u2

    def _block(self, j, m):
        w = 1 << self.ell(j)
        return np.arange(m * w, (m + 1) * w, dtype=np.int64)

    def chosen_pair(self, m1: int, m2: int, backend=None) -> tuple:
        """(l1, l2, covered) for the message pair, computed once and cached."""
        key = (int(m1), int(m2))
        hit = self._chosen.get(key)
        if hit is None:
            for j, m in ((1, key[0]), (2, key[1])):
                if not 0 <= m < 1 << self.k(j):
                    raise WrongMessageLength(f"message {m} outside [0, 2^{self.k(j)})")
            rng = np.random.default_rng(np.random.SeedSequence([self.pair_key, *key]))
            mask = typical_pair_mask(self.u1, self.u2, self.pu.table, self.params.eps,
                                     self._block(1, key[0]), self._block(2, key[1]), backend)
            hits = np.flatnonzero(mask)
            if hits.size:
                pick = int(hits[rng.integers(hits.size)])
                covered = True
            else:
                pick = int(rng.integers(mask.size))
                covered = False
            w2 = 1 << self.l2
            hit = (pick // w2, pick % w2, covered)
            self._chosen[key] = hit
        return hit

    def materialize(self, backend=None) -> int:
        """Choose the index pair for every message pair; returns the coverage-failure count."""
        fails = 0
        for m1 in range(1 << self.params.k1):
            for m2 in range(1 << self.params.k2):
                fails += not self.chosen_pair(m1, m2, backend)[2]
        return fails

    @property
    def coverage_failures(self):
        """Failures among the message pairs chosen so far, or None before any choice."""
        if not self._chosen:
            return None
        return sum(not c for _, _, c in self._chosen.values())

    def to_dict(self) -> dict:
        p = self.params
        return {
            "format": FORMAT, "version": VERSION,
            "params": {"n": p.n, "k1": p.k1, "k2": p.k2, "alpha": p.alpha, "eps": p.eps,
                       "seed": p.seed, "ell": None if p.ell is None else list(p.ell)},
            "pu": self.pu.table.tolist(), "symbol_map": self.symbol_map.tolist(),
            "l1": self.l1, "l2": self.l2, "u1": self.u1.tolist(), "u2": self.u2.tolist(),
            "pair_key": self.pair_key,
            "chosen": sorted([m1, m2, l1, l2, bool(c)] for (m1, m2), (l1, l2, c)
                             in self._chosen.items()),
        }

    def __eq__(self, other):
        if not isinstance(other, MartonCodebook):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def codebook_from_dict(d: dict) -> MartonCodebook:
    if d.get("format") != FORMAT or d.get("version") != VERSION:
        raise InvalidSpec(f"not a version-{VERSION} Marton codebook document")
    p = MartonParams(**d["params"])
    cb = MartonCodebook(p, JointPmf(("U1", "U2"), d["pu"]),
                        np.asarray(d["symbol_map"], dtype=np.int64), int(d["l1"]), int(d["l2"]),
                        np.asarray(d["u1"], dtype=np.int64).reshape(-1, p.n),
                        np.asarray(d["u2"], dtype=np.int64).reshape(-1, p.n), int(d["pair_key"]))
    for m1, m2, l1, l2, c in d.get("chosen", []):
        cb._chosen[(m1, m2)] = (l1, l2, bool(c))
    return cb


def _draw_iid(p, shape, rng):
    if np.all(p == p[0]):
        return rng.integers(0, p.size, size=shape)
    cdf = np.cumsum(p)
    out = np.searchsorted(cdf, rng.random(shape), side="right")
    return np.minimum(out, p.size - 1)


def generate_marton_codebook(params: MartonParams, spec: BcSpec, rng=None,
                             budget: int = DEFAULT_BUDGET, materialize=None) -> MartonCodebook:
    """Draw the auxiliary arrays i.i.d. from the marginals of p(u1, u2).

    ``materialize`` (default: when there are at most 2^22 index tuples to
    check) runs the covering step for all message pairs immediately.
    """
    pu = spec.pu
    if params.ell is None:
        l1, l2 = auxiliary_lengths(pu, params.n, params.alpha, params.eps)
    else:
        l1, l2 = params.ell
    for j, (k, ell) in enumerate(((params.k1, l1), (params.k2, l2)), start=1):
        if 2 ** (k + ell) > budget:
            raise BudgetExceeded(f"sender-{j} table has 2^{k + ell} rows, budget {budget}")
    rng = np.random.default_rng(params.seed) if rng is None else rng
    p1 = pu.marginal(("U1",)).table
    p2 = pu.marginal(("U2",)).table
    u1 = _draw_iid(p1, (1 << (params.k1 + l1), params.n), rng)
    u2 = _draw_iid(p2, (1 << (params.k2 + l2), params.n), rng)
    pair_key = int(rng.integers(0, 2 ** 63))
    cb = MartonCodebook(params, pu, spec.symbol_map, l1, l2,
                        u1.astype(np.int64), u2.astype(np.int64), pair_key)
    if materialize is None:
        materialize = 2 ** (params.k1 + params.k2 + l1 + l2) <= AUTO_MATERIALIZE
    if materialize:
        cb.materialize()
    return cb


def marton_encode(cb: MartonCodebook, m1: int, m2: int) -> np.ndarray:
    l1, l2, _ = cb.chosen_pair(m1, m2)
    r1 = cb.u1[(int(m1) << cb.l1) + l1]
    r2 = cb.u2[(int(m2) << cb.l2) + l2]
    return cb.symbol_map[r1, r2]


def _receiver_table(cb: MartonCodebook, spec: BcSpec, j: int) -> np.ndarray:
    joint = build_bc_joint(spec)
    return joint.marginal(("U1", "U2", f"Y{j}")).table


def marton_decode(cb: MartonCodebook, spec: BcSpec, j: int, y, eps_p: float,
                  budget: int = DEFAULT_BUDGET, backend=None) -> int:
    """Nonunique simultaneous decoding of m_j at receiver j.

    A tuple (m1, l1, m2, l2) passes when (u1, u2, y_j) is eps'-typical for
    p(u1, u2, y_j).  Returns the message of receiver j if all passing
    tuples agree on it.
    """
    if j not in (1, 2):
        raise InvalidSpec("receiver must be 1 or 2")
    U1, U2 = cb.u1, cb.u2
    if U1.shape[0] * U2.shape[0] > budget:
        raise BudgetExceeded(f"{U1.shape[0] * U2.shape[0]} candidate tuples exceed budget {budget}")
    y = np.asarray(y, dtype=np.int64)
    table = _receiver_table(cb, spec, j)
    s1, s2, sy = table.shape
    ia = typical_rows(U1, y, sy, table.sum(axis=1), eps_p, backend)
    ib = typical_rows(U2, y, sy, table.sum(axis=0), eps_p, backend)
    d1 = (np.arange(U1.shape[0], dtype=np.int64) >> cb.l1)[:, None]
    d2 = (np.arange(U2.shape[0], dtype=np.int64) >> cb.l2)[:, None]
    cA, cB = (1, 0) if j == 1 else (0, 1)
    r = max(2, 1 << cb.k(j))
    status, i, jj = scan_pairs(U1, U2, y, (s1, s2, sy), table, eps_p, d1, d2, cA, cB, r,
                               ia, ib, backend=backend)
    if status == 0:
        raise DecodingFailure(DecodingFailure.NO_CANDIDATE)
    if status == 2:
        raise DecodingFailure(DecodingFailure.AMBIGUOUS)
    return int(d1[i, 0]) if j == 1 else int(d2[jj, 0])


@dataclass
class BcTrialRecord:
    success1: bool
    success2: bool
    failure1: str | None
    failure2: str | None
    m1: int
    m2: int
    m1_hat: int | None
    m2_hat: int | None
    covered: bool

    @property
    def success(self):
        return self.success1 and self.success2

    def to_dict(self):
        return dict(self.__dict__)


def run_bc_trial(cb: MartonCodebook, spec: BcSpec, eps_p: float, rng,
                 budget: int = DEFAULT_BUDGET, backend=None) -> BcTrialRecord:
    if spec.pu.shape != cb.pu.shape:
        raise InvalidSpec("codebook and channel use different auxiliary alphabets")
    m1 = int(rng.integers(0, 1 << cb.params.k1))
    m2 = int(rng.integers(0, 1 << cb.params.k2))
    covered = cb.chosen_pair(m1, m2, backend)[2]
    x = marton_encode(cb, m1, m2)
    y1, y2 = sample_bc(spec, x, rng)
    out = {}
    for j, y, m in ((1, y1, m1), (2, y2, m2)):
        try:
            est = marton_decode(cb, spec, j, y, eps_p, budget, backend)
        except DecodingFailure as exc:
            out[j] = (False, exc.kind, None)
            continue
        out[j] = (est == m, None if est == m else "wrong_estimate", est)
    return BcTrialRecord(out[1][0], out[2][0], out[1][1], out[2][1], m1, m2,
                         out[1][2], out[2][2], bool(covered))
