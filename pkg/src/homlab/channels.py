"""Channel problem instances: the two-sender MAC with a target linear
combination, and the two-receiver broadcast channel with Marton parameters.

JSON forms (see :func:`mac_from_dict` / :func:`bc_from_dict`)::

    {"kind": "mac", "q": 2, "px1": [.5, .5], "px2": [.5, .5],
     "transition": [[[p(y|0,0), ...], ...], ...], "a": [1, 1],
     "y_labels": ["0", "1"]}                       # y_labels optional

    {"kind": "bc", "pu": [[...], ...], "symbol_map": [[x(u1,u2), ...], ...],
     "transition": [[[p(y1,y2|x), ...], ...], ...], "alpha": 0.5}

``transition`` for the MAC is indexed ``[x1][x2][y]``; for the BC it is
indexed ``[x][y1][y2]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AlphabetMismatch, InvalidSpec, LengthMismatch
from .gf import check_modulus
from .prob import MASS_TOL, JointPmf, Pmf

MAC_AXES = ("X1", "X2", "W", "Y")
BC_AXES = ("U1", "U2", "Y1", "Y2")


def _rows_stochastic(t: np.ndarray, lead: int, what: str):
    if np.any(t < 0):
        raise InvalidSpec(f"{what}: negative transition probability")
    sums = t.reshape(t.shape[:lead] + (-1,)).sum(axis=-1)
    if np.any(np.abs(sums - 1.0) > MASS_TOL):
        raise InvalidSpec(f"{what}: transition rows must sum to 1")


@dataclass(frozen=True)
class MacSpec:
    q: int
    px1: Pmf
    px2: Pmf
    transition: np.ndarray
    a: tuple
    y_labels: tuple = field(default=None)

    def __post_init__(self):
        try:
            check_modulus(self.q)
        except ValueError as exc:
            raise InvalidSpec(str(exc)) from None
        t = np.array(self.transition, dtype=float)
        if t.ndim != 3 or t.shape[:2] != (self.q, self.q):
            raise InvalidSpec(f"transition must have shape (q, q, |Y|), got {t.shape}")
        _rows_stochastic(t, 2, "MAC")
        t.setflags(write=False)
        object.__setattr__(self, "transition", t)
        if len(self.px1) != self.q or len(self.px2) != self.q:
            raise InvalidSpec("input pmfs must live on F_q")
        a = tuple(int(v) % self.q for v in self.a)
        if len(a) != 2:
            raise InvalidSpec("a must have two entries")
        if a == (0, 0):
            raise InvalidSpec("a must be nonzero")
        object.__setattr__(self, "a", a)
        if self.y_labels is None:
            object.__setattr__(self, "y_labels", tuple(str(i) for i in range(t.shape[2])))
        elif len(self.y_labels) != t.shape[2]:
            raise InvalidSpec("y_labels length does not match output alphabet")

    @property
    def ny(self) -> int:
        return self.transition.shape[2]

    def with_a(self, a) -> "MacSpec":
        return MacSpec(self.q, self.px1, self.px2, self.transition, tuple(a), self.y_labels)

    def to_dict(self) -> dict:
        return {"kind": "mac", "q": self.q, "px1": self.px1.probs.tolist(),
                "px2": self.px2.probs.tolist(), "transition": self.transition.tolist(),
                "a": list(self.a), "y_labels": list(self.y_labels)}


@dataclass(frozen=True)
class BcSpec:
    pu: JointPmf
    symbol_map: np.ndarray
    transition: np.ndarray
    alpha: float = 0.5

    def __post_init__(self):
        if self.pu.axes != ("U1", "U2"):
            raise InvalidSpec("pu must be a JointPmf over axes ('U1', 'U2')")
        if not 0.0 <= float(self.alpha) <= 1.0:
            raise InvalidSpec(f"alpha must lie in [0, 1], got {self.alpha}")
        sm = np.array(self.symbol_map, dtype=np.int64)
        if sm.shape != self.pu.shape:
            raise InvalidSpec("symbol_map must have shape (|U1|, |U2|)")
        t = np.array(self.transition, dtype=float)
        if t.ndim != 3:
            raise InvalidSpec("BC transition must have shape (|X|, |Y1|, |Y2|)")
        if sm.min() < 0 or sm.max() >= t.shape[0]:
            raise InvalidSpec("symbol_map refers to an input symbol outside X")
        _rows_stochastic(t, 1, "BC")
        sm.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "symbol_map", sm)
        object.__setattr__(self, "transition", t)
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def sizes(self):
        """(|U1|, |U2|, |X|, |Y1|, |Y2|)."""
        return self.pu.shape + self.transition.shape

    def with_alpha(self, alpha) -> "BcSpec":
        return BcSpec(self.pu, self.symbol_map, self.transition, alpha)

    def to_dict(self) -> dict:
        return {"kind": "bc", "pu": self.pu.table.tolist(),
                "symbol_map": self.symbol_map.tolist(),
                "transition": self.transition.tolist(), "alpha": self.alpha}


def build_mac_joint(spec: MacSpec) -> JointPmf:
    """p(x1, x2, w, y) = p(x1) p(x2) 1{w = a1 x1 + a2 x2} p(y | x1, x2)."""
    q = spec.q
    a1, a2 = spec.a
    x1, x2 = np.meshgrid(np.arange(q), np.arange(q), indexing="ij")
    w = (a1 * x1 + a2 * x2) % q
    table = np.zeros((q, q, q, spec.ny))
    pin = np.outer(spec.px1.probs, spec.px2.probs)
    table[x1, x2, w, :] = pin[:, :, None] * spec.transition
    return JointPmf(MAC_AXES, table, {"Y": list(spec.y_labels)})


def combination_joint(spec: MacSpec, b) -> JointPmf:
    """Joint law of (W_b, Y) for an arbitrary coefficient pair ``b``."""
    return build_mac_joint(spec.with_a(b)).marginal(("W", "Y"))


def check_markov_through_w(spec: MacSpec, tol: float = 1e-9) -> bool:
    """Does p(y | x1, x2) depend on (x1, x2) only through w = a1 x1 + a2 x2?"""
    q = spec.q
    a1, a2 = spec.a
    for w in range(q):
        rows = [spec.transition[x1, x2] for x1 in range(q) for x2 in range(q)
                if (a1 * x1 + a2 * x2) % q == w]
        ref = rows[0]
        if any(np.max(np.abs(r - ref)) > tol for r in rows[1:]):
            return False
    return True


def virtualize(raw_transition, phi1, phi2) -> np.ndarray:
    """Virtual finite-field channel p(y | v1, v2) = raw(y | phi1(v1), phi2(v2)).

    ``phi_j`` lists, for each field symbol, the index of the raw input it
    maps to; its length fixes q.
    """
    raw = np.asarray(raw_transition, dtype=float)
    if raw.ndim != 3:
        raise AlphabetMismatch("raw transition must be indexed [x1][x2][y]")
    phi1 = np.asarray(phi1, dtype=np.int64)
    phi2 = np.asarray(phi2, dtype=np.int64)
    if phi1.shape != phi2.shape or phi1.ndim != 1:
        raise AlphabetMismatch("phi1 and phi2 must both be defined on all of F_q")
    for phi, size in ((phi1, raw.shape[0]), (phi2, raw.shape[1])):
        if phi.min() < 0 or phi.max() >= size:
            raise AlphabetMismatch("map sends a field symbol outside the input alphabet")
    return raw[phi1[:, None], phi2[None, :], :]


def _draw_rows(rows: np.ndarray, rng) -> np.ndarray:
    cdf = np.cumsum(rows, axis=-1)
    u = rng.random(rows.shape[0])
    out = (u[:, None] >= cdf).sum(axis=-1)
    return np.minimum(out, rows.shape[-1] - 1)


def sample_mac(spec: MacSpec, x1, x2, rng) -> np.ndarray:
    """One memoryless channel use per coordinate; returns output indices."""
    x1 = np.asarray(getattr(x1, "data", x1), dtype=np.int64)
    x2 = np.asarray(getattr(x2, "data", x2), dtype=np.int64)
    if x1.shape != x2.shape:
        raise LengthMismatch("codewords must have equal length")
    return _draw_rows(spec.transition[x1, x2], rng)


def build_bc_joint(spec: BcSpec) -> JointPmf:
    """p(u1, u2, y1, y2) = p(u1, u2) p(y1, y2 | x(u1, u2))."""
    table = spec.pu.table[:, :, None, None] * spec.transition[spec.symbol_map]
    return JointPmf(BC_AXES, table)


def sample_bc(spec: BcSpec, x, rng):
    x = np.asarray(getattr(x, "data", x), dtype=np.int64)
    ny1, ny2 = spec.transition.shape[1:]
    flat = _draw_rows(spec.transition[x].reshape(x.shape[0], -1), rng)
    return flat // ny2, flat % ny2


def mac_from_dict(d: dict) -> MacSpec:
    from .errors import SchemaError
    for key in ("q", "px1", "px2", "transition", "a"):
        if key not in d:
            raise SchemaError(key, f"MAC spec is missing {key!r}")
    try:
        return MacSpec(int(d["q"]), Pmf(d["px1"]), Pmf(d["px2"]),
                       np.asarray(d["transition"], dtype=float), tuple(d["a"]),
                       tuple(d["y_labels"]) if d.get("y_labels") else None)
    except (InvalidSpec, ValueError) as exc:
        raise SchemaError("mac", str(exc)) from None


def bc_from_dict(d: dict) -> BcSpec:
    from .errors import SchemaError
    for key in ("pu", "symbol_map", "transition"):
        if key not in d:
            raise SchemaError(key, f"BC spec is missing {key!r}")
    alpha = float(d.get("alpha", 0.5))
    if not 0.0 <= alpha <= 1.0:
        raise SchemaError("alpha", f"alpha must lie in [0, 1], got {alpha}")
    try:
        return BcSpec(JointPmf(("U1", "U2"), d["pu"]), np.asarray(d["symbol_map"]),
                      np.asarray(d["transition"], dtype=float), alpha)
    except (InvalidSpec, ValueError) as exc:
        raise SchemaError("bc", str(exc)) from None


def additive_mac(q: int, noise, px1=None, px2=None, a=(1, 1)) -> MacSpec:
    """Y = X1 + X2 + Z over F_q with Z ~ ``noise`` (a length-q pmf)."""
    noise = np.asarray(noise, dtype=float)
    t = np.zeros((q, q, q))
    for x1 in range(q):
        for x2 in range(q):
            for z in range(q):
                t[x1, x2, (x1 + x2 + z) % q] += noise[z]
    px1 = Pmf.uniform(q) if px1 is None else px1
    px2 = Pmf.uniform(q) if px2 is None else px2
    return MacSpec(q, px1, px2, t, tuple(a))
