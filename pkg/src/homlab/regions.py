"""Rate regions as finite unions of convex polygons.

A region is a list of cells; each cell is a list of half-planes
``c1*R1 + c2*R2 <= b`` implicitly intersected with the nonnegative
quadrant.  Terms of the form ``R_j <= K - min{R_k, t1, t2, ...}`` are
case-split into one cell per candidate minimizer, so every cell stays
convex and vertices can be read off exactly.

MAC-side regions are in base-q units, broadcast regions in bits.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass

import numpy as np

from .channels import MAC_AXES
from .errors import (InvalidAlpha, InvalidSpec, MarkovPrecondFailed,
                     NotNaturalCombination, UnboundedCell, ZeroCoefficientVector)
from .prob import JointPmf, Pmf, conditional_entropy, entropy, mutual_information

TOL = 1e-9
_FAR = 1e6


@dataclass(frozen=True)
class RatePair:
    r1: float
    r2: float

    def __post_init__(self):
        if self.r1 < 0 or self.r2 < 0:
            raise ValueError("rates are nonnegative")

    def __iter__(self):
        return iter((self.r1, self.r2))


@dataclass(frozen=True)
class HalfPlane:
    c1: float
    c2: float
    b: float

    def __post_init__(self):
        if self.c1 == 0 and self.c2 == 0:
            raise ValueError("half-plane needs a nonzero normal")

    def holds(self, r1, r2, tol=TOL):
        return self.c1 * r1 + self.c2 * r2 <= self.b + tol


def r1_le(b):
    return HalfPlane(1.0, 0.0, float(b))


def r2_le(b):
    return HalfPlane(0.0, 1.0, float(b))


def r_le(j, b):
    return r1_le(b) if j == 1 else r2_le(b)


def r_ge(j, b):
    return HalfPlane(-1.0, 0.0, -float(b)) if j == 1 else HalfPlane(0.0, -1.0, -float(b))


def sum_le(b):
    return HalfPlane(1.0, 1.0, float(b))


class RateRegion:
    """Union of convex cells in the nonnegative quadrant.

    ``box`` is the side of the evaluation square ``[0, box]^2`` used for
    vertex extraction and grid comparisons; it does not restrict
    membership.
    """

    def __init__(self, cells, box=None, tol=TOL):
        self.cells = [tuple(c) for c in cells]
        self.box = None if box is None else float(box)
        self.tol = tol

    @classmethod
    def quadrant(cls, box=None):
        return cls([()], box)

    def intersect(self, other: "RateRegion") -> "RateRegion":
        cells = [a + b for a, b in itertools.product(self.cells, other.cells)]
        return RateRegion(cells, _min_box(self.box, other.box), min(self.tol, other.tol))

    def union(self, other: "RateRegion") -> "RateRegion":
        return RateRegion(self.cells + other.cells, _max_box(self.box, other.box),
                          min(self.tol, other.tol))

    __and__ = intersect
    __or__ = union

    def contains(self, pt) -> bool:
        r1, r2 = pt
        return bool(self.contains_many(np.array([r1]), np.array([r2]))[0])

    def contains_many(self, r1, r2) -> np.ndarray:
        r1 = np.asarray(r1, dtype=float)
        r2 = np.asarray(r2, dtype=float)
        quad = (r1 >= -self.tol) & (r2 >= -self.tol)
        out = np.zeros(np.broadcast(r1, r2).shape, dtype=bool)
        for cell in self.cells:
            ok = quad.copy()
            for h in cell:
                ok &= h.c1 * r1 + h.c2 * r2 <= h.b + self.tol
            out |= ok
        return out

    def cell_vertices(self, cell) -> list:
        box = self.box
        far = box is None
        B = _FAR if far else box
        planes = list(cell) + [HalfPlane(-1.0, 0.0, 0.0), HalfPlane(0.0, -1.0, 0.0),
                               r1_le(B), r2_le(B)]
        pts = []
        for h, g in itertools.combinations(planes, 2):
            det = h.c1 * g.c2 - h.c2 * g.c1
            if abs(det) < 1e-14:
                continue
            x = (h.b * g.c2 - h.c2 * g.b) / det
            y = (h.c1 * g.b - h.b * g.c1) / det
            if all(p.c1 * x + p.c2 * y <= p.b + self.tol for p in planes):
                pts.append((x, y))
        hull = [(_clean(x), _clean(y)) for x, y in _hull(pts, self.tol)]
        if far and any(max(p) >= _FAR - 1.0 for p in hull):
            raise UnboundedCell("cell is unbounded and no evaluation box is set")
        return hull

    def vertices(self) -> list:
        """Extreme points of every cell (empty list for an empty cell)."""
        return [self.cell_vertices(c) for c in self.cells]

    def simplify(self) -> "RateRegion":
        """Drop empty cells and cells contained in another cell.

        A convex cell lies inside another exactly when all its vertices do,
        so the result describes the same set (up to ``tol``).
        """
        verts = self.vertices()
        keep = []
        for i, vi in enumerate(verts):
            if not vi:
                continue
            covered = False
            for j, vj in enumerate(verts):
                if j == i or not vj:
                    continue
                inside = all(all(h.holds(x, y, self.tol) for h in self.cells[j]) for x, y in vi)
                # of two identical cells keep the first one
                if inside and not (j > i and all(
                        all(h.holds(x, y, self.tol) for h in self.cells[i]) for x, y in vj)):
                    covered = True
                    break
            if not covered:
                keep.append(self.cells[i])
        return RateRegion(keep, self.box, self.tol)

    def is_empty(self) -> bool:
        return all(not v for v in self.vertices())

    def to_dict(self) -> dict:
        return {"box": self.box, "tol": self.tol,
                "cells": [[{"c1": h.c1, "c2": h.c2, "b": h.b} for h in cell]
                          for cell in self.cells]}

    @classmethod
    def from_dict(cls, d) -> "RateRegion":
        cells = [[HalfPlane(h["c1"], h["c2"], h["b"]) for h in cell] for cell in d["cells"]]
        return cls(cells, d.get("box"), d.get("tol", TOL))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def vertex_rows(self) -> list:
        rows = []
        for cid, verts in enumerate(self.vertices()):
            rows.extend((cid, v[0], v[1]) for v in verts)
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["cell_id", "R1", "R2"])
        for cid, a, b in self.vertex_rows():
            w.writerow([cid, repr(_clean(a)), repr(_clean(b))])
        return buf.getvalue()

    def __repr__(self):
        return f"RateRegion({len(self.cells)} cells, box={self.box})"


def _clean(v):
    return 0.0 if abs(v) < 1e-15 else float(v)


def _min_box(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def _max_box(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return max(a, b)


def _hull(pts, tol):
    """Counter-clockwise convex hull without collinear points."""
    uniq = []
    for p in sorted(pts):
        if not any(abs(p[0] - u[0]) <= tol and abs(p[1] - u[1]) <= tol for u in uniq):
            uniq.append(p)
    if len(uniq) <= 2:
        return uniq

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in uniq:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= tol:
            lower.pop()
        lower.append(p)
    for p in reversed(uniq):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= tol:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def grid_points(box, resolution):
    g = np.linspace(0.0, box, resolution)
    r1, r2 = np.meshgrid(g, g, indexing="ij")
    return r1.ravel(), r2.ravel()


def grid_disagreements(a: RateRegion, b: RateRegion, box=None, resolution=200) -> int:
    """Number of grid points of ``[0, box]^2`` on which membership differs."""
    box = box or _max_box(a.box, b.box)
    r1, r2 = grid_points(box, resolution)
    return int(np.count_nonzero(a.contains_many(r1, r2) != b.contains_many(r1, r2)))


def grid_subset_violations(inner: RateRegion, outer: RateRegion, box=None, resolution=200) -> int:
    box = box or _max_box(inner.box, outer.box)
    r1, r2 = grid_points(box, resolution)
    return int(np.count_nonzero(inner.contains_many(r1, r2) & ~outer.contains_many(r1, r2)))


# ---------------------------------------------------------------------------
# MAC / computation regions (base q)

def _q_of(joint: JointPmf) -> int:
    return joint.size("X1")


def _check_a(joint: JointPmf, a) -> tuple:
    q = _q_of(joint)
    a = tuple(int(v) % q for v in a)
    if a == (0, 0):
        raise ZeroCoefficientVector("a must be nonzero")
    t = joint.marginal(("X1", "X2", "W")).table
    x1, x2, w = np.meshgrid(np.arange(q), np.arange(q), np.arange(q), indexing="ij")
    off = (a[0] * x1 + a[1] * x2) % q != w
    if np.any(t[off] > 1e-12):
        raise InvalidSpec(f"W axis of the joint is not a1*X1 + a2*X2 for a={a}")
    return a


def mac_box(joint: JointPmf) -> float:
    q = _q_of(joint)
    return 1.0 + max(entropy(joint, "X1", q), entropy(joint, "X2", q))


def h_combination_given_y(joint: JointPmf, b) -> float:
    """H(b1 X1 + b2 X2 | Y) in base q, computed from the (X1, X2, Y) marginal."""
    q = _q_of(joint)
    pxy = joint.marginal(("X1", "X2", "Y")).table
    tw = np.zeros((q, pxy.shape[2]))
    for x1 in range(q):
        for x2 in range(q):
            tw[(b[0] * x1 + b[1] * x2) % q] += pxy[x1, x2]
    return conditional_entropy(JointPmf(("W", "Y"), tw), "W", "Y", q)


def _other(j):
    return 2 if j == 1 else 1


def _x(j):
    return f"X{j}"


def region_cf(joint: JointPmf, a, delta: float = 0.0) -> RateRegion:
    a = _check_a(joint, a)
    q = _q_of(joint)
    hw = conditional_entropy(joint, "W", "Y", q)
    cell = [r_le(j, entropy(joint, _x(j), q) - hw - delta)
            for j in (1, 2) if a[j - 1] != 0]
    return RateRegion([cell], mac_box(joint))


def _mac_constants(joint):
    q = _q_of(joint)
    i1 = mutual_information(joint, "X1", "Y", "X2", q)
    i2 = mutual_information(joint, "X2", "Y", "X1", q)
    i12 = mutual_information(joint, ("X1", "X2"), "Y", (), q)
    return i1, i2, i12


def _mac_cell(joint, delta):
    i1, i2, i12 = _mac_constants(joint)
    return [r1_le(i1 - delta), r2_le(i2 - delta), sum_le(i12 - delta)]


def region_mac(joint: JointPmf, delta: float = 0.0) -> RateRegion:
    return RateRegion([_mac_cell(joint, delta)], mac_box(joint))


def nonzero_pairs(q, both=False):
    lo = 1 if both else 0
    return [(b1, b2) for b1 in range(lo, q) for b2 in range(lo, q) if (b1, b2) != (0, 0)]


def region_j(joint: JointPmf, a, j: int, delta: float = 0.0) -> RateRegion:
    """The four-constraint region indexed by ``j`` in {1, 2}.

    The extra constraint bounds R_j by I(X1,X2;Y) - H(X_other) plus the
    smallest H(b1 X1 + b2 X2 | Y) over b with both entries nonzero.
    """
    if j not in (1, 2):
        raise ValueError("j must be 1 or 2")
    q = _q_of(joint)
    hmin = min(h_combination_given_y(joint, b) for b in nonzero_pairs(q, both=True))
    _, _, i12 = _mac_constants(joint)
    extra = r_le(j, i12 - entropy(joint, _x(_other(j)), q) + hmin - delta)
    return RateRegion([_mac_cell(joint, delta) + [extra]], mac_box(joint))


def region_star_star(joint: JointPmf, a, delta: float = 0.0) -> RateRegion:
    a = _check_a(joint, a)
    q = _q_of(joint)
    _, _, i12 = _mac_constants(joint)
    region = RateRegion.quadrant(mac_box(joint))
    for j in (1, 2):
        if a[j - 1] == 0:
            continue
        k = _other(j)
        ij = mutual_information(joint, _x(j), "Y", _x(k), q)
        jk = mutual_information(joint, _x(k), ("W", "Y"), (), q)
        split = RateRegion([
            [r_le(j, ij + delta), r_le(k, jk), sum_le(i12 + delta)],
            [r_le(j, ij + delta), r_ge(k, jk), r_le(j, i12 - jk + delta)],
        ])
        region = region & split
    return region


def is_natural(joint: JointPmf, a, slack: float = 1e-9):
    """Is W_a a minimizer of H(W_b | Y) over nonzero b?  Ties count as natural.

    Returns ``(verdict, witness)`` with ``witness[b] = H(W_b | Y)``.
    """
    q = _q_of(joint)
    a = tuple(int(v) % q for v in a)
    if a == (0, 0):
        raise ZeroCoefficientVector("a must be nonzero")
    witness = {b: h_combination_given_y(joint, b) for b in nonzero_pairs(q)}
    return witness[a] <= min(witness.values()) + slack, witness


def check_prop1(joint: JointPmf, a, resolution: int = 200) -> int:
    lhs = region_star_star(joint, a)
    rhs = region_cf(joint, a) | region_mac(joint)
    return grid_disagreements(lhs, rhs, mac_box(joint), resolution)


def check_lemma2(joint: JointPmf, a, resolution: int = 200) -> int:
    natural, witness = is_natural(joint, a)
    if not natural:
        raise NotNaturalCombination(f"a={tuple(a)} is not natural: {witness}")
    cf = region_cf(joint, a)
    lhs = cf | region_j(joint, a, 1) | region_j(joint, a, 2)
    rhs = cf | region_mac(joint)
    return grid_disagreements(lhs, rhs, mac_box(joint), resolution)


# ---------------------------------------------------------------------------
# Broadcast / Marton regions (bits)

def marton_constants(bc_joint: JointPmf, alpha: float) -> dict:
    m = lambda a, b, g=(): mutual_information(bc_joint, a, b, g, 2)  # noqa: E731
    i12 = m("U1", "U2")
    abar = 1.0 - alpha
    return {
        "I12": i12,
        "A1": m("U1", ("Y1", "U2")) - alpha * i12,
        "C1": m(("U1", "U2"), "Y1"),
        "D1": m("U2", ("Y1", "U1")) - abar * i12,
        "E1": m("U1", "Y1") - alpha * i12,
        "A2": m("U2", ("Y2", "U1")) - abar * i12,
        "C2": m(("U1", "U2"), "Y2"),
        "D2": m("U1", ("Y2", "U2")) - alpha * i12,
        "E2": m("U2", "Y2") - abar * i12,
    }


def marton_box(bc_joint: JointPmf, delta: float = 0.0) -> float:
    return 1.0 + max(entropy(bc_joint, "U1", 2), entropy(bc_joint, "U2", 2)) + delta


def _min_split(j, C, D, delta):
    """Cells of R_j <= C - min{R_k, D, C} + delta, one per minimizer."""
    k = _other(j)
    cells = [[r_le(k, D), r_le(k, C), sum_le(C + delta)]]
    if D <= C + TOL:
        cells.append([r_ge(k, D), r_le(j, C - D + delta)])
    if C <= D + TOL:
        cells.append([r_ge(k, C), r_le(j, delta)])
    return RateRegion(cells)


def marton_region(bc_joint: JointPmf, alpha: float, delta: float = 0.0,
                  variant: str = "theorem4") -> RateRegion:
    if not 0.0 <= alpha <= 1.0:
        raise InvalidAlpha(f"alpha must lie in [0, 1], got {alpha}")
    k = marton_constants(bc_joint, alpha)
    box = marton_box(bc_joint, max(delta, 0.0))
    if variant == "theorem4":
        r = RateRegion([[r1_le(k["A1"] + delta), r2_le(k["A2"] + delta)]], box)
        return r & _min_split(1, k["C1"], k["D1"], delta) & _min_split(2, k["C2"], k["D2"], delta)
    if variant == "achievable_pair":
        rx1 = RateRegion([[r1_le(max(0.0, k["E1"] - delta))],
                          [r1_le(k["A1"] - delta), sum_le(k["C1"] - delta)]], box)
        rx2 = RateRegion([[r2_le(max(0.0, k["E2"] - delta))],
                          [r2_le(k["A2"] - delta), sum_le(k["C2"] - delta)]], box)
        return rx1 & rx2
    raise ValueError(f"unknown Marton variant {variant!r}")


def marton_union(bc_joint: JointPmf, alphas, delta: float = 0.0) -> RateRegion:
    """Union of the per-alpha regions, without convexification."""
    out = None
    for alpha in alphas:
        r = marton_region(bc_joint, alpha, delta)
        out = r if out is None else out | r
    return out


def check_lemma9(bc_joint: JointPmf, alpha: float, resolution: int = 200) -> int:
    lhs = marton_region(bc_joint, alpha, 0.0, "theorem4")
    rhs = marton_region(bc_joint, alpha, 0.0, "achievable_pair")
    return grid_disagreements(lhs, rhs, marton_box(bc_joint), resolution)


# ---------------------------------------------------------------------------
# General outer bound with user-supplied auxiliaries

@dataclass(frozen=True)
class AuxiliarySpec:
    """Time-sharing variable Q and auxiliary T.

    ``px1_given_q[q_idx, x1]``, ``px2_given_q[q_idx, x2]`` and
    ``pt_given[x1, x2, q_idx, t]`` are row-stochastic.
    """
    pq: Pmf
    px1_given_q: np.ndarray
    px2_given_q: np.ndarray
    pt_given: np.ndarray

    def __post_init__(self):
        nq = len(self.pq)
        for name in ("px1_given_q", "px2_given_q", "pt_given"):
            arr = np.array(getattr(self, name), dtype=float)
            if np.any(arr < 0) or np.any(np.abs(arr.sum(axis=-1) - 1.0) > 1e-9):
                raise InvalidSpec(f"{name} rows must be pmfs")
            object.__setattr__(self, name, arr)
        if self.px1_given_q.shape[0] != nq or self.px2_given_q.shape[0] != nq:
            raise InvalidSpec("conditional input pmfs need one row per value of Q")
        if self.pt_given.shape[2] != nq:
            raise InvalidSpec("pt_given must be indexed [x1][x2][q][t]")

    @classmethod
    def trivial(cls, px1, px2) -> "AuxiliarySpec":
        """Q and T both constant."""
        q = len(px1)
        return cls(Pmf([1.0]), np.array([px1.probs]), np.array([px2.probs]),
                   np.ones((q, q, 1, 1)))

    @classmethod
    def reveal_inputs(cls, px1, px2) -> "AuxiliarySpec":
        """Q constant, T = (X1, X2)."""
        q = len(px1)
        pt = np.zeros((q, q, 1, q * q))
        for x1 in range(q):
            for x2 in range(q):
                pt[x1, x2, 0, x1 * q + x2] = 1.0
        return cls(Pmf([1.0]), np.array([px1.probs]), np.array([px2.probs]), pt)


def _channel_from_joint(joint: JointPmf):
    pxy = joint.marginal(("X1", "X2", "Y")).table
    px = pxy.sum(axis=2)
    chan = np.divide(pxy, px[:, :, None], out=np.zeros_like(pxy), where=px[:, :, None] > 0)
    return chan, px > 0


def general_outer(joint: JointPmf, a, aux: AuxiliarySpec) -> RateRegion:
    """Evaluate the five-constraint outer bound at the supplied auxiliaries."""
    q = _q_of(joint)
    a = _check_a(joint, a)
    if a[0] == 0 or a[1] == 0:
        raise ZeroCoefficientVector("both coefficients must be nonzero")
    chan, support = _channel_from_joint(joint)
    for w in range(q):
        rows = [chan[x1, x2] for x1 in range(q) for x2 in range(q)
                if support[x1, x2] and (a[0] * x1 + a[1] * x2) % q == w]
        if rows and any(np.max(np.abs(r - rows[0])) > 1e-9 for r in rows[1:]):
            raise MarkovPrecondFailed("(X1, X2) -> W -> Y is not a Markov chain")
    nq, nt = len(aux.pq), aux.pt_given.shape[3]
    ny = chan.shape[2]
    table = np.zeros((nq, q, q, q, nt, ny))
    for qi in range(nq):
        for x1 in range(q):
            for x2 in range(q):
                p = aux.pq.probs[qi] * aux.px1_given_q[qi, x1] * aux.px2_given_q[qi, x2]
                if p == 0:
                    continue
                if not support[x1, x2]:
                    raise InvalidSpec("auxiliaries put mass on inputs the joint never uses")
                w = (a[0] * x1 + a[1] * x2) % q
                table[qi, x1, x2, w] += p * aux.pt_given[x1, x2, qi][:, None] * chan[x1, x2][None, :]
    full = JointPmf(("Q", "X1", "X2", "W", "T", "Y"), table)
    m = lambda u, v, g: mutual_information(full, u, v, g, q)  # noqa: E731
    iwy = m("W", "Y", "Q")
    i2 = m("X2", "W", ("T", "Q"))
    i1 = m("X1", "W", ("T", "Q"))
    i12 = m(("X1", "X2"), "W", ("T", "Q"))
    cell = [r1_le(m("X1", "Y", ("X2", "Q"))), r2_le(m("X2", "Y", ("X1", "Q"))),
            r1_le(iwy - i2), r2_le(iwy - i1), sum_le(iwy + i12 - i1 - i2)]
    return RateRegion([cell], mac_box(joint))


__all__ = [
    "RatePair", "HalfPlane", "RateRegion", "AuxiliarySpec", "MAC_AXES",
    "region_cf", "region_mac", "region_j", "region_star_star", "is_natural",
    "check_prop1", "check_lemma2", "marton_region", "marton_union", "check_lemma9",
    "general_outer", "grid_disagreements", "grid_subset_violations", "mac_box", "marton_box",
]
