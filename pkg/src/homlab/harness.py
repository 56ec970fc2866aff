"""Monte Carlo error estimates, empirical checks of the constructive lemmas,
and report export.

Every random quantity is drawn from a stream derived from a master seed by
``SeedSequence(seed, spawn_key=...)``, so any run can be replayed exactly
and trials can be farmed out to workers without changing the result.
"""
from __future__ import annotations

import csv
import itertools
import json
import math
import os
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .channels import BcSpec, MacSpec
from .errors import BudgetExceeded, InstanceTooLarge, InvalidSpec, IoFailure
from .gf import rank_array
from .homocode import (DEFAULT_BUDGET, HomologousParams, generate_homologous_codebook,
                       run_computation_trial, sample_shaped_codewords)
from .martoncode import MartonParams, generate_marton_codebook, run_bc_trial
from .prob import Pmf

Z95 = 1.959963984540054
REPORT_SCHEMA = "homlab.report"
REPORT_VERSION = 1
CSV_COLUMNS = ("n", "rate_point_r1", "rate_point_r2", "trials", "failures", "rate",
               "ci_lo", "ci_hi")


def wilson_interval(failures: int, trials: int, z: float = Z95) -> tuple:
    if trials == 0:
        return (0.0, 1.0)
    p = failures / trials
    z2 = z * z
    denom = 1 + z2 / trials
    centre = (p + z2 / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / denom
    lo = 0.0 if failures == 0 else max(0.0, centre - half)
    hi = 1.0 if failures == trials else min(1.0, centre + half)
    return (lo, hi)


@dataclass
class ErrorEstimate:
    trials: int
    failures: int
    n: int = 0
    rate_point: tuple = (0.0, 0.0)
    mode: str = "ensemble"
    failure_kinds: dict = field(default_factory=dict)
    seed: int = 0

    @property
    def rate(self) -> float:
        return self.failures / self.trials if self.trials else 0.0

    @property
    def ci95(self) -> tuple:
        return wilson_interval(self.failures, self.trials)

    def csv_row(self) -> dict:
        lo, hi = self.ci95
        return {"n": self.n, "rate_point_r1": self.rate_point[0],
                "rate_point_r2": self.rate_point[1], "trials": self.trials,
                "failures": self.failures, "rate": self.rate, "ci_lo": lo, "ci_hi": hi}

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = "error_estimate"
        d["rate_point"] = list(self.rate_point)
        d["rate"] = self.rate
        d["ci95"] = list(self.ci95)
        return d


@dataclass
class VerificationReport:
    lemma: str
    statistic: object
    threshold: object
    passed: bool
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = "verification"
        return d


def trial_rng(seed: int, *key) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


# ---------------------------------------------------------------- estimation

def message_lengths(n: int, rate) -> tuple:
    """Message lengths k_j = round(n R_j)."""
    return tuple(int(round(n * r)) for r in rate)


def _run_chunk(job):
    kind, spec, n, rate, seed, trials, opts = job
    kinds = Counter()
    k1, k2 = message_lengths(n, rate)
    fixed = None
    if opts["mode"] == "fixed":
        fixed = _make_codebook(kind, spec, n, k1, k2, seed, trial_rng(seed, n), opts)
    for t in trials:
        rng = trial_rng(seed, n, t)
        cb = fixed if fixed is not None else _make_codebook(kind, spec, n, k1, k2, seed, rng, opts)
        if kind == "mac":
            rec = run_computation_trial(cb, opts["a"], spec, opts["eps_p"], rng,
                                        opts["budget"], opts["backend"])
            kinds[rec.failure or "ok"] += 1
        else:
            rec = run_bc_trial(cb, spec, opts["eps_p"], rng, opts["budget"], opts["backend"])
            kinds["ok" if rec.success else "fail"] += 1
            for j, f in ((1, rec.failure1), (2, rec.failure2)):
                if f:
                    kinds[f"receiver{j}:{f}"] += 1
    return kinds


def _make_codebook(kind, spec, n, k1, k2, seed, rng, opts):
    if kind == "mac":
        params = HomologousParams(spec.q, n, k1, k2, opts["eps"], seed)
        return generate_homologous_codebook(params, spec.px1, spec.px2, rng, opts["budget"])
    params = MartonParams(n, k1, k2, opts["alpha"], opts["eps"], seed)
    return generate_marton_codebook(params, spec, rng, opts["budget"], materialize=False)


def estimate_error_rate(spec, n: int, rate, trials: int = 2000, seed: int = 0, *,
                        eps: float = 0.1, eps_p: float | None = None, a=None,
                        alpha: float | None = None, mode: str = "ensemble",
                        budget: int = DEFAULT_BUDGET, backend=None,
                        workers: int = 1) -> ErrorEstimate:
    """Monte Carlo error probability at block length ``n`` and rate pair ``rate``.

    ``spec`` is a :class:`MacSpec` (computation over the MAC, rates in base-q
    units, failure means the estimate of the combination is wrong) or a
    :class:`BcSpec` (Marton coding, rates in bits, failure means either
    receiver errs).  ``mode="ensemble"`` draws a fresh codebook per trial;
    ``mode="fixed"`` reuses one codebook drawn from ``(seed, n)``.
    """
    if mode not in ("ensemble", "fixed"):
        raise InvalidSpec(f"unknown estimation mode {mode!r}")
    if isinstance(spec, MacSpec):
        kind = "mac"
    elif isinstance(spec, BcSpec):
        kind = "bc"
    else:
        raise InvalidSpec("spec must be a MacSpec or a BcSpec")
    opts = {"eps": eps, "eps_p": 2 * eps if eps_p is None else eps_p,
            "a": tuple(spec.a if a is None else a) if kind == "mac" else None,
            "alpha": spec.alpha if alpha is None and kind == "bc" else alpha,
            "mode": mode, "budget": budget, "backend": backend}
    idx = list(range(trials))
    if workers > 1 and trials > 1:
        chunks = [idx[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_run_chunk, [(kind, spec, n, tuple(rate), seed, c, opts)
                                               for c in chunks]))
        kinds = sum(parts, Counter())
    else:
        kinds = _run_chunk((kind, spec, n, tuple(rate), seed, idx, opts))
    failures = trials - kinds.get("ok", 0)
    return ErrorEstimate(trials, failures, n, tuple(float(r) for r in rate), mode,
                         dict(sorted((k, v) for k, v in kinds.items() if k != "ok")), seed)


# ---------------------------------------------------------------- full rank

def exact_full_rank_prob(q: int, k: int, n: int, exact: bool = False):
    """P(a uniform k x n matrix over F_q has rank k) = prod_j (1 - q^(j-1-n))."""
    if k > n:
        return Fraction(0) if exact else 0.0
    p = Fraction(1)
    for j in range(1, k + 1):
        p *= Fraction(q ** n - q ** (j - 1), q ** n)
    return p if exact else float(p)


def enumerate_full_rank(q: int, k: int, n: int) -> Fraction:
    """Exhaustive count over all q^(kn) matrices (tiny cases only)."""
    if q ** (k * n) > 1 << 20:
        raise InstanceTooLarge("too many matrices to enumerate")
    full = 0
    for entries in itertools.product(range(q), repeat=k * n):
        full += rank_array(np.array(entries).reshape(k, n), q) == k
    return Fraction(full, q ** (k * n))


def verify_full_rank(q: int, k: int, n: int, samples: int = 10_000, seed: int = 0,
                     trend_ns=range(4, 17, 2)) -> VerificationReport:
    """Empirical full-rank frequency against the product formula, plus the
    decay of n (1 - P(full rank)) at k = n/2 over even n."""
    rng = trial_rng(seed, q, k, n)
    if k == 0:
        hits = samples
    else:
        mats = rng.integers(0, q, size=(samples, k, n))
        hits = sum(rank_array(m, q) == k for m in mats)
    exact = exact_full_rank_prob(q, k, n)
    freq = hits / samples
    sigma = math.sqrt(max(exact * (1 - exact), 1e-300) / samples)
    within = abs(freq - exact) <= 3 * sigma
    trend = [m * (1 - exact_full_rank_prob(q, m // 2, m)) for m in trend_ns]
    decreasing = all(b < a for a, b in zip(trend, trend[1:]))
    return VerificationReport(
        "full_rank", freq, [exact - 3 * sigma, exact + 3 * sigma], bool(within and decreasing),
        {"test": "empirical frequency within 3 sigma of exact; n(1-P) strictly decreasing",
         "q": q, "k": k, "n": n, "samples": samples, "seed": seed, "exact": exact,
         "sigma": sigma, "trend_n": list(trend_ns), "trend": trend,
         "trend_decreasing": decreasing})


# ---------------------------------------------------------------- codeword marginals

def verify_codeword_marginal(q: int, n: int, px, channel=None, i: int = 0,
                             samples: int = 100_000, eps: float = 0.1,
                             seed: int = 0) -> VerificationReport:
    """Per-symbol law of coordinate ``i`` of a shaped codeword, given it is typical.

    Each sample is a fresh single-message codebook.  With ``channel`` (a
    matrix p(y|x)) the coordinate is also sent through it and the joint
    symbol-output frequencies are checked against (1 +- eps) p(x) p(y|x).
    """
    px = px if isinstance(px, Pmf) else Pmf(px)
    if not 0 <= i < n:
        raise InvalidSpec("coordinate index outside the block")
    rng = trial_rng(seed, q, n, i)
    words, shaped = sample_shaped_codewords(q, n, px, eps, samples, rng)
    xi = words[shaped, i]
    m = xi.size
    target = px.probs
    if channel is not None:
        W = np.asarray(channel, dtype=float)
        cdf = np.cumsum(W[xi], axis=1)
        yi = np.minimum((rng.random(m)[:, None] >= cdf).sum(axis=1), W.shape[1] - 1)
        cells = xi * W.shape[1] + yi
        target = (px.probs[:, None] * W).ravel()
    else:
        cells = xi
    freq = np.bincount(cells, minlength=target.size) / max(m, 1)
    sigma = np.sqrt(freq * (1 - freq) / max(m, 1))
    lo = (1 - eps) * target - 3 * sigma
    hi = (1 + eps) * target + 3 * sigma
    ok = bool(m > 0 and np.all((freq >= lo) & (freq <= hi)))
    return VerificationReport(
        "codeword_marginal", freq.tolist(), {"lo": lo.tolist(), "hi": hi.tolist()}, ok,
        {"test": "(1-eps) p <= freq <= (1+eps) p, widened by 3 sigma",
         "q": q, "n": n, "i": i, "eps": eps, "samples": samples, "typical_samples": int(m),
         "seed": seed, "with_channel": channel is not None, "target": target.tolist()})


# ---------------------------------------------------------------- shaping uniformity

def verify_uniform_within_type(q: int, n: int, theta, px=None, samples: int = 100_000,
                               eps: float = 0.1, seed: int = 0,
                               threshold: float = 0.05) -> VerificationReport:
    """Total-variation distance from uniform over the type class ``theta``.

    ``theta`` lists symbol counts (length q, summing to n).
    """
    theta = np.asarray(theta, dtype=np.int64)
    if theta.shape != (q,) or theta.sum() != n or theta.min() < 0:
        raise InvalidSpec("theta must be q nonnegative counts summing to n")
    if q ** n > 1 << 12:
        raise InstanceTooLarge(f"q^n = {q ** n} sequences; the type class must be enumerable")
    px = Pmf.uniform(q) if px is None else (px if isinstance(px, Pmf) else Pmf(px))
    rng = trial_rng(seed, q, n, *theta.tolist())
    words, _ = sample_shaped_codewords(q, n, px, eps, samples, rng)
    counts = np.stack([(words == a).sum(axis=1) for a in range(q)], axis=1)
    inside = words[(counts == theta).all(axis=1)]
    powers = q ** np.arange(n - 1, -1, -1)
    cls = sorted(int(v @ powers) for v in itertools.product(range(q), repeat=n)
                 if np.array_equal(np.bincount(v, minlength=q), theta))
    pos = {c: t for t, c in enumerate(cls)}
    hist = np.zeros(len(cls))
    for code in (inside @ powers).tolist():
        hist[pos[code]] += 1
    m = inside.shape[0]
    tv = 0.5 * float(np.abs(hist / m - 1 / len(cls)).sum()) if m else float("nan")
    return VerificationReport(
        "uniform_within_type", tv, threshold, bool(m > 0 and tv <= threshold),
        {"test": "total variation to uniform over the enumerated type class",
         "q": q, "n": n, "theta": theta.tolist(), "class_size": len(cls), "eps": eps,
         "samples": samples, "in_class": int(m), "seed": seed})


# ---------------------------------------------------------------- covering

def coverage_failure_rate(kind: str, n: int, samples: int, seed: int, *, px=None, q=2,
                          eps: float = 0.1, bc_spec: BcSpec | None = None,
                          alpha: float = 0.5, ell=None, backend=None) -> float:
    """Fraction of fresh codebooks whose single message finds no typical candidate."""
    rng = trial_rng(seed, n)
    if kind == "homologous":
        px = Pmf.uniform(q) if px is None else (px if isinstance(px, Pmf) else Pmf(px))
        _, shaped = sample_shaped_codewords(q, n, px, eps, samples, rng,
                                            ell=ell)
        return float(1 - shaped.mean())
    if kind == "marton":
        if bc_spec is None:
            raise InvalidSpec("Marton coverage needs a broadcast spec")
        fails = 0
        for _ in range(samples):
            cb = generate_marton_codebook(MartonParams(n, 0, 0, alpha, eps, seed, ell),
                                          bc_spec, rng, materialize=False)
            fails += not cb.chosen_pair(0, 0, backend)[2]
        return fails / samples
    raise InvalidSpec(f"unknown coverage kind {kind!r}")


def verify_shaping_coverage(kind: str, ns=(8, 12, 16), samples: int = 2000, seed: int = 0,
                            strict: bool = False, **kw) -> VerificationReport:
    """Trend test: shaping or covering failure frequency should not grow with n.

    The default test allows an increase of up to 3 combined standard errors
    between consecutive points; ``strict=True`` demands a strict decrease.
    """
    freqs = [coverage_failure_rate(kind, n, samples, seed, **kw) for n in ns]
    se = [math.sqrt(f * (1 - f) / samples) for f in freqs]
    if strict:
        ok = all(b < a for a, b in zip(freqs, freqs[1:]))
        test = "strictly decreasing over the n sweep"
    else:
        ok = all(b <= a + 3 * math.hypot(sa, sb)
                 for a, b, sa, sb in zip(freqs, freqs[1:], se, se[1:]))
        test = "nonincreasing over the n sweep, 3-sigma margin"
    diag = {"test": test, "kind": kind, "n": list(ns), "samples": samples, "seed": seed,
            "std_err": se}
    diag.update({k: _jsonable(v) for k, v in kw.items() if k != "backend"})
    return VerificationReport("shaping_coverage", freqs, "trend", bool(ok), diag)


# ---------------------------------------------------------------- export

def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, Fraction):
        return float(v)
    if isinstance(v, Pmf):
        return v.probs.tolist()
    if hasattr(v, "to_dict"):
        return _jsonable(v.to_dict())
    return v


def report_document(reports, config=None) -> dict:
    return {"schema": REPORT_SCHEMA, "version": REPORT_VERSION,
            "config": _jsonable(config or {}),
            "reports": [_jsonable(r.to_dict()) for r in reports]}


def export_report(reports, path, config=None, metadata: bool = True) -> dict:
    """Write ``path`` (JSON, sorted keys) and, when error estimates are
    present, ``path`` with a ``.csv`` suffix holding one row per estimate.

    The main files are byte-identical for identical inputs; the wall-clock
    timestamp goes to a ``.meta.json`` sidecar.  Returns the written paths.
    """
    path = Path(path)
    doc = report_document(reports, config)
    written = {"json": str(path)}
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(doc, sort_keys=True, indent=2, allow_nan=True) + "\n")
        rows = [r.csv_row() for r in reports if isinstance(r, ErrorEstimate)]
        if rows:
            csv_path = path.with_suffix(".csv")
            with open(csv_path, "w", newline="") as fh:
                w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
                w.writeheader()
                w.writerows(rows)
            written["csv"] = str(csv_path)
        if metadata:
            meta = path.with_name(path.stem + ".meta.json")
            meta.write_text(json.dumps({"written_at": time.time(), "pid": os.getpid()}) + "\n")
            written["meta"] = str(meta)
    except OSError as exc:
        raise IoFailure(f"cannot write report to {path}: {exc}") from exc
    return written


def read_report(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise IoFailure(f"cannot read report {path}: {exc}") from exc


__all__ = [
    "ErrorEstimate", "VerificationReport", "wilson_interval", "estimate_error_rate",
    "exact_full_rank_prob", "enumerate_full_rank", "verify_full_rank",
    "verify_codeword_marginal", "verify_uniform_within_type", "coverage_failure_rate",
    "verify_shaping_coverage", "export_report", "read_report", "report_document",
    "message_lengths", "trial_rng", "BudgetExceeded",
]
