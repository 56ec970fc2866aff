"""Command-line entry point: ``homlab <command> [options]``.

Exit codes: 0 ok, 2 usage, 3 schema or invalid input, 4 budget exceeded,
5 a verification check failed.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import harness, homocode, martoncode, regions
from .channels import bc_from_dict, build_bc_joint, build_mac_joint, mac_from_dict
from .errors import BudgetExceeded, HomlabError, InvalidSpec, SchemaError, UsageError
from .prob import Pmf

OUT_ENV = "HOMLAB_OUT_DIR"
DEFAULT_OUT = "homlab-out"
REGION_KINDS = ("cf", "mac", "r1", "r2", "star", "marton", "outer-general")
CHECKS = ("prop1", "lemma2", "lemma9", "fullrank", "marginal", "uniformtype", "coverage")
COMMANDS = ("region", "simulate-mac", "simulate-bc", "verify", "export")

EXIT_OK, EXIT_USAGE, EXIT_SCHEMA, EXIT_BUDGET, EXIT_FAILED = 0, 2, 3, 4, 5


@dataclass
class RunConfig:
    command: str
    spec_path: str | None
    out_dir: str
    overrides: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{message}\n{self.format_usage()}")


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="homlab", description="Homologous and Marton coding lab.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, spec_required=True):
        sp.add_argument("--spec", required=spec_required, help="JSON channel spec")
        sp.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--eps", type=float, default=0.1)
        sp.add_argument("--eps-prime", type=float, default=None, help="default 2*eps")
        sp.add_argument("--delta", type=float, default=0.0)
        sp.add_argument("--grid", type=int, default=200)
        sp.add_argument("--trials", type=int, default=2000)
        sp.add_argument("--budget", type=int, default=homocode.DEFAULT_BUDGET)
        sp.add_argument("--alpha", type=float, default=None)
        sp.add_argument("--a", type=int, nargs=2, default=None, metavar=("A1", "A2"))

    r = sub.add_parser("region", help="compute a rate region and its vertices")
    common(r)
    r.add_argument("--kind", required=True, choices=REGION_KINDS)
    r.add_argument("--aux", default="trivial",
                   help="outer-general auxiliaries: trivial, reveal, or a JSON file")

    for name in ("simulate-mac", "simulate-bc"):
        s = sub.add_parser(name, help="Monte Carlo error estimate over a block-length sweep")
        common(s)
        s.add_argument("--rate", type=float, nargs=2, required=True, metavar=("R1", "R2"))
        s.add_argument("--n", type=int, nargs="+", default=[8, 12, 16])
        s.add_argument("--mode", choices=("ensemble", "fixed"), default="ensemble")
        s.add_argument("--workers", type=int, default=1)

    v = sub.add_parser("verify", help="run an identity or lemma check")
    common(v, spec_required=False)
    v.add_argument("--check", required=True, choices=CHECKS)
    v.add_argument("--q", type=int, default=2)
    v.add_argument("--k", type=int, default=2)
    v.add_argument("--n", type=int, nargs="+", default=None)
    v.add_argument("--samples", type=int, default=None)
    v.add_argument("--px", type=float, nargs="+", default=None)
    v.add_argument("--theta", type=int, nargs="+", default=None)
    v.add_argument("--coverage-kind", choices=("homologous", "marton"), default="homologous")

    e = sub.add_parser("export", help="generate a codebook and write it as JSON")
    common(e)
    e.add_argument("--n", type=int, required=True)
    e.add_argument("--k", type=int, nargs=2, required=True, metavar=("K1", "K2"))
    return p


def _load_spec(path):
    if path is None:
        return None
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read spec file {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise SchemaError("spec", f"{path} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("kind") not in ("mac", "bc"):
        raise SchemaError("kind", "spec must be a JSON object with kind 'mac' or 'bc'")
    return doc


def parse_config(argv) -> RunConfig:
    """Parse arguments and resolve every default into a :class:`RunConfig`."""
    argv = list(argv)
    parser = _parser()
    if not argv:
        raise UsageError("missing command; choose one of: " + ", ".join(COMMANDS))
    ns = parser.parse_args(argv)
    if ns.command is None:
        raise UsageError("missing command; choose one of: " + ", ".join(COMMANDS))
    over = {k: v for k, v in vars(ns).items() if k not in ("command", "spec", "out")}
    if over.get("eps_prime") is None:
        over["eps_prime"] = 2 * over["eps"]
    if not over["eps"] > 0:
        raise SchemaError("eps", "eps must be positive")
    if over["grid"] < 2:
        raise SchemaError("grid", "grid needs at least 2 points per axis")
    if over["trials"] < 1:
        raise SchemaError("trials", "trials must be at least 1")
    doc = _load_spec(ns.spec)
    if doc is not None and over["alpha"] is None and "alpha" in doc:
        over["alpha"] = doc["alpha"]
    if over["alpha"] is not None and not 0.0 <= float(over["alpha"]) <= 1.0:
        raise SchemaError("alpha", f"alpha must lie in [0, 1], got {over['alpha']}")
    out = ns.out or os.environ.get(OUT_ENV) or DEFAULT_OUT
    return RunConfig(ns.command, ns.spec, str(out), over)


def _mac(cfg):
    doc = _load_spec(cfg.spec_path)
    if doc is None or doc["kind"] != "mac":
        raise SchemaError("kind", f"{cfg.command} needs a MAC spec")
    spec = mac_from_dict(doc)
    if cfg.overrides.get("a"):
        spec = spec.with_a(cfg.overrides["a"])
    return spec


def _bc(cfg):
    doc = _load_spec(cfg.spec_path)
    if doc is None or doc["kind"] != "bc":
        raise SchemaError("kind", f"{cfg.command} needs a broadcast spec")
    spec = bc_from_dict(doc)
    if cfg.overrides.get("alpha") is not None:
        spec = spec.with_alpha(cfg.overrides["alpha"])
    return spec


def _aux(arg, spec):
    if arg == "trivial":
        return regions.AuxiliarySpec.trivial(spec.px1, spec.px2)
    if arg == "reveal":
        return regions.AuxiliarySpec.reveal_inputs(spec.px1, spec.px2)
    try:
        d = json.loads(Path(arg).read_text())
        return regions.AuxiliarySpec(Pmf(d["pq"]), np.asarray(d["px1_given_q"]),
                                     np.asarray(d["px2_given_q"]), np.asarray(d["pt_given"]))
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise SchemaError("aux", f"cannot load auxiliaries from {arg}: {exc}") from None


def compute_region(cfg: RunConfig) -> regions.RateRegion:
    o = cfg.overrides
    kind, delta = o["kind"], o["delta"]
    if kind == "marton":
        spec = _bc(cfg)
        return regions.marton_region(build_bc_joint(spec), spec.alpha, delta)
    spec = _mac(cfg)
    joint = build_mac_joint(spec)
    if kind == "cf":
        return regions.region_cf(joint, spec.a, delta)
    if kind == "mac":
        return regions.region_mac(joint, delta)
    if kind in ("r1", "r2"):
        return regions.region_j(joint, spec.a, int(kind[1]), delta)
    if kind == "star":
        return regions.region_star_star(joint, spec.a, delta)
    return regions.general_outer(joint, spec.a, _aux(o["aux"], spec))


def _write(out_dir, name, text):
    path = Path(out_dir) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def _cmd_region(cfg):
    region = compute_region(cfg).simplify()
    kind = cfg.overrides["kind"]
    doc = {"config": cfg.to_dict(), "region": region.to_dict(), "vertices": region.vertices()}
    _write(cfg.out_dir, f"region_{kind}.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")
    csv_text = region.to_csv()
    _write(cfg.out_dir, f"region_{kind}.csv", csv_text)
    sys.stdout.write(csv_text)
    return EXIT_OK


def _cmd_simulate(cfg):
    o = cfg.overrides
    spec = _mac(cfg) if cfg.command == "simulate-mac" else _bc(cfg)
    ests = [harness.estimate_error_rate(spec, n, o["rate"], o["trials"], o["seed"],
                                        eps=o["eps"], eps_p=o["eps_prime"], mode=o["mode"],
                                        budget=o["budget"], workers=o["workers"])
            for n in o["n"]]
    name = cfg.command.replace("-", "_")
    harness.export_report(ests, Path(cfg.out_dir) / f"{name}.json", cfg.to_dict())
    for e in ests:
        lo, hi = e.ci95
        print(f"n={e.n} trials={e.trials} failures={e.failures} rate={e.rate:.4f} "
              f"ci95=[{lo:.4f}, {hi:.4f}]")
    return EXIT_OK


def run_check(cfg) -> harness.VerificationReport:
    o = cfg.overrides
    check, grid = o["check"], o["grid"]
    if check in ("prop1", "lemma2"):
        spec = _mac(cfg)
        joint = build_mac_joint(spec)
        fn = regions.check_prop1 if check == "prop1" else regions.check_lemma2
        bad = fn(joint, spec.a, grid)
        return harness.VerificationReport(check, bad, 0, bad == 0,
                                          {"test": "grid disagreements", "grid": grid})
    if check == "lemma9":
        spec = _bc(cfg)
        bad = regions.check_lemma9(build_bc_joint(spec), spec.alpha, grid)
        return harness.VerificationReport(check, bad, 0, bad == 0,
                                          {"test": "grid disagreements", "grid": grid,
                                           "alpha": spec.alpha})
    ns = o["n"]
    if check == "fullrank":
        return harness.verify_full_rank(o["q"], o["k"], (ns or [3])[0], o["samples"] or 10_000,
                                        o["seed"])
    px = o["px"] or [1.0 / o["q"]] * o["q"]
    if check == "marginal":
        return harness.verify_codeword_marginal(o["q"], (ns or [10])[0], px, None, 0,
                                                o["samples"] or 100_000, o["eps"], o["seed"])
    if check == "uniformtype":
        n = (ns or [6])[0]
        theta = o["theta"] or [n - n // 2, n // 2]
        return harness.verify_uniform_within_type(o["q"], n, theta, px, o["samples"] or 100_000,
                                                  o["eps"], o["seed"])
    kind = o["coverage_kind"]
    kw = {"eps": o["eps"]}
    if kind == "marton":
        spec = _bc(cfg)
        kw.update(bc_spec=spec, alpha=spec.alpha)
    else:
        kw.update(px=px, q=o["q"])
    return harness.verify_shaping_coverage(kind, tuple(ns or (8, 12, 16)), o["samples"] or 2000,
                                           o["seed"], **kw)


def _cmd_verify(cfg):
    rep = run_check(cfg)
    harness.export_report([rep], Path(cfg.out_dir) / f"verify_{cfg.overrides['check']}.json",
                          cfg.to_dict())
    print(f"{rep.lemma}: statistic={rep.statistic} threshold={rep.threshold} "
          f"{'PASS' if rep.passed else 'FAIL'}")
    return EXIT_OK if rep.passed else EXIT_FAILED


def _cmd_export(cfg):
    o = cfg.overrides
    doc = _load_spec(cfg.spec_path)
    k1, k2 = o["k"]
    if doc["kind"] == "mac":
        spec = _mac(cfg)
        params = homocode.HomologousParams(spec.q, o["n"], k1, k2, o["eps"], o["seed"])
        cb = homocode.generate_homologous_codebook(params, spec.px1, spec.px2,
                                                   budget=o["budget"])
        name = "codebook_homologous.json"
    else:
        spec = _bc(cfg)
        params = martoncode.MartonParams(o["n"], k1, k2, spec.alpha, o["eps"], o["seed"])
        cb = martoncode.generate_marton_codebook(params, spec, budget=o["budget"])
        name = "codebook_marton.json"
    body = {"config": cfg.to_dict(), "codebook": cb.to_dict()}
    path = _write(cfg.out_dir, name, json.dumps(body, sort_keys=True) + "\n")
    print(path)
    return EXIT_OK


DISPATCH = {"region": _cmd_region, "simulate-mac": _cmd_simulate,
            "simulate-bc": _cmd_simulate, "verify": _cmd_verify, "export": _cmd_export}


def dispatch(cfg: RunConfig) -> int:
    return DISPATCH[cfg.command](cfg)


def _fail(code, exc):
    err = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, SchemaError):
        err["field"] = exc.field
    print(json.dumps(err, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        return dispatch(parse_config(argv))
    except UsageError as exc:
        return _fail(EXIT_USAGE, exc)
    except (SchemaError, InvalidSpec) as exc:
        return _fail(EXIT_SCHEMA, exc)
    except BudgetExceeded as exc:
        return _fail(EXIT_BUDGET, exc)
    except HomlabError as exc:
        return _fail(EXIT_SCHEMA, exc)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
