"""Command-line front end.

Exit codes: 0 verdict or report produced, 2 evidence-only outcome, 1 error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional

import numpy as np

from . import __version__
from ._numeric import frac_json, parse_fraction
from .sequences import Sequence, SequenceError, make_sequence

EXIT_OK, EXIT_ERROR, EXIT_EVIDENCE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


@dataclass
class RunConfig:
    command: str
    sequence: Optional[str]
    K: int
    eps: Optional[float]
    rho: Optional[Fraction]
    N: Optional[int]
    grid: int
    theta: Optional[Fraction]
    out: Optional[str]
    fmt: str
    threads: int
    report: Optional[str] = None
    J: int = 200

    def validate(self) -> None:
        if self.K < 1:
            raise UsageError("--K must be a positive integer")
        if self.eps is not None and not (0 < self.eps):
            raise UsageError("--eps must be positive")
        if self.rho is not None and not (0 < self.rho <= Fraction(1, 2)):
            raise UsageError("--rho must lie in (0, 1/2]")
        if self.N is not None and self.N < 1:
            raise UsageError("--N must be a positive integer")
        if self.grid < 2:
            raise UsageError("--grid must be at least 2")
        if self.threads < 1:
            raise UsageError("JAMKAZ_THREADS must be a positive integer")
        if self.J < 1:
            raise UsageError("--J must be a positive integer")


def _fraction_arg(text: str) -> Fraction:
    try:
        return parse_fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number or fraction: {text!r}")


def _threads() -> int:
    raw = os.environ.get("JAMKAZ_THREADS", "1")
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"JAMKAZ_THREADS must be an integer, got {raw!r}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="jamkaz", description="Jamison and Kazhdan properties of integer sequences.")
    p.add_argument("--version", action="version", version=f"jamkaz {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, K=100):
        sp.add_argument("sequence", help="sequence DSL: pow:B, powk:B, poly:c_d,...,c_0, primes, fact, factblock, file:PATH")
        sp.add_argument("--K", type=int, default=K, help="number of terms to materialize")
        sp.add_argument("--out", help="write the report here instead of stdout")
        sp.add_argument("--format", dest="fmt", choices=("json", "csv"), default="json")

    sp = sub.add_parser("profile", help="CSV of theta -> sup_k |e^{2 pi i n_k theta} - 1|")
    common(sp)
    sp.add_argument("--grid", type=int, default=1000)
    sp.add_argument("--rho", type=_fraction_arg, help="stand-in for theta = 0 (default 1/(2 n_K))")
    sp.set_defaults(fmt="csv")

    sp = sub.add_parser("classify", help="Jamison / Kazhdan verdict JSON")
    common(sp)
    sp.add_argument("--eps", type=float, help="witness epsilon (default 0.1)")
    sp.add_argument("--N", type=int, help="recurrence coverage horizon M (default 1000)")

    sp = sub.add_parser("witness", help="witness point or measure for a divisibility chain")
    common(sp)
    sp.add_argument("--eps", type=float, default=0.1)
    sp.add_argument("--J", type=int, default=200, help="convolution truncation")

    sp = sub.add_parser("weyl", help="Weyl averages at powers of ten")
    common(sp)
    sp.add_argument("--theta", type=_fraction_arg, required=True)
    sp.add_argument("--N", type=int, default=10**4)

    sp = sub.add_parser("certify", help="branch-and-bound separation certificate")
    common(sp)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--rho", type=_fraction_arg, required=True)

    sp = sub.add_parser("verify", help="re-check the certificates embedded in a JSON report")
    sp.add_argument("report", help="JSON report written by another subcommand")
    sp.add_argument("--out")
    sp.add_argument("--format", dest="fmt", choices=("json",), default="json")
    return p


def _config(ns: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(
        command=ns.command,
        sequence=getattr(ns, "sequence", None),
        K=getattr(ns, "K", 1),
        eps=getattr(ns, "eps", None),
        rho=getattr(ns, "rho", None),
        N=getattr(ns, "N", None),
        grid=getattr(ns, "grid", 2),
        theta=getattr(ns, "theta", None),
        out=ns.out,
        fmt=ns.fmt,
        threads=_threads(),
        report=getattr(ns, "report", None),
        J=getattr(ns, "J", 200),
    )
    cfg.validate()
    return cfg


def _json_default(o):
    if isinstance(o, Fraction):
        return f"{o.numerator}/{o.denominator}"
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_json_default) + "\n"


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _input(cfg: RunConfig) -> dict:
    return {"sequence": cfg.sequence, "K": cfg.K, "version": __version__}


def _load(cfg: RunConfig) -> Sequence:
    return make_sequence(cfg.sequence, cfg.K)


# ---------------------------------------------------------------- commands


def cmd_profile(cfg: RunConfig) -> int:
    from .separation import sep

    seq = _load(cfg)
    rho = cfg.rho if cfg.rho is not None else Fraction(1, 2 * seq.terms[-1])
    thetas = [Fraction(i, cfg.grid) if i else rho for i in range(cfg.grid)]
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        vals = list(pool.map(lambda t: sep(seq, t, cfg.K).value, thetas))
    if cfg.fmt == "json":
        rows = [{"theta": frac_json(t), "sep": v} for t, v in zip(thetas, vals)]
        _emit(cfg, dumps({"kind": "profile", "input": _input(cfg), "rho": frac_json(rho), "rows": rows}))
    else:
        lines = ["theta,sep_value"]
        lines += [f"{t.numerator}/{t.denominator},{v!r}" for t, v in zip(thetas, vals)]
        _emit(cfg, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_classify(cfg: RunConfig) -> int:
    from .kazhdan import Budget, classify

    if cfg.fmt != "json":
        raise UsageError("classify writes JSON only")
    b = Budget()
    if cfg.eps is not None:
        b.witness_eps = cfg.eps
    if cfg.N is not None:
        b.coverage_M = cfg.N
    v = classify(_load(cfg), b)
    out = v.to_dict()
    out["input"] = _input(cfg)
    _emit(cfg, dumps(out))
    return v.exit_code


def cmd_witness(cfg: RunConfig) -> int:
    from .measures import WitnessRefused, jamison_witness_chain, nonkazhdan_witness_convolution
    from .sequences import analyze_structure

    if cfg.fmt != "json":
        raise UsageError("witness writes JSON only")
    seq = _load(cfg)
    eps = cfg.eps if cfg.eps is not None else 0.1
    rep = analyze_structure(seq, ap_cap=2)
    if rep.ratio_status == "unbounded":
        out = jamison_witness_chain(seq, eps).to_dict()
    elif rep.is_divisibility_chain:
        spec, cert = nonkazhdan_witness_convolution(seq, eps, cfg.J, k_max=min(cfg.K, cfg.J) - 1)
        out = cert.to_dict()
        out["spec"] = spec.to_dict()
    else:
        raise WitnessRefused("no witness construction applies: need unbounded ratio or a divisibility chain")
    out["input"] = _input(cfg)
    _emit(cfg, dumps(out))
    return EXIT_OK


def cmd_weyl(cfg: RunConfig) -> int:
    from .equidist import weyl_sum

    seq = make_sequence(cfg.sequence, max(cfg.K, cfg.N))
    r = weyl_sum(seq, cfg.theta, cfg.N)
    if cfg.fmt == "csv":
        _emit(cfg, r.to_csv())
    else:
        out = r.to_dict()
        out["kind"] = "weyl"
        out["input"] = _input(cfg)
        _emit(cfg, dumps(out))
    return EXIT_OK


def cmd_certify(cfg: RunConfig) -> int:
    from .separation import certify_separation

    if cfg.fmt != "json":
        raise UsageError("certify writes JSON only")
    cert = certify_separation(_load(cfg), cfg.eps, cfg.rho, cfg.K)
    out = cert.to_dict()
    out["input"] = _input(cfg)
    _emit(cfg, dumps(out))
    return EXIT_EVIDENCE if cert.status == "grid-evidence" else EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    from .kazhdan import verify_verdict

    with open(cfg.report, encoding="utf-8") as fh:
        rep = json.load(fh)
    inp = rep.get("input") or {}
    if not inp.get("sequence"):
        raise UsageError("report has no 'input' block naming the sequence")
    seq = make_sequence(inp["sequence"], int(inp.get("K", 100)))
    if rep.get("kind") == "weyl":
        from .equidist import weyl_sum

        r = weyl_sum(seq.extended(rep["N"]), parse_fraction(rep["theta"]["fraction"]), rep["N"])
        ok = all(abs(a["re"] - w.real) <= 1e-12 and abs(a["im"] - w.imag) <= 1e-12 for a, (_, w) in zip(rep["checkpoints"], r.checkpoints))
        notes = ["weyl: recomputed checkpoints"]
    elif rep.get("kind") == "profile":
        from .separation import sep

        ok, notes = True, []
        for row in rep["rows"][:: max(1, len(rep["rows"]) // 50)]:
            v = sep(seq, parse_fraction(row["theta"]["fraction"]), seq.horizon).value
            ok = ok and abs(v - row["sep"]) <= 1e-12
        notes.append("profile: sampled rows recomputed")
    else:
        ok, notes = verify_verdict(rep, seq)
    _emit(cfg, dumps({"kind": "verification", "ok": ok, "notes": notes, "input": inp}))
    return EXIT_OK if ok else EXIT_ERROR


COMMANDS = {
    "profile": cmd_profile,
    "classify": cmd_classify,
    "witness": cmd_witness,
    "weyl": cmd_weyl,
    "certify": cmd_certify,
    "verify": cmd_verify,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        cfg = _config(ns)
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"jamkaz: usage error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except SequenceError as exc:
        print(f"jamkaz: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, OSError) as exc:
        print(f"jamkaz: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
