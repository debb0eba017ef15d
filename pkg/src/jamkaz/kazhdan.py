"""Jamison / Kazhdan verdicts assembled from structure, certificates and witnesses."""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence as Seq, Tuple, Union

import numpy as np

from ._numeric import PI_HI, PI_LO, frac_json
from .measures import (
    WitnessRefused,
    jamison_witness_chain,
    nonkazhdan_witness_convolution,
    verify_convolution_certificate,
)
from .separation import sep_profile
from .sequences import Sequence, analyze_structure, sequence_from_terms

PROVEN = "proven"
AT_HORIZON = "proven-at-horizon"
REFUTED = "refuted"
EVIDENCE = "evidence-only"

GOLDEN_PROXY = Fraction(832040, 1346269)
SQRT2_PROXY = Fraction(665857, 470832) - 1


# ---------------------------------------------------------------- constants


@dataclass(frozen=True)
class Surd:
    """coef * sqrt(rad), kept exact so squares come out rational."""

    coef: Fraction
    rad: int = 1

    def __float__(self) -> float:
        return float(self.coef) * math.sqrt(self.rad)

    def square(self) -> Fraction:
        return self.coef * self.coef * self.rad

    def __str__(self) -> str:
        if self.rad == 1:
            return str(self.coef)
        num, den = self.coef.numerator, self.coef.denominator
        s = f"sqrt({self.rad})" if num == 1 else f"{num}*sqrt({self.rad})"
        return s if den == 1 else f"{s}/{den}"


_SURD = re.compile(r"^\s*(?:(\d+)\s*\*\s*)?sqrt\((\d+)\)\s*(?:/\s*(\d+))?\s*$")


def parse_constant(value) -> Union[Fraction, Surd, float]:
    """Accept numbers, fraction strings, or forms like 'sqrt(2)/4' and '3*sqrt(2)/5'."""
    if isinstance(value, (Surd, Fraction, int)):
        return Fraction(value) if isinstance(value, int) else value
    if isinstance(value, str):
        m = _SURD.match(value)
        if m:
            num = int(m.group(1) or 1)
            den = int(m.group(3) or 1)
            return Surd(Fraction(num, den), int(m.group(2)))
        return Fraction(value.strip())
    return float(value)


def _const_json(c) -> Optional[dict]:
    if c is None:
        return None
    if isinstance(c, Surd):
        return {"exact": str(c), "decimal": repr(float(c))}
    if isinstance(c, Fraction):
        return {"exact": f"{c.numerator}/{c.denominator}", "decimal": repr(float(c))}
    return {"exact": None, "decimal": repr(float(c))}


@dataclass
class Transfer:
    kind: str
    source: object
    result: object
    note: str

    def to_dict(self) -> dict:
        return {"kind": self.kind, "from": _const_json(self.source), "to": _const_json(self.result), "note": self.note}


_KINDS = {
    "kazhdan-pair->measure-test": "(Q, delta) Kazhdan pair gives the measure test with epsilon = delta^2/2",
    "measure-test->kazhdan-pair": "measure test with epsilon gives the Kazhdan pair (Q, epsilon)",
    "kazhdan->jamison": "a Kazhdan constant is a Jamison constant",
}


def constant_transfer(kind: str, value) -> Transfer:
    k = kind.replace("→", "->").strip()
    if k not in _KINDS:
        raise ValueError(f"unknown transfer kind {kind!r}; expected one of {sorted(_KINDS)}")
    v = parse_constant(value)
    if k == "kazhdan-pair->measure-test":
        if isinstance(v, Surd):
            out = v.square() / 2
        elif isinstance(v, Fraction):
            out = v * v / 2
        else:
            out = v * v / 2
    else:
        out = v
    return Transfer(k, v, out, _KINDS[k])


# ---------------------------------------------------------------- Prop 5 search


@dataclass
class RecurrenceCertificate:
    a: int
    p: int
    b: Tuple[int, ...]
    m0: int
    M: int
    terms_used: int
    coprime_index: int
    coprime_term: int

    def measure_constant(self) -> Fraction:
        return recurrence_constant(self.a, self.coprime_term % self.a if self.a > 1 else 0, self.b)

    def to_dict(self) -> dict:
        return {
            "kind": "recurrence",
            "a": self.a,
            "p": self.p,
            "b": list(self.b),
            "m0": self.m0,
            "M": self.M,
            "terms_used": self.terms_used,
            "coprime_index": self.coprime_index,
            "coprime_term": self.coprime_term,
            "measure_test_constant": frac_json(self.measure_constant()),
        }


@dataclass
class Exhaustion:
    region: dict

    def to_dict(self) -> dict:
        return {"kind": "exhaustion", **self.region}


def recurrence_constant(a: int, r: int, b: Seq[int]) -> Fraction:
    """Rational measure-test constant delta^2 / (2 (sum|b|)^2).

    delta is the largest dyadic below 1/2 with 1 - Re(lambda^r) > 12 delta (a-1) for all
    non-trivial a-th roots lambda (a lower bound on 1 - cos via x^2/2 - x^4/24). For a = 1
    there are no such roots and delta = 1.
    """
    s = sum(abs(x) for x in b)
    if a == 1:
        delta = Fraction(1)
    else:
        worst = None
        for j in range(1, a):
            x = Fraction((j * r) % a, a)
            x = min(x, 1 - x)
            t = 2 * PI_LO * x
            lo = t * t / 2 - (2 * PI_HI * x) ** 4 / 24
            worst = lo if worst is None or lo < worst else worst
        limit = min(Fraction(1, 2), worst / (12 * (a - 1)))
        delta = Fraction(1, 2)
        while delta >= limit:
            delta /= 2
    return delta * delta / (2 * s * s)


def _values(terms: Seq[int], b: Seq[int]) -> Union[np.ndarray, List[int]]:
    p = len(b) - 1
    T = len(terms) - p
    if T <= 0:
        return []
    big = max(abs(terms[-1]), 1) * sum(abs(x) for x in b)
    if big < 2**62:
        arr = np.asarray(terms, dtype=np.int64)
        out = np.zeros(T, dtype=np.int64)
        for i, c in enumerate(b):
            if c:
                out += c * arr[i : i + T]
        return out
    return [sum(c * terms[k + i] for i, c in enumerate(b) if c) for k in range(T)]


def _coverage_start(vals, a: int, M: int) -> Optional[int]:
    """Smallest m0 with {a m : m0 <= m <= M} inside vals, or None if a M is missing."""
    present = np.zeros(M + 1, dtype=bool)
    if isinstance(vals, np.ndarray):
        v = vals[(vals > 0) & (vals <= a * M) & (vals % a == 0)] // a
        present[v] = True
    else:
        for x in vals:
            if 0 < x <= a * M and x % a == 0:
                present[x // a] = True
    if not present[M]:
        return None
    missing = np.flatnonzero(~present[1:])
    return int(missing[-1]) + 2 if len(missing) else 1


def prop5_search(
    seq: Sequence,
    max_a: int = 6,
    max_p: int = 2,
    max_coeff: int = 2,
    coverage_M: int = 1000,
) -> Union[RecurrenceCertificate, Exhaustion]:
    """First (a, p, b) in the order a, p, b-lexicographic whose combinations cover a*[m0, M].

    A candidate is accepted when m0 <= M/2 and some term is coprime to a. Data
    sequences without a generator shrink M so that a*M stays below the last term.
    """
    tried = 0
    for a in range(1, max_a + 1):
        need = a * coverage_M + max_p + 2
        s = seq.extended(need)
        terms = s.terms[:need]
        M = coverage_M if s.extendable else min(coverage_M, terms[-1] // a)
        if M < 2:
            continue
        cop = next((k for k, n in enumerate(terms) if math.gcd(n, a) == 1), None)
        if cop is None:
            continue
        for p in range(0, max_p + 1):
            rng = range(-max_coeff, max_coeff + 1)
            for b in itertools.product(rng, repeat=p + 1):
                if b[0] == 0 or b[-1] == 0:
                    continue
                tried += 1
                m0 = _coverage_start(_values(terms, b), a, M)
                if m0 is not None and m0 <= M // 2:
                    return RecurrenceCertificate(a, p, tuple(b), m0, M, len(terms), cop, terms[cop])
    return Exhaustion(
        {
            "max_a": max_a,
            "max_p": max_p,
            "max_coeff": max_coeff,
            "coverage_M": coverage_M,
            "candidates": tried,
            "order": "a ascending, p ascending, b lexicographic; b_0, b_p nonzero",
        }
    )


def verify_recurrence(cert: dict, seq: Sequence) -> Tuple[bool, str]:
    """Brute-force re-check of coverage and coprimality with Python integers."""
    a, b, m0, M = int(cert["a"]), tuple(int(x) for x in cert["b"]), int(cert["m0"]), int(cert["M"])
    T = int(cert["terms_used"])
    terms = seq.extended(T).terms[:T]
    if len(terms) < T:
        return False, "not enough terms to re-check"
    p = len(b) - 1
    vals = set()
    for k in range(T - p):
        vals.add(sum(c * terms[k + i] for i, c in enumerate(b)))
    missing = [m for m in range(m0, M + 1) if a * m not in vals]
    if missing:
        return False, f"{a}*{missing[0]} is not covered"
    idx = int(cert["coprime_index"])
    if math.gcd(terms[idx], a) != 1:
        return False, "coprime witness fails"
    const = recurrence_constant(a, terms[idx] % a if a > 1 else 0, b)
    return True, f"covers {a}*m for {m0} <= m <= {M}; measure-test constant {const}"


# ---------------------------------------------------------------- sumsets


@dataclass
class SumsetCover:
    d: Optional[int]
    lo: int
    range_N: int
    d_max: int
    first_uncovered: Optional[int]
    reason: str = ""

    @property
    def success(self) -> bool:
        return self.d is not None

    def kazhdan_constant(self) -> Optional[Surd]:
        return Surd(Fraction(1, self.d), 2) if self.d else None

    def to_dict(self) -> dict:
        return {
            "kind": "sumset",
            "d": self.d,
            "lo": self.lo,
            "range_N": self.range_N,
            "d_max": self.d_max,
            "first_uncovered": self.first_uncovered,
            "reason": self.reason,
        }


def sumset_cover(seq: Sequence, d_max: int = 4, range_N: int = 10**4) -> SumsetCover:
    """Smallest d <= d_max such that every integer in [min Q, range_N] is a sum of <= d terms.

    Reachable sums are kept as bits of one Python integer.
    """
    terms = [t for t in seq.terms_below(range_N + 1) if t > 0]
    if not terms:
        return SumsetCover(None, 0, range_N, d_max, None, "no positive terms in range")
    lo = terms[0]
    width = range_N + 1
    mask = (1 << width) - 1
    target = mask ^ ((1 << lo) - 1)
    base = 0
    for t in terms:
        base |= 1 << t
    reach = base
    for d in range(1, d_max + 1):
        if reach & target == target:
            return SumsetCover(d, lo, range_N, d_max, None)
        if d == d_max:
            break
        nxt = reach
        for t in terms:
            nxt |= (reach << t) & mask
        reach = nxt
    miss = target & ~reach
    first = (miss & -miss).bit_length() - 1
    g = math.gcd(*terms)
    reason = f"all sums divisible by {g}" if g > 1 else f"not covered with d <= {d_max}"
    return SumsetCover(None, lo, range_N, d_max, first, reason)


# ---------------------------------------------------------------- verdicts


@dataclass
class Status:
    status: str
    rule: str
    constant: object = None
    evidence: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"status": self.status, "rule": self.rule, "constant": _const_json(self.constant), "evidence": self.evidence}


@dataclass
class Verdict:
    sequence: str
    horizon: int
    jamison: Status
    kazhdan: Status
    certificates: List[dict] = field(default_factory=list)
    transfers: List[Transfer] = field(default_factory=list)
    structure: Optional[dict] = None

    @property
    def evidence_only(self) -> bool:
        return EVIDENCE in (self.jamison.status, self.kazhdan.status)

    @property
    def exit_code(self) -> int:
        return 2 if self.evidence_only else 0

    def to_dict(self) -> dict:
        return {
            "kind": "verdict",
            "sequence": self.sequence,
            "horizon": self.horizon,
            "jamison": self.jamison.to_dict(),
            "kazhdan": self.kazhdan.to_dict(),
            "certificates": self.certificates,
            "transfers": [t.to_dict() for t in self.transfers],
            "structure": self.structure,
        }


@dataclass
class Budget:
    witness_eps: float = 0.1
    conv_J: int = 200
    max_a: int = 6
    max_p: int = 2
    max_coeff: int = 2
    coverage_M: int = 1000
    sumset_d: int = 4
    sumset_range: int = 10**4
    evidence_N: int = 10**4
    profile_grid: int = 256


def _is_naturals(seq: Sequence) -> bool:
    g = seq.generator
    return g is not None and g.kind == "poly" and tuple(g.params) == (1, 0)


def _jamison_structural(rep, seq: Sequence) -> Status:
    kappa = rep.kappa_bound
    if _is_naturals(seq):
        # sup_n |lambda^n - 1| >= sqrt 3, attained at lambda = e^{2 pi i/3}
        return Status(PROVEN, "bounded ratio (naturals: best constant)", Surd(Fraction(1), 3), {"kappa": frac_json(kappa)})
    if kappa == 2:
        c = Surd(Fraction(1), 2)
    elif kappa == 3:
        c = Fraction(1)
    else:
        c = 2.0 * math.sin(math.pi / (2.0 * float(kappa)))
    return Status(PROVEN, "bounded ratio: 2 sin(pi/(2 kappa))", c, {"kappa": frac_json(kappa)})


def _gate_refutation(rep, seq: Sequence) -> Tuple[Status, Status, dict]:
    g = rep.gcd
    exact = rep.gcd_exact
    st = REFUTED if exact else EVIDENCE
    scope = "structural" if exact else "horizon"
    cert = {"kind": "gate", "gcd": g, "scope": scope, "witness_theta": f"1/{g}"}
    kaz = Status(st, f"generation gate: gcd {g} != 1 ({scope})", None, {"witness_theta": f"1/{g}"})
    # lambda = e^{2 pi i/g} is fixed by every n in Q, so sep = 0 there
    jam = Status(st, "witness e^{2 pi i/g} fixed by every term", None, {"witness_theta": f"1/{g}", "sup": 0.0})
    return jam, kaz, cert


def _equidist_evidence(seq: Sequence, N: int) -> dict:
    from .equidist import weyl_sum

    N = min(N, seq.extended(N).horizon)
    out = {}
    for name, th in (("golden", GOLDEN_PROXY), ("sqrt2", SQRT2_PROXY)):
        out[name] = abs(weyl_sum(seq, th, N, [N]).value)
    out["N"] = N
    return out


def classify(seq: Sequence, budget: Optional[Budget] = None) -> Verdict:
    """Apply the decision rules in a fixed order and collect certificates."""
    b = budget or Budget()
    rep = analyze_structure(seq)
    v = Verdict(seq.tag, seq.horizon, Status(EVIDENCE, "pending"), Status(EVIDENCE, "pending"), structure=rep.to_dict())

    if rep.gcd != 1:
        v.jamison, v.kazhdan, cert = _gate_refutation(rep, seq)
        v.certificates.append(cert)
        return v
    v.certificates.append({"kind": "gate", "gcd": 1, "bezout": [list(x) for x in rep.bezout]})

    jam: Optional[Status] = None
    kaz: Optional[Status] = None
    if rep.ratio_status == "bounded" and rep.kappa_bound is not None and rep.contains_one:
        jam = _jamison_structural(rep, seq)
    elif rep.ratio_status == "unbounded":
        try:
            w = jamison_witness_chain(seq, b.witness_eps)
        except WitnessRefused as exc:
            w = None
            v.certificates.append({"kind": "witness-refused", "reason": str(exc)})
        if w is not None and w.certified:
            wd = w.to_dict()
            v.certificates.append(wd)
            jam = Status(REFUTED, "unbounded ratio: witness 1/m", None, {"theta": wd["theta"], "sup_upper": wd["sup_upper"]})

    if jam is not None and jam.status == REFUTED:
        kaz = Status(REFUTED, "Jamison refuted implies Kazhdan refuted", None, {"witness": jam.evidence.get("theta")})
    elif rep.chain_structural:
        spec, cc = nonkazhdan_witness_convolution(seq, b.witness_eps, b.conv_J, k_max=min(seq.horizon, b.conv_J) - 1)
        v.certificates.append(cc.to_dict())
        if cc.certified:
            kaz = Status(REFUTED, "divisibility chain: convolution witness", None, {"epsilon": b.witness_eps, "J": b.conv_J})
    if kaz is None:
        found = prop5_search(seq, b.max_a, b.max_p, b.max_coeff, b.coverage_M)
        if isinstance(found, RecurrenceCertificate):
            cd = found.to_dict()
            v.certificates.append(cd)
            eps = found.measure_constant()
            t = constant_transfer("measure-test->kazhdan-pair", eps)
            v.transfers.append(t)
            kaz = Status(AT_HORIZON, f"recurrence certificate a={found.a}", eps, {"a": found.a, "b": list(found.b), "M": found.M})
        else:
            v.certificates.append(found.to_dict())
    if kaz is None:
        sc = sumset_cover(seq, b.sumset_d, b.sumset_range)
        v.certificates.append(sc.to_dict())
        if sc.success:
            kaz = Status(AT_HORIZON, f"sumset cover d={sc.d}", sc.kazhdan_constant(), {"d": sc.d, "range_N": sc.range_N})
    if kaz is None:
        kaz = Status(EVIDENCE, "equidistribution evidence", None, _equidist_evidence(seq, b.evidence_N))

    if jam is None:
        if kaz.status in (PROVEN, AT_HORIZON):
            t = constant_transfer("kazhdan->jamison", kaz.constant) if kaz.constant is not None else None
            if t is not None:
                v.transfers.append(t)
            jam = Status(kaz.status, "Kazhdan implies Jamison", t.result if t else None, {})
        else:
            prof = sep_profile(seq, b.profile_grid)
            worst = min(prof, key=lambda r: r[1])
            jam = Status(EVIDENCE, "separation profile", None, {"grid": b.profile_grid, "min_sep": worst[1], "at": str(worst[0])})
    if jam.status == REFUTED and kaz.status != REFUTED:
        kaz = Status(REFUTED, "Jamison refuted implies Kazhdan refuted", None, {})
    v.jamison, v.kazhdan = jam, kaz
    return v


# ---------------------------------------------------------------- finite perturbations


def perturb_verdict(seq: Sequence, F: Iterable[int], base: Verdict, mode: str = "union") -> Verdict:
    """Verdict for Q u F (mode 'union') or Q \\ F (mode 'difference'), F finite."""
    F = sorted(set(int(x) for x in F))
    terms = set(seq.terms)
    if mode == "union":
        new = sequence_from_terms(sorted(terms | set(F)))
        g_base = math.gcd(*seq.terms)
        if base.kazhdan.status == REFUTED and g_base == 1:
            jam = base.jamison if base.jamison.status in (PROVEN, AT_HORIZON) else Status(EVIDENCE, "re-evaluate", None, {})
            kaz = Status(REFUTED, "finite union with a non-Kazhdan set generating Z", None, {"added": F})
            return Verdict(f"{seq.tag} u {F}", new.horizon, jam, kaz, list(base.certificates), list(base.transfers))
    elif mode == "difference":
        new = sequence_from_terms(sorted(terms - set(F)))
        if base.kazhdan.status in (PROVEN, AT_HORIZON) and 1 in terms and 1 not in F:
            kaz = Status(base.kazhdan.status, "finite removal keeps Kazhdan (1 retained)", base.kazhdan.constant, {"removed": F})
            jam = Status(base.kazhdan.status, "Kazhdan implies Jamison", None, {})
            return Verdict(f"{seq.tag} \\ {F}", new.horizon, jam, kaz, list(base.certificates), list(base.transfers))
    else:
        raise ValueError("mode must be 'union' or 'difference'")
    v = classify(new)
    v.sequence = f"{seq.tag} {'u' if mode == 'union' else 'minus'} {F} (re-classified)"
    return v


# ---------------------------------------------------------------- verification


def verify_verdict(report: dict, seq: Sequence) -> Tuple[bool, List[str]]:
    """Re-validate every embedded certificate independently of the search that produced it."""
    from .measures import jamison_witness_chain as chain
    from .separation import verify_separation_certificate

    ok = True
    notes: List[str] = []
    certs = report.get("certificates", [])
    if report.get("kind") not in (None, "verdict"):
        certs = [report]
    for c in certs:
        kind = c.get("kind")
        if kind == "gate":
            g = math.gcd(*seq.terms)
            good = g == c["gcd"] or c.get("scope") == "structural" and g % c["gcd"] == 0
            if g == 1 and "bezout" in c:
                good = good and sum(x * seq.terms[i] for i, x in c["bezout"]) == 1
            notes.append(f"gate: {'ok' if good else 'mismatch'}")
        elif kind == "recurrence":
            good, msg = verify_recurrence(c, seq)
            notes.append(f"recurrence: {msg}")
        elif kind == "sumset":
            redo = sumset_cover(seq, c["d_max"], c["range_N"])
            good = redo.d == c["d"]
            notes.append(f"sumset: recomputed d={redo.d}")
        elif kind == "convolution_witness":
            good, msg = verify_convolution_certificate(c, seq)
            notes.append(f"convolution: {msg}")
        elif kind == "jamison_witness":
            w = chain(seq, c["epsilon"])
            good = w.certified and w.to_dict()["theta"] == c["theta"]
            notes.append(f"witness: theta {w.to_dict()['theta']['fraction'][:24]} sup_upper {float(w.sup_upper):.6g}")
        elif kind == "separation":
            good, msg = verify_separation_certificate(c, seq)
            notes.append(f"separation: {msg}")
        else:
            notes.append(f"{kind}: nothing to re-check")
            good = True
        ok = ok and good
    return ok, notes
