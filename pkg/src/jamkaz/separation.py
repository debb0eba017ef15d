"""The separation functional theta -> sup_k |e^{2 pi i n_k theta} - 1| and its certification."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence as Seq, Tuple

import numpy as np

from ._numeric import SIN_ERR, as_fraction, chord_from_residue, frac_json
from .circle import CirclePoint, term_bounds
from .sequences import Sequence, analyze_structure, residues_mod


@dataclass(frozen=True)
class SepValue:
    lo: float
    hi: float
    exact_infinite: bool = False
    informative: bool = True
    horizon: Optional[int] = None

    @property
    def value(self) -> float:
        if self.lo != self.hi:
            raise ValueError("interval-valued separation; use lo/hi")
        return self.lo

    def __float__(self) -> float:
        return self.value


def _exact_prefix_sup(terms: Seq[int], p: int, q: int) -> float:
    best = 0.0
    for n in terms:
        r = n * p % q
        if 2 * r == q:
            return 2.0
        v = chord_from_residue(r, q)
        if v > best:
            best = v
    return best


def sep(seq: Sequence, point, K: Optional[int] = None) -> SepValue:
    """sup over the first K terms of |lambda^{n_k} - 1|.

    With K=None and an exact point whose residue orbit is known for the whole
    generator, the supremum is over the infinite sequence (exact_infinite=True).
    """
    if not isinstance(point, CirclePoint):
        point = CirclePoint.exact(point)
    if point.is_exact:
        p, q = point.p, point.q
        if p == 0:
            return SepValue(0.0, 0.0, exact_infinite=K is None, horizon=K)
        if K is None:
            res, exact = residues_mod(seq, q) if q >= 2 else ({0}, True)
            if exact:
                v = max(chord_from_residue(r * p, q) for r in res)
                return SepValue(v, v, exact_infinite=True)
        terms = seq.prefix(K)
        v = _exact_prefix_sup(terms, p, q)
        return SepValue(v, v, horizon=len(terms))
    terms = seq.prefix(K)
    if terms[-1] * point.width >= 1:
        return SepValue(0.0, 2.0, informative=False, horizon=len(terms))
    lo_num, hi_num, den = _box_ints(point.lo, point.hi)
    lb, ub = _bounds_py(terms, lo_num, hi_num, den)
    return SepValue(lb, ub, horizon=len(terms))


def d_distance(seq: Sequence, p1, p2, K: Optional[int] = None):
    """sup_k |lambda^{n_k} - mu^{n_k}| over the horizon; float for exact points."""
    a = p1 if isinstance(p1, CirclePoint) else CirclePoint.exact(p1)
    b = p2 if isinstance(p2, CirclePoint) else CirclePoint.exact(p2)
    if a.is_exact and b.is_exact:
        diff = CirclePoint.exact(a.theta - b.theta)
        if diff.theta == 0:
            return 0.0
        return _exact_prefix_sup(seq.prefix(K), diff.p, diff.q)
    return sep(seq, CirclePoint.box(a.lo - b.hi, a.hi - b.lo), K)


def eigenvector_separation_bound(p1, p2, seq: Sequence, K: Optional[int] = None, M: float = 1.0) -> float:
    """Lower bound d(lambda, mu)/(M+1) for unit eigenvectors of T with sup_Q ||T^n|| <= M."""
    if M < 1:
        raise ValueError("M must be >= 1")
    d = d_distance(seq, p1, p2, K)
    if isinstance(d, SepValue):
        d = d.lo
    return d / (M + 1)


# ---------------------------------------------------------------- box engine


def _box_ints(lo: Fraction, hi: Fraction) -> Tuple[int, int, int]:
    den = lo.denominator * hi.denominator // math.gcd(lo.denominator, hi.denominator)
    return int(lo * den), int(hi * den), den


def _bounds_py(terms: Seq[int], lo: int, hi: int, den: int) -> Tuple[float, float]:
    lb, ub = 0.0, 0.0
    w = hi - lo
    for n in terms:
        if n * w >= den:
            return lb, 2.0
        a, b = term_bounds(n, lo, hi, den)
        if a > lb:
            lb = a
        if b > ub:
            ub = b
    return lb, ub


_I64_SAFE = 1 << 60


class _TermPool:
    """Terms used by branch-and-bound, with an int64 mirror when it is safe."""

    def __init__(self, terms: Seq[int]):
        self.terms = tuple(terms)
        self.arr = np.array(self.terms, dtype=np.int64) if self.terms[-1] < _I64_SAFE else None

    def bounds(self, lo: int, hi: int, den: int) -> Tuple[float, float]:
        if self.arr is not None and den < _I64_SAFE >> 2 and self.terms[-1] * max(hi, 1) < _I64_SAFE:
            return _bounds_np(self.arr, lo, hi, den)
        return _bounds_py(self.terms, lo, hi, den)


def _bounds_np(n: np.ndarray, lo: int, hi: int, den: int) -> Tuple[float, float]:
    w = hi - lo
    span = n * w
    ok = span < den
    cut = int(np.count_nonzero(ok))
    nn = n[:cut]
    sp = span[:cut]
    if cut == 0:
        return 0.0, 2.0
    u = (nn * lo) % den
    v = u + sp
    du = np.minimum(2 * u, 2 * den - 2 * u)
    vr = v % den
    dv = np.minimum(2 * vr, 2 * den - 2 * vr)
    hz = (u == 0) | (v >= den)
    hh = ((2 * u <= den) & (den <= 2 * v)) | ((2 * u <= 3 * den) & (3 * den <= 2 * v))
    dmin = np.where(hz, 0, np.minimum(du, dv))
    dmax = np.where(hh, den, np.maximum(du, dv))
    lbs = np.where(hz, 0.0, np.maximum(0.0, 2.0 * np.sin(np.pi * (dmin / (2.0 * den))) - SIN_ERR))
    ubs = np.where(hh, 2.0, np.minimum(2.0, 2.0 * np.sin(np.pi * (dmax / (2.0 * den))) + SIN_ERR))
    ubs = np.where(dmax == 0, 0.0, ubs)
    lb = float(lbs.max())
    ub = 2.0 if cut < len(n) else float(ubs.max())
    return lb, ub


def simplest_rational(lo: Fraction, hi: Fraction) -> Fraction:
    """Rational with the smallest denominator in [lo, hi] (Stern-Brocot descent)."""
    if lo > hi:
        raise ValueError("empty interval")
    fl = math.floor(lo)
    if fl == lo or fl + 1 <= hi:
        return Fraction(fl if fl == lo else fl + 1)
    # 0 < lo - fl < hi - fl < 1: recurse on reciprocals
    a, b = lo - fl, hi - fl
    inner = simplest_rational(1 / b, 1 / a)
    return fl + 1 / inner


# ---------------------------------------------------------------- certification


@dataclass
class SeparationCertificate:
    epsilon: float
    rho: Fraction
    K: int
    status: str  # certified | grid-evidence | refuted
    horizon_used: int
    proven_epsilon: float
    boxes_processed: int
    witness: Optional[CirclePoint] = None
    witness_sup: Optional[float] = None
    witness_scope: Optional[str] = None
    extension: dict = field(default_factory=dict)
    partition: List[Tuple[int, int, int]] = field(default_factory=list)
    sequence: str = ""

    @property
    def certified(self) -> bool:
        return self.status == "certified"

    def to_dict(self, include_partition: bool = True) -> dict:
        out = {
            "kind": "separation",
            "sequence": self.sequence,
            "epsilon": self.epsilon,
            "rho": frac_json(self.rho),
            "K": self.K,
            "horizon_used": self.horizon_used,
            "status": self.status,
            "proven_epsilon": self.proven_epsilon,
            "boxes_processed": self.boxes_processed,
            "extension": self.extension,
        }
        if self.witness is not None:
            out["witness"] = self.witness.to_dict()
            out["witness_sup"] = self.witness_sup
            out["witness_scope"] = self.witness_scope
        if include_partition and self.partition:
            out["partition"] = [[str(a), str(b), str(d)] for a, b, d in self.partition]
        return out


def _structural_extension(seq: Sequence, epsilon: float, rho: Fraction) -> dict:
    rep = analyze_structure(seq, ap_cap=2)
    if rep.ratio_status != "bounded" or rep.kappa_bound is None or not rep.contains_one:
        return {"valid": False, "reason": "no verified bounded-ratio structure with 1 in Q"}
    kappa = rep.kappa_bound
    const = 2.0 * math.sin(math.pi / (2.0 * float(kappa)))
    nxt = seq.next_term()
    out = {
        "kappa": frac_json(kappa),
        "constant": const,
        "rho_meets_next_term": nxt is not None and rho * 2 * nxt >= 1,
    }
    if epsilon <= const:
        out["valid"] = True
        out["reason"] = "bounded ratio with n_0 = 1: every theta != 0 has sup >= 2 sin(pi/(2 kappa))"
    else:
        out["valid"] = False
        out["reason"] = "epsilon exceeds the structural constant 2 sin(pi/(2 kappa))"
    return out


def _term_pool(seq: Sequence, K: Optional[int], rho: Fraction, extend: bool) -> Tuple[int, ...]:
    terms = seq.prefix(K)
    if extend and seq.extendable:
        # terms below 1/(2 rho) are what reaches [rho, 1/2] at scale; pull them from the generator
        bound = math.ceil(1 / (2 * rho))
        if terms[-1] < bound:
            more = seq.terms_below(bound)
            if len(more) > len(terms):
                terms = more
    return terms


def certify_separation(
    seq: Sequence,
    epsilon: float,
    rho,
    K: Optional[int] = None,
    max_boxes: int = 200_000,
    extend: bool = True,
) -> SeparationCertificate:
    """Branch-and-bound proof that sup_k |e^{2 pi i n_k theta}-1| >= epsilon on rho <= theta <= 1/2."""
    epsilon = float(epsilon)
    rho = as_fraction(rho)
    if not (0 < rho <= Fraction(1, 2)):
        raise ValueError("rho must lie in (0, 1/2]")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    K_req = len(seq.prefix(K))

    witness = _structural_witness(seq, epsilon)
    if witness is not None:
        pt, sup_val = witness
        return SeparationCertificate(
            epsilon, rho, K_req, "refuted", K_req, 0.0, 0,
            witness=pt, witness_sup=sup_val, witness_scope="all terms (structural witness)",
            sequence=seq.tag,
        )

    terms = _term_pool(seq, K, rho, extend)
    pool = _TermPool(terms)
    lo0, hi0, den0 = _box_ints(rho, Fraction(1, 2))
    heap: List[tuple] = []
    counter = 0

    def push(lo: int, hi: int, den: int) -> None:
        nonlocal counter
        lb, _ = pool.bounds(lo, hi, den)
        heapq.heappush(heap, (lb, Fraction(lo, den), counter, lo, hi, den))
        counter += 1

    push(lo0, hi0, den0)
    tested: Dict[Fraction, float] = {}
    processed = 0
    while True:
        lb, _, _, lo, hi, den = heap[0]
        if lb >= epsilon:
            partition = sorted(((b[3], b[4], b[5]) for b in heap), key=lambda t: Fraction(t[0], t[2]))
            cert = SeparationCertificate(
                epsilon, rho, K_req, "certified", len(terms), min(b[0] for b in heap), processed,
                partition=partition, sequence=seq.tag,
            )
            cert.extension = _structural_extension(seq, epsilon, rho)
            return cert
        heapq.heappop(heap)
        processed += 1
        cand = simplest_rational(Fraction(lo, den), Fraction(hi, den))
        if cand not in tested:
            tested[cand] = _exact_prefix_sup(terms, cand.numerator, cand.denominator)
        if tested[cand] < epsilon:
            return SeparationCertificate(
                epsilon, rho, K_req, "refuted", len(terms), 0.0, processed,
                witness=CirclePoint.exact(cand), witness_sup=tested[cand],
                witness_scope=f"first {len(terms)} terms", sequence=seq.tag,
            )
        if processed > max_boxes:
            return SeparationCertificate(
                epsilon, rho, K_req, "grid-evidence", len(terms), lb, processed, sequence=seq.tag,
            )
        if (lo + hi) % 2 == 0:
            mid = (lo + hi) // 2
            push(lo, mid, den)
            push(mid, hi, den)
        else:
            push(2 * lo, lo + hi, 2 * den)
            push(lo + hi, 2 * hi, 2 * den)


def _structural_witness(seq: Sequence, epsilon: float):
    if seq.generator is None or seq.generator.kind not in ("fact", "factblock"):
        return None
    from .measures import WitnessRefused, jamison_witness_chain

    try:
        w = jamison_witness_chain(seq, epsilon)
    except WitnessRefused:
        return None
    if w.certified:
        return w.point, w.sup_value
    return None


def verify_separation_certificate(cert: dict, seq: Sequence) -> Tuple[bool, str]:
    """Re-check a certified partition term by term, independently of the search."""
    if cert.get("status") != "certified":
        return True, "not a certified claim; nothing to re-check"
    rho = Fraction(cert["rho"]["fraction"])
    eps = float(cert["epsilon"])
    boxes = [(int(a), int(b), int(d)) for a, b, d in cert.get("partition", [])]
    if not boxes:
        return False, "certified status without a partition"
    terms = seq.extended(int(cert["horizon_used"])).terms[: int(cert["horizon_used"])]
    edge = rho
    for lo, hi, den in boxes:
        if Fraction(lo, den) != edge:
            return False, f"partition gap at {edge}"
        edge = Fraction(hi, den)
        lb, _ = _bounds_py(terms, lo, hi, den)
        if lb < eps:
            return False, f"box [{lo}/{den}, {hi}/{den}] has lower bound {lb} < {eps}"
    if edge != Fraction(1, 2):
        return False, "partition does not reach 1/2"
    return True, f"{len(boxes)} boxes re-checked"


# ---------------------------------------------------------------- Lambda_eps


@dataclass
class LambdaEpsCover:
    epsilon: float
    K: int
    intervals: List[Tuple[Fraction, Fraction]]
    total_length: Fraction
    boxes_processed: int
    exhausted: bool = False

    def contains(self, theta) -> bool:
        t = as_fraction(theta)
        t -= math.floor(t)
        return any(a <= t <= b for a, b in self.intervals)

    def to_dict(self) -> dict:
        return {
            "kind": "lambda_eps_cover",
            "epsilon": self.epsilon,
            "K": self.K,
            "total_length": frac_json(self.total_length),
            "intervals": [[frac_json(a), frac_json(b)] for a, b in self.intervals],
            "boxes_processed": self.boxes_processed,
            "exhausted": self.exhausted,
        }


def lambda_eps_cover(
    seq: Sequence,
    epsilon: float,
    K: Optional[int] = None,
    resolution=Fraction(1, 2**20),
    max_boxes: int = 200_000,
) -> LambdaEpsCover:
    """Outer cover of {theta : max_{k<K} |e^{2 pi i n_k theta} - 1| < epsilon}."""
    epsilon = float(epsilon)
    resolution = as_fraction(resolution)
    terms = seq.prefix(K)
    pool = _TermPool(terms)
    kept: List[Tuple[Fraction, Fraction]] = []
    stack = [(0, 1, 2)]  # [0, 1/2]; the other half is the mirror image
    processed = 0
    exhausted = False
    while stack:
        lo, hi, den = stack.pop()
        processed += 1
        if processed > max_boxes:
            kept.append((Fraction(lo, den), Fraction(hi, den)))
            kept.extend((Fraction(a, d), Fraction(b, d)) for a, b, d in stack)
            exhausted = True
            break
        lb, ub = pool.bounds(lo, hi, den)
        if lb >= epsilon:
            continue
        if ub < epsilon or Fraction(hi - lo, den) <= resolution:
            kept.append((Fraction(lo, den), Fraction(hi, den)))
            continue
        if (lo + hi) % 2 == 0:
            mid = (lo + hi) // 2
            stack.append((mid, hi, den))
            stack.append((lo, mid, den))
        else:
            stack.append((lo + hi, 2 * hi, 2 * den))
            stack.append((2 * lo, lo + hi, 2 * den))
    halves = _merge(kept)
    mirrored = [(1 - b, 1 - a) for a, b in halves]
    intervals = _merge(halves + mirrored)
    total = sum((b - a for a, b in intervals), Fraction(0))
    return LambdaEpsCover(epsilon, len(terms), intervals, total, processed, exhausted)


def _merge(iv: List[Tuple[Fraction, Fraction]]) -> List[Tuple[Fraction, Fraction]]:
    out: List[Tuple[Fraction, Fraction]] = []
    for a, b in sorted(iv):
        if out and a <= out[-1][1]:
            if b > out[-1][1]:
                out[-1] = (out[-1][0], b)
        else:
            out.append((a, b))
    return out


def sep_profile(seq: Sequence, grid: int, K: Optional[int] = None, rho=None) -> List[Tuple[Fraction, float]]:
    """sep at theta = i/grid for i < grid, with theta = 0 replaced by rho."""
    if grid < 2:
        raise ValueError("grid must be >= 2")
    terms = seq.prefix(K)
    if rho is None:
        rho = Fraction(1, 2 * terms[-1])
    rho = as_fraction(rho)
    rows = []
    for i in range(grid):
        t = Fraction(i, grid) if i else rho
        rows.append((t, _exact_prefix_sup(terms, t.numerator, t.denominator)))
    return rows
