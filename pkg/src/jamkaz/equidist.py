"""Weyl sums, star discrepancy and eta-density of orbits n_k * theta mod 1."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence as Seq, Tuple

from ._numeric import as_fraction, frac_json, unit_root
from .circle import CirclePoint
from .measures import AtomicMeasure
from .sequences import Sequence

DECAY_THRESHOLD = 0.05


def _terms(seq: Sequence, N: int) -> Tuple[int, ...]:
    if N < 1:
        raise ValueError("N must be >= 1")
    if N > seq.horizon:
        seq = seq.extended(N)
    if N > seq.horizon:
        raise ValueError(f"N={N} exceeds the sequence horizon ({seq.horizon})")
    return seq.terms[:N]


def _point(theta) -> CirclePoint:
    if isinstance(theta, CirclePoint):
        return theta
    return CirclePoint.exact(as_fraction(theta))


def default_checkpoints(N: int) -> List[int]:
    out, c = [], 10
    while c < N:
        out.append(c)
        c *= 10
    out.append(N)
    return out


def _unit(r: int, q: int) -> Tuple[float, float]:
    z = unit_root(r, q)
    return z.real, z.imag


@dataclass
class WeylReport:
    theta: CirclePoint
    N: int
    checkpoints: List[Tuple[int, complex]]
    decayed: bool

    @property
    def value(self) -> complex:
        return self.checkpoints[-1][1]

    def to_dict(self) -> dict:
        return {
            "theta": frac_json(self.theta.theta),
            "denominator": self.theta.q,
            "N": self.N,
            "checkpoints": [{"N": n, "re": w.real, "im": w.imag, "abs": abs(w)} for n, w in self.checkpoints],
            "decay_threshold": DECAY_THRESHOLD,
            "decayed": self.decayed,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("N,re,im,abs\n")
        for n, w in self.checkpoints:
            buf.write(f"{n},{w.real!r},{w.imag!r},{abs(w)!r}\n")
        return buf.getvalue()


def weyl_sum(seq: Sequence, theta, N: int, checkpoints: Optional[Seq[int]] = None) -> WeylReport:
    """Averages (1/M) sum_{k<M} e^{2 pi i n_k theta} at each checkpoint M <= N.

    Residues n_k p mod q are exact; each summand is one cos/sin evaluation and the
    partial sums are compensated (fsum over the running block).
    """
    pt = _point(theta)
    terms = _terms(seq, N)
    cps = sorted(set(checkpoints)) if checkpoints else default_checkpoints(N)
    if cps[-1] > N or cps[0] < 1:
        raise ValueError("checkpoints must lie in [1, N]")
    p, q = pt.p, pt.q
    re: List[float] = []
    im: List[float] = []
    out = []
    j = 0
    for k, n in enumerate(terms, start=1):
        c, s = _unit(n * p % q, q)
        re.append(c)
        im.append(s)
        while j < len(cps) and cps[j] == k:
            out.append((k, complex(math.fsum(re) / k, math.fsum(im) / k)))
            j += 1
    return WeylReport(pt, N, out, abs(out[-1][1]) < DECAY_THRESHOLD)


def _orbit_residues(seq: Sequence, theta, N: int) -> Tuple[List[int], int]:
    pt = _point(theta)
    return [n * pt.p % pt.q for n in _terms(seq, N)], pt.q


def points_discrepancy(points: Seq) -> Fraction:
    """Star discrepancy of points in [0, 1): 1/(2N) + max_i |x_(i) - (2i-1)/(2N)|."""
    xs = sorted(as_fraction(x) % 1 for x in points)
    N = len(xs)
    if N == 0:
        raise ValueError("no points")
    worst = max(abs(x - Fraction(2 * i + 1, 2 * N)) for i, x in enumerate(xs))
    return Fraction(1, 2 * N) + worst


def discrepancy(seq: Sequence, theta, N: int) -> Fraction:
    """Exact star discrepancy of {n_k theta mod 1 : k < N} for rational theta."""
    res, q = _orbit_residues(seq, theta, N)
    res.sort()
    # integer form: D = (1 + max |2 N r_i - (2i+1) q|) / (2 N q)
    worst = max(abs(2 * N * r - (2 * i + 1) * q) for i, r in enumerate(res))
    return Fraction(q + worst, 2 * N * q)


def largest_gap(points: Seq) -> Fraction:
    """Length of the largest empty open arc between points of the circle R/Z."""
    xs = sorted(set(as_fraction(x) % 1 for x in points))
    if not xs:
        return Fraction(1)
    gaps = [b - a for a, b in zip(xs, xs[1:])]
    gaps.append(xs[0] + 1 - xs[-1])
    return max(gaps)


@dataclass
class EtaDensity:
    dense: bool
    largest_gap: Fraction
    eta: Fraction

    def __bool__(self) -> bool:
        return self.dense

    def to_dict(self) -> dict:
        return {"dense": self.dense, "largest_gap": frac_json(self.largest_gap), "eta": frac_json(self.eta)}


def eta_density_points(points: Seq, eta) -> EtaDensity:
    e = as_fraction(eta)
    if not 0 < e < 1:
        raise ValueError("eta must lie in (0, 1)")
    g = largest_gap(points)
    return EtaDensity(g <= e, g, e)


def eta_density(seq: Sequence, theta, eta, N: int) -> EtaDensity:
    """Is every open arc of length > eta hit by some n_k theta, k < N?"""
    res, q = _orbit_residues(seq, theta, N)
    return eta_density_points([Fraction(r, q) for r in set(res)], eta)


def equidist_kazhdan_evidence(seq: Sequence, mu: AtomicMeasure, N: int) -> complex:
    """(1/N) sum_{k<N} hat mu(n_k); tends to the mass of mu at 1 for equidistributing orbits."""
    total = 0j
    for pt, w in mu.atoms:
        total += float(w) * weyl_sum(seq, pt, N, [N]).value
    return total


def evidence_sup_gap(seq: Sequence, mu: AtomicMeasure, N: int) -> float:
    """sup_{k<N} |hat mu(n_k) - 1|; compare with the average to read off an atom at 1."""
    from .measures import fourier_minus_one

    return max(abs(fourier_minus_one(mu, n)) for n in _terms(seq, N))
