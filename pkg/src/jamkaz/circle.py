"""Points of the unit circle, exact (rational angle) or boxed (angle interval)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Tuple

from ._numeric import SIN_ERR, as_fraction, chord_from_residue, frac_json, frac_from_json


@dataclass(frozen=True)
class CirclePoint:
    """lambda = e^{2 pi i theta}.

    Exact points carry theta = p/q in lowest terms with 0 <= p < q. Boxed points
    carry an interval [lo, hi] of angles with lo <= hi and hi - lo < 1.
    """

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("boxed point needs lo <= hi")

    @classmethod
    def exact(cls, theta, q: Optional[int] = None) -> "CirclePoint":
        t = Fraction(theta, q) if q is not None else as_fraction(theta)
        t -= math.floor(t)
        return cls(t, t)

    @classmethod
    def box(cls, lo, hi) -> "CirclePoint":
        lo, hi = as_fraction(lo), as_fraction(hi)
        if hi < lo:
            raise ValueError("boxed point needs lo <= hi")
        shift = math.floor(lo)
        return cls(lo - shift, hi - shift)

    @property
    def is_exact(self) -> bool:
        return self.lo == self.hi

    @property
    def theta(self) -> Fraction:
        if not self.is_exact:
            raise ValueError("boxed point has no single angle")
        return self.lo

    @property
    def p(self) -> int:
        return self.theta.numerator

    @property
    def q(self) -> int:
        return self.theta.denominator

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    def norm(self) -> Fraction:
        """||theta||, distance to the nearest integer (exact points)."""
        t = self.theta
        return min(t, 1 - t)

    def chord(self) -> float:
        """|lambda - 1|."""
        return chord_from_residue(self.p, self.q)

    def contains(self, theta) -> bool:
        t = as_fraction(theta)
        t -= math.floor(t)
        if self.lo <= t <= self.hi:
            return True
        return self.hi >= 1 and t + 1 <= self.hi

    def to_dict(self) -> dict:
        if self.is_exact:
            return {"theta": frac_json(self.theta)}
        return {"lo": frac_json(self.lo), "hi": frac_json(self.hi)}

    @classmethod
    def from_dict(cls, obj: dict) -> "CirclePoint":
        if "theta" in obj:
            return cls.exact(frac_from_json(obj["theta"]))
        return cls.box(frac_from_json(obj["lo"]), frac_from_json(obj["hi"]))

    def __str__(self) -> str:
        if self.is_exact:
            return f"{self.theta}"
        return f"[{self.lo}, {self.hi}]"


def dist_range(u: int, span: int, den: int) -> Tuple[int, int, bool, bool]:
    """Range of ||x|| for x in [u/den, (u+span)/den] with 0 <= span < den.

    Returns (2*dmin_num, 2*dmax_num, hits_zero, hits_half) on the scale den/2, so
    that half-integers stay integral. Everything is exact integer arithmetic.
    """
    u %= den
    v = u + span
    # doubled coordinates: integers at multiples of 2*den, halves at odd multiples of den
    du = min(2 * u, 2 * den - 2 * u)
    vv = v % den
    dv = min(2 * vv, 2 * den - 2 * vv)
    hits_zero = u == 0 or v >= den
    hits_half = 2 * u <= den <= 2 * v or 2 * u <= 3 * den <= 2 * v
    dmin = 0 if hits_zero else min(du, dv)
    dmax = den if hits_half else max(du, dv)
    return dmin, dmax, hits_zero, hits_half


def chord_bounds(dmin2: int, dmax2: int, den: int, hits_zero: bool, hits_half: bool) -> Tuple[float, float]:
    """Rigorous [lo, hi] for 2 sin(pi d) over a d-range given on the doubled scale."""
    if hits_zero:
        lo = 0.0
    else:
        lo = max(0.0, 2.0 * math.sin(math.pi * (dmin2 / (2 * den))) - SIN_ERR)
    if hits_half:
        hi = 2.0
    elif dmax2 == 0:
        hi = 0.0
    else:
        hi = min(2.0, 2.0 * math.sin(math.pi * (dmax2 / (2 * den))) + SIN_ERR)
    return lo, hi


def term_bounds(n: int, lo_num: int, hi_num: int, den: int) -> Tuple[float, float]:
    """Bounds of |e^{2 pi i n theta} - 1| for theta in [lo_num/den, hi_num/den]."""
    span = n * (hi_num - lo_num)
    if span >= den:
        return 0.0, 2.0
    dmin, dmax, z, h = dist_range(n * lo_num, span, den)
    return chord_bounds(dmin, dmax, den, z, h)
