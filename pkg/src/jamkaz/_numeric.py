"""Shared numeric helpers: rational pi bounds, chord evaluation, JSON rendering."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Union

# rational enclosure of pi, used whenever a bound must be checked exactly
PI_LO = Fraction(333, 106)
PI_HI = Fraction(355, 113)

# global error budget on double-precision sin evaluations
SIN_ERR = 1e-12

Number = Union[int, float, Fraction]


def as_fraction(x: Number) -> Fraction:
    """Convert to Fraction; floats are taken through their shortest repr."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x!r}")
        return Fraction(repr(x))
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot convert {type(x).__name__} to Fraction")


def chord_from_residue(r: int, q: int) -> float:
    """|e^{2 pi i r/q} - 1| with exact answers at residue 0 and q/2."""
    r %= q
    if r == 0:
        return 0.0
    if 2 * r == q:
        return 2.0
    d = min(r, q - r)
    return 2.0 * math.sin(math.pi * (d / q))


def chord_from_dist(d: float) -> float:
    """|e^{2 pi i t} - 1| given d = ||t|| in [0, 1/2]."""
    if d <= 0.0:
        return 0.0
    if d >= 0.5:
        return 2.0
    return 2.0 * math.sin(math.pi * d)


def unit_root(r: int, q: int) -> complex:
    """e^{2 pi i r/q} with residue reduction and exact quarter points."""
    r %= q
    if r == 0:
        return 1 + 0j
    if 2 * r == q:
        return -1 + 0j
    if 4 * r == q:
        return 1j
    if 4 * r == 3 * q:
        return -1j
    ang = 2.0 * math.pi * (r / q)
    return complex(math.cos(ang), math.sin(ang))


def unit_root_minus_one(r: int, q: int) -> complex:
    """e^{2 pi i r/q} - 1 evaluated without cancellation near r = 0."""
    r %= q
    if r == 0:
        return 0j
    t = math.pi * (r / q)
    s = math.sin(t)
    return complex(-2.0 * s * s, math.sin(2.0 * t))


def frac_json(x: Fraction, digits: int = 17) -> dict:
    """Exact fraction plus a decimal rendering."""
    x = Fraction(x)
    return {"fraction": f"{x.numerator}/{x.denominator}", "decimal": decimal_str(x, digits)}


def decimal_str(x: Fraction, digits: int = 17) -> str:
    """Deterministic scientific rendering of a rational, independent of float range."""
    x = Fraction(x)
    if x == 0:
        return "0"
    sign = "-" if x < 0 else ""
    x = abs(x)
    e = len(str(x.numerator)) - len(str(x.denominator))
    if Fraction(10) ** e > x:
        e -= 1
    mant = x / Fraction(10) ** e
    scaled = round(mant * 10 ** (digits - 1))
    if scaled >= 10 ** digits:
        scaled //= 10
        e += 1
    s = str(scaled)
    body = s[0] + ("." + s[1:].rstrip("0") if s[1:].rstrip("0") else "")
    return f"{sign}{body}e{e:+d}"


def parse_fraction(text: str) -> Fraction:
    """Parse '1/3', '0.25' or an integer string."""
    text = text.strip()
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a rational number: {text!r}") from exc


def frac_from_json(obj) -> Fraction:
    if isinstance(obj, dict):
        return Fraction(obj["fraction"])
    if isinstance(obj, str):
        return Fraction(obj)
    return as_fraction(obj)
