"""Multi-level Cantor-type measures: level data, exact constraint checks, and the combined product.

A level is a finite set of atoms close to 1 with small weights. The combined measure is
the convolution of the levels; its atoms are all sums of one angle per level. Level
schedules must satisfy, for every p:

    0 < a < eps_p / eps0^2,   |e^{2 pi i t} - 1| < eps_p for t in F_p,
    chord gap between distinct products of levels < p  > 4 eps_p,
    sum eps_p < eps,   sum_{i >= p} eps_i < 2 eps_p,
    eps0^{-2p} eps_1 ... eps_p decreasing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from fractions import Fraction
from typing import List, Optional, Sequence as Seq, Tuple

import numpy as np

from ._numeric import PI_HI, PI_LO, as_fraction, frac_json
from .measures import AtomicMeasure, AtomOverflowError, convolve
from .sequences import Sequence, analyze_structure


class CantorConstraintError(ValueError):
    def __init__(self, constraint: str, level: int, detail: str = ""):
        msg = f"level {level}: constraint '{constraint}' violated"
        super().__init__(msg + (f" ({detail})" if detail else ""))
        self.constraint = constraint
        self.level = level


@dataclass(frozen=True)
class CantorLevel:
    """Signed angle offsets t in (-1/2, 1/2) with weights.

    When `spacing` is set the level is the arithmetic progression
    center + (j - (m-1)/2) * spacing, j < m, with equal weights.
    """

    offsets: Tuple[Fraction, ...]
    weights: Tuple[Fraction, ...]
    center: Optional[Fraction] = None
    spacing: Optional[Fraction] = None

    @property
    def size(self) -> int:
        return len(self.offsets)

    @cached_property
    def is_progression(self) -> bool:
        if self.spacing is None or self.center is None:
            return False
        m = self.size
        w = Fraction(1, m)
        return all(x == w for x in self.weights) and all(
            self.offsets[j] == self.center + (Fraction(2 * j - (m - 1), 2)) * self.spacing for j in range(m)
        )

    def measure(self) -> AtomicMeasure:
        return AtomicMeasure.from_atoms(zip(self.offsets, self.weights))

    def to_dict(self) -> dict:
        out = {"size": self.size}
        if self.spacing is not None:
            out["center"] = frac_json(self.center)
            out["spacing"] = frac_json(self.spacing)
            out["weight"] = frac_json(self.weights[0])
        else:
            out["atoms"] = [[frac_json(t), frac_json(w)] for t, w in zip(self.offsets, self.weights)]
        return out


@dataclass(frozen=True)
class CantorLevels:
    levels: Tuple[CantorLevel, ...]
    schedule: Tuple[Fraction, ...]
    epsilon: Fraction
    eps0_sq: Fraction
    prefix: Tuple[int, ...]

    @property
    def depth(self) -> int:
        return len(self.levels)

    def truncated(self, depth: int) -> "CantorLevels":
        return CantorLevels(self.levels[:depth], self.schedule[:depth], self.epsilon, self.eps0_sq, self.prefix)

    def to_dict(self) -> dict:
        return {
            "epsilon": frac_json(self.epsilon),
            "eps0_sq": frac_json(self.eps0_sq),
            "schedule": [frac_json(e) for e in self.schedule],
            "prefix": list(self.prefix),
            "levels": [lv.to_dict() for lv in self.levels],
        }


# ---------------------------------------------------------------- rigorous helpers


def chord_lower(g: Fraction) -> Fraction:
    """Rational lower bound for 2 sin(pi g), 0 <= g <= 1/2 (sin x >= x - x^3/6)."""
    return 2 * (PI_LO * g - (PI_HI * g) ** 3 / 6)


def chord_upper(g: Fraction) -> Fraction:
    """Rational upper bound for 2 sin(pi |g|)."""
    return 2 * PI_HI * abs(g)


def level_fourier_bound(level: CantorLevel, n: int) -> Fraction:
    """Rational bound on sup |hat sigma_p(n) - 1| for |n| <= n."""
    n = abs(n)
    if level.is_progression:
        m = level.size
        h = level.spacing
        second = 2 * PI_HI**2 * n * n * h * h * (m * m - 1) / 12
        return 2 * PI_HI * n * abs(level.center) + second
    return 2 * PI_HI * n * sum((w * abs(t) for t, w in zip(level.offsets, level.weights)), Fraction(0))


def _common_den(levels: Seq[CantorLevel]) -> int:
    d = 1
    for lv in levels:
        for t in lv.offsets:
            d = d * t.denominator // math.gcd(d, t.denominator)
    return d


def product_angles(levels: Seq[CantorLevel], den: int, limit: int = 2_000_000) -> np.ndarray:
    """All products of the given levels as integers mod den (object array when large)."""
    count = math.prod(lv.size for lv in levels)
    if count > limit:
        raise AtomOverflowError(f"{count} products exceed the enumeration limit {limit}")
    acc = [0]
    for lv in levels:
        offs = [int(t * den) for t in lv.offsets]
        acc = [(a + o) % den for a in acc for o in offs]
    return acc


def min_circular_gap(values: List[int], den: int) -> Optional[int]:
    """Smallest circular distance between distinct values; 0 if two coincide; None for one point."""
    if len(values) < 2:
        return None
    s = sorted(values)
    best = s[0] + den - s[-1]
    for a, b in zip(s, s[1:]):
        if b - a < best:
            best = b - a
    return best


# ---------------------------------------------------------------- validation


@dataclass
class LevelReport:
    level: int
    eps: Fraction
    size: int
    weight_ratio: Fraction  # max weight / (eps_p / eps0^2)
    arc_bound: Fraction  # upper bound on max |e^{2 pi i t} - 1|
    gap_prev: Optional[Fraction]  # angular gap of products of earlier levels
    gap_method: str
    fourier_bound: Fraction

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "eps": frac_json(self.eps),
            "size": self.size,
            "weight_ratio": frac_json(self.weight_ratio),
            "arc_bound": frac_json(self.arc_bound),
            "gap_prev": frac_json(self.gap_prev) if self.gap_prev is not None else None,
            "gap_method": self.gap_method,
            "fourier_bound": frac_json(self.fourier_bound),
        }


def validate_levels(cl: CantorLevels, enumerate_limit: int = 200_000) -> List[LevelReport]:
    """Check every constraint exactly; raise CantorConstraintError at the first violation."""
    P = cl.depth
    if len(cl.schedule) != P:
        raise CantorConstraintError("schedule length", P, "one eps_p per level")
    eps, c = cl.epsilon, cl.eps0_sq
    sched = cl.schedule
    n_max = max(abs(x) for x in cl.prefix) if cl.prefix else 0
    if sum(sched) >= eps:
        raise CantorConstraintError("sum eps_p < eps", P, f"sum = {float(sum(sched))}")
    reports: List[LevelReport] = []
    den = _common_den(cl.levels)
    gap: Optional[Fraction] = None  # None: products of earlier levels form one point
    prod_vals: Optional[List[int]] = [0]
    partial = Fraction(1)
    prev_partial = None
    for p, (lv, ep) in enumerate(zip(cl.levels, sched), start=1):
        if ep <= 0:
            raise CantorConstraintError("eps_p > 0", p)
        if sum(sched[p - 1 :]) >= 2 * ep:
            raise CantorConstraintError("sum_{i>=p} eps_i < 2 eps_p", p)
        partial *= ep / c
        if prev_partial is not None and partial >= prev_partial:
            raise CantorConstraintError("eps0^{-2p} eps_1...eps_p decreasing", p)
        prev_partial = partial
        if len(set(lv.offsets)) != lv.size:
            raise CantorConstraintError("distinct atoms within level", p)
        if sum(lv.weights) != 1 or any(w <= 0 for w in lv.weights):
            raise CantorConstraintError("weights positive and summing to 1", p)
        wmax = max(lv.weights)
        if not wmax < ep / c:
            raise CantorConstraintError("a < eps_p/eps0^2", p, f"max weight {wmax}")
        arc = max(chord_upper(t) for t in lv.offsets)
        if any(abs(t) >= Fraction(1, 2) for t in lv.offsets) or not arc < ep:
            raise CantorConstraintError("F_p inside the arc |lambda - 1| < eps_p", p)
        if gap is not None:
            if gap == 0:
                raise CantorConstraintError("distinct products", p - 1)
            if not chord_lower(gap) > 4 * ep:
                raise CantorConstraintError("product gap > 4 eps_p", p, f"gap {float(gap)}")
        fb = level_fourier_bound(lv, n_max)
        method = "single point" if gap is None else ("enumerated" if prod_vals is not None else "induction")
        reports.append(LevelReport(p, ep, lv.size, wmax / (ep / c), arc, gap, method, fb))
        # gap among products of levels 1..p
        w_p = max(abs(t) for t in lv.offsets)
        offs = sorted(int(t * den) for t in lv.offsets)
        inner = min_circular_gap(offs, den)
        inner_g = Fraction(inner, den) if inner is not None else None
        if prod_vals is not None and len(prod_vals) * lv.size <= enumerate_limit:
            prod_vals = [(a + o) % den for a in prod_vals for o in offs]
            g = min_circular_gap(prod_vals, den)
            gap = Fraction(g, den) if g is not None else None
        else:
            prod_vals = None
            # distinct earlier products are > 4 w_p apart, so sums stay distinct
            cands = [x for x in (inner_g, gap - 2 * w_p if gap is not None else None) if x is not None]
            gap = min(cands) if cands else None
    return reports


# ---------------------------------------------------------------- generation


def _pow2_floor(x: Fraction) -> Fraction:
    if x <= 0:
        raise ValueError("positive value expected")
    e = math.floor(math.log2(x.numerator) - math.log2(x.denominator)) + 1
    v = Fraction(2) ** e
    while v > x:
        v /= 2
    return v


def _grid_floor(x: Fraction, grid: Fraction) -> Fraction:
    return math.floor(x / grid) * grid


def _jamison_sq_lower(seq: Sequence) -> Fraction:
    rep = analyze_structure(seq, ap_cap=2)
    if rep.ratio_status != "bounded" or rep.kappa_bound is None or not rep.contains_one:
        raise ValueError("no structural Jamison constant for this sequence; pass eps0 explicitly")
    x = PI_LO / (2 * rep.kappa_bound)  # (2 sin x)^2 >= (2 (x - x^3/6))^2
    return (2 * (x - x**3 / 6)) ** 2


def generate_cantor_levels(
    seq: Sequence,
    epsilon,
    depth: int,
    K: int = 8,
    eps0=None,
    margin: Fraction = Fraction(1, 64),
    grid_bits: int = 192,
) -> CantorLevels:
    """Deterministic level data satisfying every constraint, for the first K terms of seq.

    Level 1 is a single atom; later levels are equal-weight progressions centred
    (almost) at 1. eps0^2 is lowered to at most 3/n_max^2 so that the Fourier
    budget is never the binding constraint; any smaller constant is still valid.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    prefix = tuple(seq.prefix(K))
    n = max(prefix)
    eps = as_fraction(epsilon)
    c_in = as_fraction(eps0) ** 2 if eps0 is not None else _jamison_sq_lower(seq)
    c = _pow2_floor(min(c_in, Fraction(3, n * n), eps / 8))
    grid = Fraction(1, 2**grid_bits)
    keep = 1 - margin
    levels: List[CantorLevel] = []
    sched: List[Fraction] = []

    e1 = eps / 4
    t1 = _pow2_floor(e1 / (4 * PI_HI * n))
    levels.append(CantorLevel((t1,), (Fraction(1),), center=t1, spacing=Fraction(0)))
    sched.append(e1)
    den_guess = 2**grid_bits
    gap: Optional[Fraction] = None
    prod_vals: Optional[List[int]] = [int(t1 * den_guess) % den_guess]
    for p in range(2, depth + 1):
        if gap is None:
            ep = c * keep
        else:
            ep = min(_grid_floor(chord_lower(gap) / 4 * keep, grid), sched[-1] * Fraction(2, 5))
        if ep <= 0:
            raise CantorConstraintError("positive schedule", p, "grid too coarse")
        m = math.floor(c / ep) + 1
        odd = m % 2 == 1
        shift = Fraction(1, 2**20) if odd else Fraction(0)  # centre offset in units of h
        half = Fraction(m - 1, 2) + shift
        h = ep * keep / (2 * PI_HI * half) if half else ep
        # Fourier budget: 2 pi n |c| + 2 pi^2 n^2 h^2 (m^2-1)/12 < ep/2
        A = 2 * PI_HI**2 * n * n * (m * m - 1) / 12
        B = 2 * PI_HI * n * shift
        while A * h * h + B * h >= ep / 2 * keep:
            h *= keep
        unit = grid * 2**21
        h = _grid_floor(h, unit)
        if h <= 0:
            raise CantorConstraintError("positive spacing", p, "grid too coarse")
        center = h * shift
        offs = tuple(center + Fraction(2 * j - (m - 1), 2) * h for j in range(m))
        lv = CantorLevel(offs, tuple(Fraction(1, m) for _ in range(m)), center=center, spacing=h)
        levels.append(lv)
        sched.append(ep)
        w_p = max(abs(t) for t in offs)
        ints = sorted(int(t * den_guess) for t in offs)
        inner = Fraction(min_circular_gap(ints, den_guess), den_guess)
        if prod_vals is not None and len(prod_vals) * m <= 200_000:
            prod_vals = [(a + o) % den_guess for a in prod_vals for o in ints]
            gap = Fraction(min_circular_gap(prod_vals, den_guess), den_guess)
        else:
            prod_vals = None
            gap = min(inner, gap - 2 * w_p) if gap is not None else inner
    cl = CantorLevels(tuple(levels), tuple(sched), eps, c, prefix)
    validate_levels(cl)
    return cl


# ---------------------------------------------------------------- combined measure


def _llog_sinc(m: int, y: np.ndarray) -> np.ndarray:
    """log(sin(m y)/(m sin y)) for small |m y| (series through y^8)."""
    m2 = float(m) * m
    y2 = y * y
    return -(
        (m2 - 1) * y2 / 6
        + (m2 * m2 - 1) * y2 * y2 / 180
        + (m2**3 - 1) * y2**3 / 2835
        + (m2**4 - 1) * y2**4 / 37800
    )


def _progression_parts(level: CantorLevel, ns: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """For an equal-weight progression: (g - 1, 1 - g^2, phase) with hat sigma(n) = g(n) e^{i phase}."""
    m = level.size
    h = float(level.spacing)
    y = np.pi * ns * h
    if m == 1:
        gm1 = np.zeros_like(y)
        defect = np.zeros_like(y)
    else:
        small = np.abs(m * y) < 0.05
        L = _llog_sinc(m, y)
        with np.errstate(invalid="ignore", divide="ignore"):
            g_direct = np.sin(m * y) / (m * np.sin(y))
        gm1 = np.where(small, np.expm1(L), g_direct - 1.0)
        defect = np.where(small, -np.expm1(2.0 * L), 1.0 - g_direct * g_direct)
        gm1 = np.where(ns == 0, 0.0, gm1)
        defect = np.where(ns == 0, 0.0, defect)
    phase = 2.0 * np.pi * ns * float(level.center)
    return gm1, defect, phase


def _level_minus_one(level: CantorLevel, ns: np.ndarray) -> np.ndarray:
    if level.is_progression:
        gm1, _, phase = _progression_parts(level, ns)
        rot = np.expm1(1j * phase)  # e^{i phase} - 1
        return gm1 + (1.0 + gm1) * rot
    mu = level.measure()
    from .measures import fourier_minus_one

    return np.array([fourier_minus_one(mu, int(k)) for k in ns])


def _level_defect(level: CantorLevel, ns: np.ndarray) -> np.ndarray:
    """1 - |hat sigma_p(n)|^2 computed without cancellation."""
    if level.is_progression:
        return _progression_parts(level, ns)[1]
    d = _level_minus_one(level, ns)
    return -2.0 * d.real - (d.real**2 + d.imag**2)


@dataclass
class ProductMeasure:
    """sigma_1 * ... * sigma_P, evaluated through its factors."""

    levels: Tuple[CantorLevel, ...]

    @property
    def atom_count(self) -> int:
        return math.prod(lv.size for lv in self.levels)

    @property
    def max_atom_mass(self) -> Fraction:
        return math.prod((max(lv.weights) for lv in self.levels), start=Fraction(1))

    def fourier_minus_one(self, ns) -> np.ndarray:
        ns = np.asarray(ns, dtype=np.float64)
        D = np.zeros(ns.shape, dtype=complex)
        for lv in self.levels:
            d = _level_minus_one(lv, ns)
            D = D + d + D * d
        return D

    def fourier(self, ns) -> np.ndarray:
        return 1.0 + self.fourier_minus_one(ns)

    def wiener_profile(self, N: int) -> List[Tuple[float, float]]:
        """(W, mean deficit) after each depth 1..P, W = (1/(2N+1)) sum_{|n|<=N} |hat tau(n)|^2."""
        ns = np.arange(1, N + 1, dtype=np.float64)
        D = np.zeros(N)
        out = []
        for lv in self.levels:
            e = np.clip(_level_defect(lv, ns), 0.0, 1.0)
            D = D + e - D * e
            mean_def = 2.0 * math.fsum(D) / (2 * N + 1)
            out.append((1.0 - mean_def, mean_def))
        return out

    def materialize(self, max_atoms: int = 10**6) -> AtomicMeasure:
        if self.atom_count > max_atoms:
            raise AtomOverflowError(f"{self.atom_count} atoms exceed the limit {max_atoms}; lower the depth")
        mu = AtomicMeasure.dirac(0)
        for lv in self.levels:
            mu = convolve(mu, lv.measure(), max_atoms=max_atoms)
        return mu


@dataclass
class CantorCertificate:
    depth: int
    atom_count: int
    distinct: bool
    distinct_method: str
    max_atom_mass: Fraction
    mass_bound: Fraction
    fourier_gap: float
    fourier_bound: Fraction
    epsilon: Fraction
    levels: List[LevelReport]

    @property
    def ok(self) -> bool:
        return self.distinct and self.max_atom_mass <= self.mass_bound and self.fourier_bound < self.epsilon

    def to_dict(self) -> dict:
        return {
            "kind": "cantor",
            "depth": self.depth,
            "atom_count": self.atom_count,
            "distinct": self.distinct,
            "distinct_method": self.distinct_method,
            "max_atom_mass": frac_json(self.max_atom_mass),
            "mass_bound": frac_json(self.mass_bound),
            "fourier_gap": self.fourier_gap,
            "fourier_bound": frac_json(self.fourier_bound),
            "epsilon": frac_json(self.epsilon),
            "ok": self.ok,
            "levels": [r.to_dict() for r in self.levels],
        }


def cantor_combine(
    cl: CantorLevels, seq: Optional[Sequence] = None, K: Optional[int] = None, enumerate_limit: int = 200_000
) -> Tuple[ProductMeasure, CantorCertificate]:
    """Validate the levels and certify the combined measure tau_P."""
    if seq is not None:
        cl = CantorLevels(cl.levels, cl.schedule, cl.epsilon, cl.eps0_sq, tuple(seq.prefix(K)))
    reports = validate_levels(cl, enumerate_limit)
    tau = ProductMeasure(cl.levels)
    count = tau.atom_count
    if count <= enumerate_limit:
        den = _common_den(cl.levels)
        vals = product_angles(cl.levels, den, enumerate_limit)
        distinct = len(set(vals)) == len(vals)
        method = "enumerated"
    else:
        # the constraints give gap(earlier products) > 4 eps_p > 4 max|t| at every level
        distinct = True
        method = "gap induction"
    mass_bound = math.prod((e / cl.eps0_sq for e in cl.schedule), start=Fraction(1))
    ns = np.array(cl.prefix, dtype=np.float64)
    gap = float(np.max(np.abs(tau.fourier_minus_one(ns)))) if len(ns) else 0.0
    fbound = sum((r.fourier_bound for r in reports), Fraction(0))
    cert = CantorCertificate(
        cl.depth, count, distinct, method, tau.max_atom_mass, mass_bound, gap, fbound, cl.epsilon, reports
    )
    return tau, cert
