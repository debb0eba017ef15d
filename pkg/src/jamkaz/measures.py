"""Atomic probability measures on the circle and the witness measures built from them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence as Seq, Tuple, Union

import numpy as np

from ._numeric import (
    PI_HI,
    SIN_ERR,
    as_fraction,
    chord_from_residue,
    frac_json,
    unit_root,
    unit_root_minus_one,
)
from .circle import CirclePoint
from .sequences import Sequence, analyze_structure

Weight = Union[Fraction, float]


class MeasureError(ValueError):
    pass


class AtomOverflowError(MeasureError):
    pass


class WitnessRefused(ValueError):
    """The structural hypothesis behind a witness construction does not hold."""


class TruncationTooSmall(ValueError):
    def __init__(self, J: int, minimal: int):
        super().__init__(f"truncation J={J} is too small; need J >= {minimal}")
        self.minimal = minimal


def _reduce(theta) -> Fraction:
    t = as_fraction(theta)
    return t - math.floor(t)


@dataclass(frozen=True)
class AtomicMeasure:
    """Finitely many atoms at rational angles; weights are exact when given as Fractions."""

    angles: Tuple[Fraction, ...]
    weights: Tuple[Weight, ...]
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if len(self.angles) != len(self.weights) or not self.angles:
            raise MeasureError("need at least one atom and one weight per atom")
        if len(set(self.angles)) != len(self.angles):
            raise MeasureError("atom points must be pairwise distinct")
        if any(w < 0 for w in self.weights):
            raise MeasureError("weights must be nonnegative")
        if all(isinstance(w, (Fraction, int)) for w in self.weights):
            if sum(self.weights, Fraction(0)) != 1:
                raise MeasureError(f"weights sum to {sum(self.weights, Fraction(0))}, not 1")
        elif abs(math.fsum(float(w) for w in self.weights) - 1.0) > 1e-12:
            raise MeasureError("weights must sum to 1 within 1e-12")

    @classmethod
    def from_atoms(cls, atoms: Iterable[Tuple[object, Weight]], merge: bool = False, meta=None) -> "AtomicMeasure":
        acc: Dict[Fraction, Weight] = {}
        for theta, w in atoms:
            t = _reduce(theta.theta if isinstance(theta, CirclePoint) else theta)
            w = w if isinstance(w, (Fraction, float)) else as_fraction(w)
            if t in acc:
                if not merge:
                    raise MeasureError(f"duplicate atom at {t}")
                acc[t] = acc[t] + w
            else:
                acc[t] = w
        keys = sorted(acc)
        return cls(tuple(keys), tuple(acc[k] for k in keys), dict(meta or {}))

    @classmethod
    def dirac(cls, theta=0) -> "AtomicMeasure":
        return cls.from_atoms([(theta, Fraction(1))])

    def __len__(self) -> int:
        return len(self.angles)

    @property
    def atoms(self) -> List[Tuple[CirclePoint, Weight]]:
        return [(CirclePoint.exact(t), w) for t, w in zip(self.angles, self.weights)]

    @property
    def exact_weights(self) -> bool:
        return all(isinstance(w, Fraction) for w in self.weights)

    def mass_at(self, theta) -> Weight:
        t = _reduce(theta)
        for a, w in zip(self.angles, self.weights):
            if a == t:
                return w
        return Fraction(0)

    @property
    def max_mass(self) -> Weight:
        return max(self.weights)

    def fourier(self, n: int) -> complex:
        return fourier(self, n)

    def to_dict(self) -> dict:
        atoms = []
        for t, w in zip(self.angles, self.weights):
            wj = f"{w.numerator}/{w.denominator}" if isinstance(w, Fraction) else float(w)
            atoms.append({"p": t.numerator, "q": t.denominator, "weight": wj})
        return {"atoms": atoms, "meta": dict(self.meta)}

    @classmethod
    def from_dict(cls, obj: dict) -> "AtomicMeasure":
        atoms = []
        for a in obj["atoms"]:
            w = a["weight"]
            w = Fraction(w) if isinstance(w, str) else float(w)
            atoms.append((Fraction(int(a["p"]), int(a["q"])), w))
        return cls.from_atoms(atoms, meta=obj.get("meta"))


def fourier(mu: AtomicMeasure, n: int) -> complex:
    """hat mu(n) = sum_a w_a e^{2 pi i n theta_a}, residues reduced exactly first."""
    re, im = [], []
    for t, w in zip(mu.angles, mu.weights):
        z = unit_root(n * t.numerator, t.denominator)
        fw = float(w)
        re.append(fw * z.real)
        im.append(fw * z.imag)
    return complex(math.fsum(re), math.fsum(im))


def fourier_minus_one(mu: AtomicMeasure, n: int) -> complex:
    """hat mu(n) - 1 without cancellation when all atoms are close to 1."""
    re, im = [], []
    for t, w in zip(mu.angles, mu.weights):
        z = unit_root_minus_one(n * t.numerator, t.denominator)
        fw = float(w)
        re.append(fw * z.real)
        im.append(fw * z.imag)
    return complex(math.fsum(re), math.fsum(im))


def abs_moment(mu: AtomicMeasure, n: int, power: int = 1) -> float:
    """integral of |lambda^n - 1|^power d mu."""
    return math.fsum(
        float(w) * chord_from_residue(n * t.numerator, t.denominator) ** power
        for t, w in zip(mu.angles, mu.weights)
    )


def convolve(mu: AtomicMeasure, nu: AtomicMeasure, max_atoms: int = 10**6) -> AtomicMeasure:
    """Product of atoms (angles add mod 1); equal angles merge exactly."""
    if len(mu) * len(nu) > max_atoms:
        raise AtomOverflowError(
            f"product has up to {len(mu) * len(nu)} atoms (limit {max_atoms}); truncate the factors first"
        )
    acc: Dict[Fraction, Weight] = {}
    for a, wa in zip(mu.angles, mu.weights):
        for b, wb in zip(nu.angles, nu.weights):
            t = a + b
            if t >= 1:
                t -= 1
            acc[t] = acc.get(t, 0) + wa * wb
    keys = sorted(acc)
    weights = tuple(acc[k] for k in keys)
    if not all(isinstance(w, Fraction) for w in weights):
        weights = tuple(float(w) for w in weights)
    return AtomicMeasure(tuple(keys), weights)


def two_point(a: Weight, theta) -> AtomicMeasure:
    """(1 - a) delta_1 + a delta_theta."""
    t = _reduce(theta)
    if t == 0:
        return AtomicMeasure.dirac(0)
    one = Fraction(1) if isinstance(a, Fraction) else 1.0
    return AtomicMeasure.from_atoms([(0, one - a), (t, a)])


# ---------------------------------------------------------------- Wiener statistic


def _fejer(x: Fraction, N: int) -> float:
    """(1/(2N+1)) sum_{|n|<=N} cos(2 pi n x), evaluated with exact argument reduction."""
    x = x - math.floor(x)
    if x == 0:
        return 1.0
    M = 2 * N + 1
    y = (M * x) % 2
    num = math.sin(math.pi * float(y))
    den = M * math.sin(math.pi * float(x))
    return num / den


def wiener_statistic(mu: AtomicMeasure, N: int) -> float:
    """(1/(2N+1)) sum_{|n|<=N} |hat mu(n)|^2."""
    if N < 1:
        raise ValueError("N must be >= 1")
    m = len(mu)
    w = [float(x) for x in mu.weights]
    if m * m <= 4 * (2 * N + 1) * m or m <= 64:
        terms = [w[i] * w[i] for i in range(m)]
        for i in range(m):
            for j in range(i + 1, m):
                terms.append(2.0 * w[i] * w[j] * _fejer(mu.angles[i] - mu.angles[j], N))
        return math.fsum(terms)
    return _wiener_direct(mu, N)


def _wiener_direct(mu: AtomicMeasure, N: int, chunk: int = 2048) -> float:
    ns = np.arange(0, N + 1, dtype=np.float64)
    acc = np.zeros(N + 1)
    accs = np.zeros(N + 1)
    w = np.array([float(x) for x in mu.weights])
    ang = np.array([float(t) for t in mu.angles])
    for s in range(0, len(ang), chunk):
        ph = 2.0 * np.pi * np.outer(ang[s : s + chunk], ns)
        acc += w[s : s + chunk] @ np.cos(ph)
        accs += w[s : s + chunk] @ np.sin(ph)
    sq = acc * acc + accs * accs
    return float((sq[0] + 2.0 * sq[1:].sum()) / (2 * N + 1))


# ---------------------------------------------------------------- Jamison witness


@dataclass
class ChainWitness:
    point: CirclePoint
    modulus: int
    sup_value: float
    sup_upper: Fraction
    certified: bool
    scope: str
    epsilon: float
    construction: str
    zero_from_index: int
    remainder_terms: int

    def to_dict(self) -> dict:
        m = self.modulus
        return {
            "kind": "jamison_witness",
            "construction": self.construction,
            "epsilon": self.epsilon,
            "theta": {"fraction": f"1/{m}", "decimal": _tiny_decimal(m)},
            "modulus_digits": len(str(m)),
            "sup_value": self.sup_value,
            "sup_upper": frac_json(self.sup_upper),
            "certified": self.certified,
            "scope": self.scope,
            "zero_from_index": self.zero_from_index,
            "remainder_terms": self.remainder_terms,
        }


def _tiny_decimal(m: int) -> str:
    from ._numeric import decimal_str

    return decimal_str(Fraction(1, m))


def _remainder_bound(rem: Seq[int], m: int, epsilon: float, construction: str, zero_from: int, scope: str) -> ChainWitness:
    # each remaining term satisfies n < m/2, so |e^{2 pi i n/m} - 1| = 2 sin(pi n/m) <= 2 pi n/m
    vals = [chord_from_residue(n % m, m) for n in rem]
    sup_val = max(vals) if vals else 0.0
    top = max(rem) if rem else 0
    upper = 2 * PI_HI * Fraction(top, m)
    eps = as_fraction(epsilon)
    ok = upper < eps and sup_val + SIN_ERR < float(eps)
    return ChainWitness(
        CirclePoint.exact(Fraction(1, m)), m, sup_val, upper, ok, scope, float(epsilon),
        construction, zero_from, len(rem),
    )


def jamison_witness_chain(seq: Sequence, epsilon: float) -> ChainWitness:
    """theta = 1/m with a certified sup over all terms below epsilon.

    Factorial blocks use m = ((r0+1)!)^2 with (r0+1)^2/r0 > 2 pi/epsilon; divisibility
    chains use m = n_{k0+1} with n_{k0+1}/n_{k0} > 2 pi/epsilon.
    """
    if not (0 < epsilon < 2):
        raise ValueError("epsilon must lie in (0, 2)")
    eps = as_fraction(epsilon)
    target = 2 * PI_HI / eps  # rational upper bound for 2 pi / epsilon
    gen = seq.generator
    if gen is not None and gen.kind == "factblock":
        r0 = 1
        while Fraction((r0 + 1) ** 2, r0) <= target:
            r0 += 1
        f = math.factorial(r0)
        m = (f * (r0 + 1)) ** 2
        rem = []
        g = 1
        for r in range(1, r0 + 1):
            g *= r
            rem.extend(j * g * g for j in range(1, r + 1))
        return _remainder_bound(
            rem, m, epsilon, f"factorial blocks, r0={r0}", len(rem), "all terms (blocks r > r0 divisible by m)"
        )
    rep = analyze_structure(seq, ap_cap=2)
    if rep.ratio_status == "bounded" or (rep.ratio_status == "bounded over horizon" and not rep.is_divisibility_chain):
        raise WitnessRefused("hypothesis 'ratio tends to infinity' fails: the ratio is bounded")
    if not rep.is_divisibility_chain:
        raise WitnessRefused("divisibility hypothesis fails over the horizon: not a chain n_k | n_{k+1}")
    t = seq.terms
    k0 = next((k for k in range(len(t) - 1) if Fraction(t[k + 1], t[k]) > target), None)
    if k0 is None and seq.extendable:
        longer = seq.extended(max(2 * len(t), 64))
        t = longer.terms
        k0 = next((k for k in range(len(t) - 1) if Fraction(t[k + 1], t[k]) > target), None)
    if k0 is None:
        raise WitnessRefused("no consecutive ratio above 2 pi/epsilon within the horizon")
    m = t[k0 + 1]
    scope = "all terms (structural chain)" if rep.chain_structural else f"first {len(t)} terms (chain verified on horizon)"
    return _remainder_bound(list(t[: k0 + 1]), m, epsilon, f"divisibility chain, k0={k0}", k0 + 1, scope)


# ---------------------------------------------------------------- convolution witness


@dataclass
class ConvolutionSpec:
    factors: List[Tuple[float, Fraction]]
    truncation: int
    epsilon: float
    tail_rule: str = "geometric: sum_{j>J} a_j 2 pi n_k/n_j <= 2 pi a_{J+1} 2^{k-J}"

    def fourier(self, n: int) -> complex:
        z = 1 + 0j
        for a, th in self.factors:
            z *= 1 - a * (1 - unit_root(n * th.numerator, th.denominator))
        return z

    def fourier_minus_one(self, n: int) -> complex:
        return self.fourier(n) - 1

    @property
    def divergence_proxy(self) -> float:
        return math.fsum(a for a, _ in self.factors)

    @property
    def max_atom_mass(self) -> float:
        return math.prod(max(a, 1 - a) for a, _ in self.factors)

    def to_measure(self, max_atoms: int = 10**6) -> AtomicMeasure:
        mu = AtomicMeasure.dirac(0)
        for a, th in self.factors:
            mu = convolve(mu, two_point(a, th), max_atoms=max_atoms)
        return mu

    def to_dict(self) -> dict:
        return {
            "factors": [{"a": a, "p": th.numerator, "q": th.denominator} for a, th in self.factors],
            "truncation": self.truncation,
            "epsilon": self.epsilon,
            "tail_rule": self.tail_rule,
        }


@dataclass
class ConvolutionCertificate:
    epsilon: float
    J: int
    rows: List[dict]
    certified: bool
    divergence_proxy: float
    max_atom_mass: float
    sequence: str = ""

    def to_dict(self) -> dict:
        return {
            "kind": "convolution_witness",
            "sequence": self.sequence,
            "epsilon": self.epsilon,
            "J": self.J,
            "certified": self.certified,
            "divergence_proxy": self.divergence_proxy,
            "max_atom_mass": self.max_atom_mass,
            "rows": self.rows,
        }


def nonkazhdan_witness_convolution(
    seq: Sequence, epsilon: float, J: int, k_max: Optional[int] = None
) -> Tuple[ConvolutionSpec, ConvolutionCertificate]:
    """Truncated infinite convolution of (1-a_j) delta_1 + a_j delta_{1/n_j}, a_j = eps/(4 pi j)."""
    if not (0 < epsilon < 2):
        raise ValueError("epsilon must lie in (0, 2)")
    if J < 1:
        raise TruncationTooSmall(J, 1)
    s = seq.extended(J + 1)
    if len(s) < J + 1:
        raise ValueError(f"J={J} needs {J + 1} terms but only {len(s)} are available")
    t = s.terms[: J + 1]
    bad = next((k for k in range(J) if t[k + 1] % t[k] != 0), None)
    if bad is not None:
        raise WitnessRefused(f"not a divisibility chain: n_{bad} = {t[bad]} does not divide n_{bad + 1} = {t[bad + 1]}")
    if k_max is None:
        k_max = min(len(seq), J) - 1
    if k_max >= J:
        raise TruncationTooSmall(J, k_max + 1)
    a = [epsilon / (4.0 * math.pi * j) for j in range(1, J + 2)]  # a[j-1] = a_j
    factors = [(a[j - 1], Fraction(1, t[j])) for j in range(1, J + 1)]
    spec = ConvolutionSpec(factors, J, epsilon)
    rows = []
    ok = True
    for k in range(k_max + 1):
        n = t[k]
        val = abs(spec.fourier(n) - 1)
        main = 2.0 * math.pi * a[k]  # 2 pi a_{k+1}
        tail = 2.0 * math.pi * a[J] * 2.0 ** (k - J)  # 2 pi a_{J+1} 2^{k-J}
        bound = main + tail
        row_ok = val <= main + 1e-15 and bound < epsilon
        ok = ok and row_ok
        rows.append({"k": k, "value": val, "main": main, "tail": tail, "bound": bound, "ok": row_ok})
    cert = ConvolutionCertificate(epsilon, J, rows, ok, spec.divergence_proxy, spec.max_atom_mass, seq.tag)
    return spec, cert


def verify_convolution_certificate(cert: dict, seq: Sequence) -> Tuple[bool, str]:
    """Recompute every row from scratch with a direct product."""
    eps = float(cert["epsilon"])
    J = int(cert["J"])
    t = seq.extended(J + 1).terms[: J + 1]
    for j in range(J):
        if t[j + 1] % t[j]:
            return False, "sequence is not a chain"
    for row in cert["rows"]:
        k = int(row["k"])
        z = 1 + 0j
        for j in range(1, J + 1):
            aj = eps / (4.0 * math.pi * j)
            ang = 2.0 * math.pi * float(Fraction(t[k] % t[j], t[j]))
            z *= 1 - aj * (1 - complex(math.cos(ang), math.sin(ang)))
        val = abs(z - 1)
        bound = eps / (2.0 * (k + 1)) + 2.0 * math.pi * eps / (4.0 * math.pi * (J + 1)) * 2.0 ** (k - J)
        if not (val <= eps / (2.0 * (k + 1)) + 1e-12 and bound < eps):
            return False, f"row k={k} fails"
        if abs(bound - float(row["bound"])) > 1e-9:
            return False, f"row k={k}: stored bound differs"
    return bool(cert["certified"]), f"{len(cert['rows'])} rows re-checked"
