"""Finite-dimensional operator models behind the measure tests."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import List, Optional, Sequence as Seq, Tuple

import numpy as np
from scipy import linalg

from ._numeric import as_fraction, frac_json, unit_root, unit_root_minus_one
from .circle import CirclePoint
from .measures import AtomicMeasure, fourier
from .separation import d_distance
from .sequences import Sequence

NORM_TOL = 1e-9
PSD_TOL = 1e-9


class ModelError(ValueError):
    pass


# ---------------------------------------------------------------- diagonal (multiplication) model


@dataclass(frozen=True)
class DiagonalModel:
    """Multiplication by z on L^2 of an atomic measure, in the atoms' indicator basis.

    The constant function 1 has coordinates sqrt(a_j).
    """

    angles: Tuple[CirclePoint, ...]
    weights: Tuple

    def __post_init__(self):
        if len(self.angles) != len(self.weights) or not self.angles:
            raise ModelError("need one weight per angle")
        if any(w < 0 for w in self.weights):
            raise ModelError("weights must be nonnegative")
        tot = sum(self.weights)
        if abs(float(tot) - 1.0) > 1e-12:
            raise ModelError(f"weights sum to {float(tot)}, not 1")

    @classmethod
    def from_measure(cls, mu: AtomicMeasure) -> "DiagonalModel":
        pts, ws = zip(*mu.atoms)
        return cls(tuple(pts), tuple(ws))

    @classmethod
    def from_atoms(cls, atoms) -> "DiagonalModel":
        return cls.from_measure(AtomicMeasure.from_atoms(atoms))

    @property
    def measure(self) -> AtomicMeasure:
        return AtomicMeasure.from_atoms([(p.theta, w) for p, w in zip(self.angles, self.weights)])

    @property
    def one(self) -> np.ndarray:
        return np.sqrt(np.array([float(w) for w in self.weights]))

    def power(self, n: int) -> np.ndarray:
        """Diagonal of M^n."""
        return np.array([unit_root(n * p.p, p.q) for p in self.angles])

    def fixed_weight(self) -> float:
        return float(sum(w for p, w in zip(self.angles, self.weights) if p.theta == 0))

    def to_dict(self) -> dict:
        return {
            "kind": "diagonal",
            "atoms": [{"p": p.p, "q": p.q, "weight": frac_json(as_fraction(w))} for p, w in zip(self.angles, self.weights)],
        }


def orbit_defect(model: DiagonalModel, n: int) -> float:
    """||M^n 1 - 1||^2 from the coordinate vector (lambda_j^n - 1) sqrt(a_j)."""
    d = np.array([unit_root_minus_one(n * p.p, p.q) for p in model.angles]) * model.one
    return float(np.vdot(d, d).real)


def ergodic_average(model: DiagonalModel, N: int) -> complex:
    """(1/N) sum_{j<N} <M^j 1, 1>, via the geometric sum for each atom."""
    if N < 1:
        raise ValueError("N must be >= 1")
    re, im = [], []
    for p, w in zip(model.angles, model.weights):
        w = float(w)
        if p.theta == 0:
            re.append(w)
            continue
        # (1 - lambda^N) / (N (1 - lambda))
        z = unit_root_minus_one(N * p.p, p.q) / (N * unit_root_minus_one(p.p, p.q))
        re.append(w * z.real)
        im.append(w * z.imag)
    return complex(math.fsum(re), math.fsum(im))


def ergodic_error_bound(model: DiagonalModel, N: int) -> float:
    """sum_{theta != 0} 2 a_theta / (N |e^{2 pi i theta} - 1|)."""
    return math.fsum(
        2.0 * float(w) / (N * abs(unit_root_minus_one(p.p, p.q)))
        for p, w in zip(model.angles, model.weights)
        if p.theta != 0
    )


# ---------------------------------------------------------------- contraction model


@dataclass
class ContractionModel:
    T: np.ndarray
    x: np.ndarray
    norm: float = field(init=False)

    def __post_init__(self):
        self.T = np.atleast_2d(np.asarray(self.T, dtype=complex))
        self.x = np.asarray(self.x, dtype=complex).ravel()
        n, m = self.T.shape
        if n != m or self.x.shape != (n,):
            raise ModelError("T must be square and x must match its size")
        self.norm = float(np.linalg.norm(self.T, 2))
        if self.norm > 1 + NORM_TOL:
            raise ModelError(f"operator norm {self.norm:.12g} exceeds 1; contractions are not rescaled")
        nx = np.linalg.norm(self.x)
        if abs(nx - 1) > 1e-12:
            raise ModelError(f"x must be a unit vector (norm {nx})")

    def moments(self, N: int) -> np.ndarray:
        """c_n = <T_n x, x> for n = 0..N (negative n by conjugation)."""
        out = np.empty(N + 1, dtype=complex)
        v = self.x.copy()
        for n in range(N + 1):
            out[n] = np.vdot(self.x, v)
            v = self.T @ v
        return out

    def is_normal(self, tol: float = 1e-9) -> bool:
        T = self.T
        return float(np.linalg.norm(T @ T.conj().T - T.conj().T @ T)) < tol

    def fixed_space(self) -> np.ndarray:
        n = self.T.shape[0]
        return linalg.null_space(self.T - np.eye(n), rcond=1e-9)

    def to_dict(self) -> dict:
        return {
            "kind": "contraction",
            "T": [[[z.real, z.imag] for z in row] for row in self.T],
            "x": [[z.real, z.imag] for z in self.x],
        }


@dataclass
class MomentReport:
    N: int
    psd_ok: bool
    min_eigenvalue: float
    measure: Optional[AtomicMeasure]
    measure_note: str
    ergodic_mean: complex
    fixed_projection: float

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "psd_ok": self.psd_ok,
            "min_eigenvalue": self.min_eigenvalue,
            "measure": self.measure.to_dict() if self.measure is not None else None,
            "measure_note": self.measure_note,
            "ergodic_mean": [self.ergodic_mean.real, self.ergodic_mean.imag],
            "fixed_projection": self.fixed_projection,
        }


def _angle(z: complex, max_den: int) -> Fraction:
    t = Fraction(math.atan2(z.imag, z.real) / (2 * math.pi)).limit_denominator(max_den)
    return t - math.floor(t)


def moment_measure(model: ContractionModel, N: int, max_den: int = 10**6) -> MomentReport:
    """PSD check of the moment Toeplitz matrix, spectral atoms for normal T, and the ergodic mean."""
    c = model.moments(N)
    M = linalg.toeplitz(c, c.conj())  # entry (i, j) = c_{i-j}
    lo = float(np.min(np.linalg.eigvalsh(M)))
    psd = lo >= -PSD_TOL
    measure, note = None, "T is not normal: no atomic recovery"
    if model.is_normal():
        vals, Z = linalg.schur(model.T, output="complex")
        lam = np.diag(vals)
        coeff = np.abs(Z.conj().T @ model.x) ** 2
        if np.all(np.abs(np.abs(lam) - 1) < 1e-9):
            acc = {}
            for z, w in zip(lam, coeff):
                if w > 1e-15:
                    t = _angle(z, max_den)
                    acc[t] = acc.get(t, 0.0) + float(w)
            tot = math.fsum(acc.values())
            measure = AtomicMeasure.from_atoms([(t, w / tot) for t, w in sorted(acc.items())])
            note = f"unitary: eigen-angles rounded to denominators <= {max_den}"
        else:
            note = "normal with eigenvalues inside the disk: spectral measure not on the circle"
    Q = model.fixed_space()
    proj = float(np.linalg.norm(Q.conj().T @ model.x) ** 2) if Q.size else 0.0
    mean = complex(np.mean(c[:N])) if N >= 1 else complex(c[0])
    if not psd:
        note += f"; Toeplitz PSD fails (min eigenvalue {lo:.3g}): norm-bound defect in the input"
    return MomentReport(N, psd, lo, measure, note, mean, proj)


# ---------------------------------------------------------------- Kazhdan operator test


@dataclass
class OperatorTestReport:
    mode: str
    epsilon: float
    K: int
    sup_defect: float
    argmax_term: int
    passes: bool
    fixed_vector: bool
    fixed_weight: float
    certified_constant: Optional[float]
    consistent: bool
    note: str

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _defects(model, terms: Seq[int], mode: str) -> List[float]:
    if isinstance(model, DiagonalModel):
        if mode == "unitary":
            return [math.sqrt(orbit_defect(model, n)) for n in terms]
        mu = model.measure
        return [abs(1 - fourier(mu, n)) for n in terms]
    if mode == "unitary":
        out = []
        for n in terms:
            v = np.linalg.matrix_power(model.T, n) @ model.x - model.x
            out.append(float(np.linalg.norm(v)))
        return out
    out = []
    for n in terms:
        z = np.vdot(model.x, np.linalg.matrix_power(model.T, n) @ model.x)
        out.append(abs(1 - z))
    return out


def kazhdan_operator_test(
    model, seq: Sequence, K: int, epsilon: float, mode: Optional[str] = None, verdict=None
) -> OperatorTestReport:
    """sup over the first K terms of the defect, fixed-vector check, and consistency with the verdict.

    mode 'unitary' measures ||U^n x - x||; mode 'measure' measures |1 - <T_n x, x>|. The
    default is 'unitary' for diagonal models and 'measure' for contractions. A model
    passing at epsilon below a certified constant of the matching kind must have a
    fixed vector.
    """
    from .kazhdan import AT_HORIZON, PROVEN, classify, constant_transfer

    if mode is None:
        mode = "unitary" if isinstance(model, DiagonalModel) else "measure"
    if mode not in ("unitary", "measure"):
        raise ValueError("mode must be 'unitary' or 'measure'")
    terms = seq.prefix(K)
    d = _defects(model, terms, mode)
    i = int(np.argmax(d))
    sup = float(d[i])
    passes = sup < epsilon
    if isinstance(model, DiagonalModel):
        fw = model.fixed_weight()
        fixed = fw > 0
    else:
        Q = model.fixed_space()
        fw = float(np.linalg.norm(Q.conj().T @ model.x) ** 2) if Q.size else 0.0
        fixed = Q.size > 0
    v = verdict if verdict is not None else classify(seq)
    const = None
    if v.kazhdan.status in (PROVEN, AT_HORIZON) and v.kazhdan.constant is not None:
        kc = v.kazhdan.constant
        const = float(kc) if mode == "unitary" else float(constant_transfer("kazhdan-pair->measure-test", kc).result)
    consistent = not (passes and not fixed and const is not None and epsilon <= const)
    note = f"Kazhdan status {v.kazhdan.status}"
    if const is not None:
        note += f", certified {mode} constant {const:.6g}"
    return OperatorTestReport(mode, float(epsilon), K, sup, terms[i], passes, fixed, fw, const, consistent, note)


# ---------------------------------------------------------------- renorming demo


def weighted_norm_sq(J: int) -> float:
    """sum_{|j| <= J} 1/(j^2+1)."""
    return math.fsum([1.0] + [2.0 / (j * j + 1) for j in range(1, J + 1)])


def full_norm_sq() -> float:
    """sum_{j in Z} 1/(j^2+1) = pi coth(pi)."""
    return math.pi / math.tanh(math.pi)


def _gram(l: CirclePoint, m: CirclePoint, J: int) -> complex:
    """sum_{|j| <= J} (lambda conj(mu))^j / (j^2+1)."""
    t = l.theta - m.theta
    re = [1.0]
    for j in range(1, J + 1):
        z = unit_root(j * t.numerator, t.denominator)
        re.append(2.0 * z.real / (j * j + 1))
    return complex(math.fsum(re), 0.0)  # symmetric range: the imaginary parts cancel


@dataclass
class RenormTable:
    J: int
    depth: int
    M: int
    tail: float
    ratios: List[dict]
    pairs: List[dict]

    def to_dict(self) -> dict:
        return {"J": self.J, "depth": self.depth, "M": self.M, "tail": self.tail, "ratios": self.ratios, "pairs": self.pairs}


def renorm_demo(
    points: Seq, seq: Sequence, depth_j: int, K: int, J: int = 2000, tuple_budget: int = 20000
) -> RenormTable:
    """Norm ratios ||e_lambda||_new/||e_lambda|| and pairwise distance lower bounds.

    Everything is truncated: coordinates |j| <= J and tuples of length <= depth_j+1 drawn
    from the first K terms (at most tuple_budget per length). Distances are for the
    eigenvectors normalised in the full weighted norm, so they never exceed the true ones.
    """
    if depth_j > 12:
        raise ValueError("depth_j beyond budget (max 12)")
    pts = [p if isinstance(p, CirclePoint) else CirclePoint.exact(as_fraction(p)) for p in points]
    terms = seq.prefix(K)
    M = 3
    full = full_norm_sq()
    A = weighted_norm_sq(J)
    tail = math.sqrt(4.0 * 2.0 / J / full)  # omitted coordinates of a normalised difference
    ratios = []
    for p in pts:
        f = max(abs(unit_root_minus_one(n * p.p, p.q)) for n in terms)
        best = max((f / 2.0) ** (j + 1) for j in range(depth_j + 1))
        ratios.append({"theta": str(p.theta), "max_factor": f, "new_part": best, "ratio": max(1.0, best)})
    pairs = []
    for a in range(len(pts)):
        for b in range(a, len(pts)):
            l, m = pts[a], pts[b]
            G = _gram(l, m, J)
            best = max(0.0, 2 * A - 2 * G.real)
            for j in range(depth_j + 1 if l != m else 0):
                for count, tup in enumerate(combinations_with_replacement(terms, j + 1)):
                    if count >= tuple_budget:
                        break
                    al = math.prod(unit_root_minus_one(n * l.p, l.q) for n in tup)
                    be = math.prod(unit_root_minus_one(n * m.p, m.q) for n in tup)
                    val = ((abs(al) ** 2 + abs(be) ** 2) * A - 2 * (al * be.conjugate() * G).real) / 4.0 ** (j + 1)
                    best = max(best, val)
            lower = math.sqrt(best / full) if l != m else 0.0
            dd = float(d_distance(seq, l, m, K)) if l != m else 0.0
            target = dd / (M + 1)
            pairs.append(
                {
                    "lambda": str(l.theta),
                    "mu": str(m.theta),
                    "lower": lower,
                    "d_distance": dd,
                    "target": target,
                    "ok": lower >= target - tail,
                }
            )
    return RenormTable(J, depth_j, M, tail, ratios, pairs)
