"""Integer sequences: construction from a small DSL, ingestion, structural analysis."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence as Seq, Set, Tuple

GENERATOR_KINDS = ("pow", "powk", "poly", "primes", "factblock", "fact", "file")


class SequenceError(ValueError):
    """Base class for bad sequence input."""


class SequenceSyntaxError(SequenceError):
    def __init__(self, token: str, reason: str):
        super().__init__(f"bad sequence spec token {token!r}: {reason}")
        self.token = token


class SequenceOrderError(SequenceError):
    def __init__(self, index: int, prev: int, value: int):
        super().__init__(
            f"terms must be strictly increasing: index {index} has {value} after {prev}"
        )
        self.index = index


class EmptySequenceError(SequenceError):
    def __init__(self, source: str = ""):
        super().__init__("empty sequence" + (f" ({source})" if source else ""))


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    params: Tuple[int, ...] = ()
    path: Optional[str] = None

    @property
    def tag(self) -> str:
        if self.kind in ("pow", "powk"):
            return f"{self.kind}:{self.params[0]}"
        if self.kind == "poly":
            return "poly:" + ",".join(str(c) for c in self.params)
        if self.kind == "file":
            return f"file:{self.path}"
        return self.kind

    @property
    def closed_form(self) -> bool:
        return self.kind in ("pow", "powk", "poly", "fact", "factblock")

    def term(self, i: int) -> int:
        """Closed-form value at zero-based index i."""
        k = self.kind
        if k == "pow":
            return self.params[0] ** i
        if k == "powk":
            return self.params[0] ** i + i
        if k == "poly":
            return _poly_eval(self.params, i + 1)
        if k == "fact":
            return math.factorial(i + 1)
        if k == "factblock":
            r, j = _block_position(i)
            return j * math.factorial(r) ** 2
        raise ValueError(f"generator {k!r} has no closed form")


def _poly_eval(coeffs: Seq[int], x: int) -> int:
    acc = 0
    for c in coeffs:
        acc = acc * x + c
    return acc


def _block_position(i: int) -> Tuple[int, int]:
    # blocks of sizes 1, 2, 3, ...; returns (r, j) with 1 <= j <= r
    r = (math.isqrt(8 * i + 1) - 1) // 2
    while r * (r + 1) // 2 > i:
        r -= 1
    while (r + 1) * (r + 2) // 2 <= i:
        r += 1
    j = i - r * (r + 1) // 2 + 1
    return r + 1, j


def parse_spec(text: str) -> GeneratorSpec:
    text = text.strip()
    if not text:
        raise SequenceSyntaxError(text, "empty spec")
    head, sep, rest = text.partition(":")
    kind = head.strip().lower()
    if kind not in GENERATOR_KINDS:
        raise SequenceSyntaxError(head, f"unknown generator; expected one of {', '.join(GENERATOR_KINDS)}")
    if kind == "file":
        if not rest:
            raise SequenceSyntaxError(text, "file generator needs a path")
        return GeneratorSpec("file", (), rest)
    if kind in ("primes", "factblock", "fact"):
        if sep:
            raise SequenceSyntaxError(text, f"{kind} takes no parameters")
        return GeneratorSpec(kind)
    if not rest:
        raise SequenceSyntaxError(text, f"{kind} needs parameters")
    params = []
    for tok in rest.split(","):
        try:
            params.append(int(tok.strip()))
        except ValueError:
            raise SequenceSyntaxError(tok, "not an integer") from None
    if kind in ("pow", "powk"):
        if len(params) != 1 or params[0] < 2:
            raise SequenceSyntaxError(rest, "base must be a single integer >= 2")
    if kind == "poly":
        while len(params) > 1 and params[0] == 0:
            params.pop(0)
        if len(params) < 2:
            raise SequenceSyntaxError(rest, "polynomial must be non-constant")
    return GeneratorSpec(kind, tuple(params))


@dataclass(frozen=True)
class Sequence:
    """A strictly increasing finite prefix of an integer sequence."""

    terms: Tuple[int, ...]
    generator: Optional[GeneratorSpec] = None

    def __post_init__(self):
        if not self.terms:
            raise EmptySequenceError(self.generator.tag if self.generator else "")
        _check_increasing(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __getitem__(self, i):
        return self.terms[i]

    def __iter__(self):
        return iter(self.terms)

    @property
    def horizon(self) -> int:
        return len(self.terms)

    @property
    def tag(self) -> str:
        return self.generator.tag if self.generator else "data"

    @property
    def extendable(self) -> bool:
        return self.generator is not None and self.generator.kind != "file"

    def prefix(self, K: Optional[int]) -> Tuple[int, ...]:
        if K is None:
            return self.terms
        if K < 1:
            raise ValueError("horizon K must be >= 1")
        if K > len(self.terms):
            raise ValueError(f"horizon K={K} exceeds materialized terms ({len(self.terms)})")
        return self.terms[:K]

    def extended(self, count: int) -> "Sequence":
        """Same generator with at least `count` terms (data sequences are returned unchanged)."""
        if count <= len(self.terms) or not self.extendable:
            return self
        return make_sequence(self.generator, count)

    def terms_below(self, bound: int, limit: int = 10**6) -> Tuple[int, ...]:
        """All terms < bound, extending through the generator if possible."""
        seq = self
        while seq.extendable and seq.terms[-1] < bound and len(seq) < limit:
            seq = seq.extended(min(limit, 2 * len(seq)))
        cut = bisect.bisect_left(seq.terms, bound)
        return seq.terms[:cut]

    def next_term(self) -> Optional[int]:
        """First term beyond the horizon when a generator provides it."""
        if not self.extendable:
            return None
        return self.extended(len(self) + 1).terms[len(self)]


def _check_increasing(terms: Seq[int]) -> None:
    for i in range(1, len(terms)):
        if terms[i] <= terms[i - 1]:
            raise SequenceOrderError(i, terms[i - 1], terms[i])


def _first_primes(count: int) -> List[int]:
    if count < 6:
        bound = 15
    else:
        ln = math.log(count)
        bound = int(count * (ln + math.log(ln))) + 3
    import numpy as np

    sieve = np.ones(bound + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(bound) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    primes = np.nonzero(sieve)[0][:count]
    return [int(p) for p in primes]


def read_sequence_file(path: str) -> Tuple[int, ...]:
    text = Path(path).read_text(encoding="utf-8")
    out: List[int] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        try:
            v = int(s)
        except ValueError:
            raise SequenceError(f"{path}:{lineno}: not an integer: {s!r}") from None
        if out and v <= out[-1]:
            raise SequenceOrderError(len(out), out[-1], v)
        out.append(v)
    if not out:
        raise EmptySequenceError(path)
    return tuple(out)


def make_sequence(spec, count: Optional[int] = None) -> Sequence:
    """Build a sequence from a DSL string or GeneratorSpec.

    `count` is required for generators; for files it truncates when given.
    """
    gen = parse_spec(spec) if isinstance(spec, str) else spec
    if gen.kind == "file":
        terms = read_sequence_file(gen.path)
        if count is not None:
            if count < 1:
                raise ValueError("count must be >= 1")
            terms = terms[:count]
        return Sequence(terms, gen)
    if count is None or count < 1:
        raise ValueError("count must be a positive integer")
    if gen.kind == "primes":
        terms = tuple(_first_primes(count))
    elif gen.kind == "factblock":
        terms = _factblock_terms(count)
    elif gen.kind == "fact":
        terms, f = [], 1
        for k in range(1, count + 1):
            f *= k
            terms.append(f)
        terms = tuple(terms)
    else:
        terms = tuple(gen.term(i) for i in range(count))
    for i, t in enumerate(terms):
        if t < 1:
            raise SequenceError(f"{gen.tag}: term {i} is {t}; terms must be positive")
    return Sequence(terms, gen)


def _factblock_terms(count: int) -> Tuple[int, ...]:
    out: List[int] = []
    r, f = 0, 1
    while len(out) < count:
        r += 1
        f *= r
        sq = f * f
        for j in range(1, r + 1):
            out.append(j * sq)
            if len(out) == count:
                break
    return tuple(out)


def sequence_from_terms(terms: Seq[int]) -> Sequence:
    return Sequence(tuple(int(t) for t in terms), None)


# ---------------------------------------------------------------- analysis


@dataclass(frozen=True)
class StructureReport:
    horizon: int
    contains_one: bool
    gcd: int
    gcd_exact: bool
    bezout: Tuple[Tuple[int, int], ...]
    ratio_sup: Optional[Fraction]
    ratio_status: str  # bounded | unbounded | bounded over horizon | unbounded over horizon
    kappa_bound: Optional[Fraction]
    is_divisibility_chain: bool
    chain_structural: bool
    longest_interval: int
    longest_ap: int
    longest_ap_horizon: int
    upper_density_profile: Tuple[Tuple[int, Fraction], ...]
    shnirelman_density: Fraction

    @property
    def generates_z(self) -> bool:
        return self.gcd == 1

    @property
    def ratio_unbounded_marker(self) -> bool:
        return self.ratio_status in ("unbounded", "unbounded over horizon")

    def to_dict(self) -> dict:
        from ._numeric import frac_json

        return {
            "horizon": self.horizon,
            "contains_one": self.contains_one,
            "gcd": self.gcd,
            "gcd_exact": self.gcd_exact,
            "bezout": [list(p) for p in self.bezout],
            "ratio_sup": frac_json(self.ratio_sup) if self.ratio_sup is not None else None,
            "ratio_status": self.ratio_status,
            "kappa_bound": frac_json(self.kappa_bound) if self.kappa_bound is not None else None,
            "is_divisibility_chain": self.is_divisibility_chain,
            "chain_structural": self.chain_structural,
            "longest_interval": self.longest_interval,
            "longest_ap": self.longest_ap,
            "longest_ap_horizon": self.longest_ap_horizon,
            "upper_density_profile": [[n, f"{d.numerator}/{d.denominator}"] for n, d in self.upper_density_profile],
            "shnirelman_density": f"{self.shnirelman_density.numerator}/{self.shnirelman_density.denominator}",
        }


def bezout_combination(terms: Seq[int]) -> Tuple[int, Tuple[Tuple[int, int], ...]]:
    """gcd of the terms with integer coefficients (index, c) realizing it."""
    g = 0
    coeffs: Dict[int, int] = {}
    for i, t in enumerate(terms):
        if g != 0 and t % g == 0:
            continue
        if g == 0:
            g, coeffs = abs(t), {i: 1 if t >= 0 else -1}
        else:
            d, x, y = _egcd(g, t)
            coeffs = {k: c * x for k, c in coeffs.items() if c * x != 0}
            if y:
                coeffs[i] = coeffs.get(i, 0) + y
            g = d
        if g == 1:
            break
    return g, tuple(sorted(coeffs.items()))


def _egcd(a: int, b: int) -> Tuple[int, int, int]:
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        qt, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - qt * x1
        y0, y1 = y1, y0 - qt * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def _longest_interval(terms: Seq[int]) -> int:
    best = run = 1
    for i in range(1, len(terms)):
        run = run + 1 if terms[i] == terms[i - 1] + 1 else 1
        best = max(best, run)
    return best


def _longest_ap(terms: Seq[int]) -> int:
    n = len(terms)
    if n <= 2:
        return n
    present = set(terms)
    best = 2
    for i in range(n):
        a = terms[i]
        for j in range(i + 1, n):
            d = terms[j] - a
            if a + best * d > terms[-1]:
                break
            if a - d in present:
                continue
            length, x = 2, terms[j] + d
            while x in present:
                length += 1
                x += d
            best = max(best, length)
    return best


def _ratio_structure(seq: Sequence, horizon_sup: Optional[Fraction]) -> Tuple[str, Optional[Fraction]]:
    gen = seq.generator
    kind = gen.kind if gen else "file"
    if kind == "pow":
        return "bounded", Fraction(gen.params[0])
    if kind == "powk":
        # (b^{k+1}+k+1)/(b^k+k) <= b+1  iff  1 <= b^k + b k
        return "bounded", Fraction(gen.params[0] + 1)
    if kind == "primes":
        return "bounded", Fraction(2)  # Bertrand's postulate
    if kind in ("fact", "factblock"):
        return "unbounded", None
    if kind == "poly":
        coeffs = gen.params
        if all(c >= 0 for c in coeffs):
            deg = len(coeffs) - 1
            K = len(seq)
            tail = Fraction(K + 1, K) ** deg
            bound = max(tail, horizon_sup) if horizon_sup is not None else tail
            return "bounded", bound
        return "bounded", None
    # data: horizon trend only
    t = seq.terms
    if len(t) < 4:
        return "bounded over horizon", None
    records = []
    best = Fraction(0)
    for k in range(len(t) - 1):
        if t[k] <= 0:
            continue
        r = Fraction(t[k + 1], t[k])
        if r > best:
            best = r
            records.append(k)
    late = records and records[-1] >= (3 * (len(t) - 1)) // 4 and len(records) > 2
    return ("unbounded over horizon" if late else "bounded over horizon"), None


def analyze_structure(seq: Sequence, ap_cap: int = 1000) -> StructureReport:
    t = seq.terms
    g, bez = bezout_combination(t)
    gen = seq.generator
    if gen is None or gen.kind == "file":
        gcd_exact = False
    elif gen.kind == "poly":
        gcd_exact = len(t) >= len(gen.params)  # d+1 consecutive values fix the content
    else:
        gcd_exact = True
    ratio_sup = None
    for k in range(len(t) - 1):
        if t[k] > 0:
            r = Fraction(t[k + 1], t[k])
            if ratio_sup is None or r > ratio_sup:
                ratio_sup = r
    status, kappa = _ratio_structure(seq, ratio_sup)
    chain = all(t[k] != 0 and t[k + 1] % t[k] == 0 for k in range(len(t) - 1))
    chain_structural = gen is not None and gen.kind in ("pow", "fact")
    ap_terms = t[:ap_cap]
    profile = _density_profile(t)
    return StructureReport(
        horizon=len(t),
        contains_one=_contains(t, 1),
        gcd=g,
        gcd_exact=gcd_exact,
        bezout=bez,
        ratio_sup=ratio_sup,
        ratio_status=status,
        kappa_bound=kappa,
        is_divisibility_chain=chain,
        chain_structural=chain_structural,
        longest_interval=_longest_interval(t),
        longest_ap=_longest_ap(ap_terms),
        longest_ap_horizon=len(ap_terms),
        upper_density_profile=profile,
        shnirelman_density=_shnirelman(t),
    )


def _contains(terms: Seq[int], x: int) -> bool:
    i = bisect.bisect_left(terms, x)
    return i < len(terms) and terms[i] == x


def _positive(terms: Seq[int]) -> List[int]:
    return [x for x in terms if x >= 1]


def _density_profile(terms: Seq[int]) -> Tuple[Tuple[int, Fraction], ...]:
    pos = _positive(terms)
    if not pos:
        return ()
    top = pos[-1]
    points = []
    n = 1
    while n < top:
        points.append(n)
        n *= 10
    points.append(top)
    return tuple((N, Fraction(bisect.bisect_right(pos, N), N)) for N in points)


def _shnirelman(terms: Seq[int]) -> Fraction:
    pos = _positive(terms)
    if not pos or pos[0] != 1:
        return Fraction(0)
    # count(N)/N is minimized just before a term or at the top of the horizon
    best = Fraction(len(pos), pos[-1])
    for k in range(1, len(pos)):
        N = pos[k] - 1
        cand = Fraction(k, N)
        if cand < best:
            best = cand
    return best


# ---------------------------------------------------------------- residues


def residues_mod(seq: Sequence, q: int) -> Tuple[Set[int], bool]:
    """Residues attained mod q; exact=True means the set covers the infinite sequence."""
    if q < 2:
        raise ValueError("q must be >= 2")
    gen = seq.generator
    kind = gen.kind if gen else "file"
    if kind == "pow":
        return _orbit(gen.params[0] % q, 1 % q, q), True
    if kind == "powk":
        b = gen.params[0]
        pre, period = _pow_cycle(b, q)
        span = pre + period * q // math.gcd(period, q)
        out, x = set(), 1 % q
        for k in range(span):
            out.add((x + k) % q)
            x = x * b % q
        return out, True
    if kind == "poly":
        return {_poly_eval(gen.params, k) % q for k in range(1, q + 1)}, True
    if kind == "fact":
        out, f, k = set(), 1, 1
        while True:
            f = f * k % q
            out.add(f)
            if f == 0:
                return out, True
            k += 1
    if kind == "factblock":
        out, f, r = set(), 1, 0
        while True:
            r += 1
            f = f * r % q
            sq = f * f % q
            for j in range(1, r + 1):
                out.add(j * sq % q)
            if sq == 0:
                return out, True
    return {x % q for x in seq.terms}, False


def _orbit(b: int, start: int, q: int) -> Set[int]:
    seen: Set[int] = set()
    x = start
    while x not in seen:
        seen.add(x)
        x = x * b % q
    return seen


def _pow_cycle(b: int, q: int) -> Tuple[int, int]:
    """(preperiod, period) of k -> b^k mod q."""
    first: Dict[int, int] = {}
    x, k = 1 % q, 0
    while x not in first:
        first[x] = k
        x = x * b % q
        k += 1
    return first[x], k - first[x]
