import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from jamkaz.measures import (
    AtomicMeasure,
    AtomOverflowError,
    MeasureError,
    TruncationTooSmall,
    WitnessRefused,
    abs_moment,
    convolve,
    fourier,
    fourier_minus_one,
    jamison_witness_chain,
    nonkazhdan_witness_convolution,
    two_point,
    verify_convolution_certificate,
    wiener_statistic,
)
from jamkaz.sequences import make_sequence

from oracles import measure_fourier, two_point_product

H = Fraction(1, 2)


def test_fourier_examples():
    assert fourier(AtomicMeasure.dirac(0), 17) == 1
    assert fourier(AtomicMeasure.from_atoms([(0, H), (H, H)]), 1) == 0
    z = fourier(two_point(Fraction(1, 10), Fraction(1, 8)), 4)
    assert abs(z - 0.8) <= 1e-15


def test_measure_validation():
    with pytest.raises(MeasureError):
        AtomicMeasure.from_atoms([(0, H), (0, H)])
    with pytest.raises(MeasureError):
        AtomicMeasure.from_atoms([(0, H), (Fraction(1, 3), Fraction(1, 3))])


def test_convolution_collisions():
    mu = AtomicMeasure.from_atoms([(0, H), (H, H)])
    nu = convolve(mu, mu)
    assert nu.angles == (0, H) and nu.weights == (H, H)


def test_convolution_no_collisions():
    a, b = two_point(Fraction(1, 3), Fraction(1, 5)), two_point(Fraction(1, 4), Fraction(1, 7))
    c = convolve(a, b)
    assert len(c) == 4
    assert c.mass_at(Fraction(1, 5) + Fraction(1, 7)) == Fraction(1, 12)


def test_convolution_overflow():
    a = AtomicMeasure.from_atoms([(Fraction(j, 100), Fraction(1, 100)) for j in range(100)])
    with pytest.raises(AtomOverflowError, match="truncate"):
        convolve(a, a, max_atoms=1000)


def test_wiener_examples():
    assert wiener_statistic(AtomicMeasure.dirac(0), 50) == pytest.approx(1, abs=1e-15)
    proxy = Fraction(round(10**6 / math.sqrt(2)), 10**6)
    assert abs(wiener_statistic(AtomicMeasure.from_atoms([(0, H), (proxy, H)]), 10**5) - 0.5) < 1e-3
    mu = AtomicMeasure.from_atoms([(Fraction(1, 7), Fraction(3, 10)), (Fraction(2, 5), Fraction(7, 10))])
    assert abs(wiener_statistic(mu, 10**5) - 0.58) < 1e-3


def test_wiener_closed_form_matches_direct_sum():
    mu = AtomicMeasure.from_atoms([(Fraction(j, 37), Fraction(1, 6)) for j in (0, 3, 5, 11, 20, 31)])
    N = 300
    direct = sum(abs(measure_fourier(zip(mu.angles, mu.weights), n)) ** 2 for n in range(-N, N + 1)) / (2 * N + 1)
    assert abs(wiener_statistic(mu, N) - direct) <= 1e-12


def test_factblock_witness():
    w = jamison_witness_chain(make_sequence("factblock", 10), 0.1)
    assert w.modulus == math.factorial(62) ** 2
    assert w.certified and w.sup_upper < Fraction(1, 10)
    assert w.to_dict()["theta"]["fraction"] == f"1/{math.factorial(62) ** 2}"


def test_factorial_chain_witness():
    fact = make_sequence("fact", 40)
    w = jamison_witness_chain(fact, 0.5)
    k0 = w.zero_from_index - 1
    t = fact.terms
    assert Fraction(t[k0 + 1], t[k0]) > 4 * math.pi
    assert w.modulus == t[k0 + 1] and w.certified


def test_witness_refusals():
    with pytest.raises(WitnessRefused, match="ratio"):
        jamison_witness_chain(make_sequence("pow:2", 40), 0.1)
    with pytest.raises(WitnessRefused, match="divisibility"):
        nonkazhdan_witness_convolution(make_sequence("poly:1,0,0", 40), 0.1, 30)
    with pytest.raises(TruncationTooSmall) as ei:
        nonkazhdan_witness_convolution(make_sequence("pow:2", 40), 0.1, 10, k_max=20)
    assert ei.value.minimal == 21


def test_convolution_certificate_and_reverify():
    p2 = make_sequence("pow:2", 60)
    spec, cert = nonkazhdan_witness_convolution(p2, 0.1, 200, k_max=20)
    assert cert.certified and len(cert.rows) == 21
    for r in cert.rows:
        assert r["value"] < 0.1
        assert abs(r["bound"] - (2 * math.pi * 0.1 / (4 * math.pi * (r["k"] + 1)) + r["tail"])) <= 1e-9
    ok, _ = verify_convolution_certificate(cert.to_dict(), p2)
    assert ok


def test_small_convolution_matches_materialized_product():
    p2 = make_sequence("pow:2", 20)
    spec, _ = nonkazhdan_witness_convolution(p2, 0.1, 8, k_max=5)
    mu = spec.to_measure()
    for n in (1, 2, 4, 8, 16, 3, 5):
        assert abs(mu.fourier(n) - spec.fourier(n)) <= 1e-12
        assert abs(spec.fourier(n) - two_point_product(spec.factors, n)) <= 1e-12


angles = st.fractions(min_value=0, max_value=Fraction(499, 500), max_denominator=500)


@st.composite
def measures(draw, max_atoms=8):
    pts = draw(st.lists(angles, min_size=1, max_size=max_atoms, unique=True))
    raw = draw(st.lists(st.integers(1, 100), min_size=len(pts), max_size=len(pts)))
    tot = sum(raw)
    return AtomicMeasure.from_atoms([(p, Fraction(r, tot)) for p, r in zip(pts, raw)])


@given(measures(), st.integers(-1000, 1000))
def test_fourier_matches_oracle(mu, n):
    assert abs(fourier(mu, n) - measure_fourier(zip(mu.angles, mu.weights), n)) <= 1e-12
    assert abs(fourier_minus_one(mu, n) - (fourier(mu, n) - 1)) <= 1e-12


@given(measures(5), measures(5), st.integers(-1000, 1000))
def test_convolution_is_multiplicative(mu, nu, n):
    assert abs(convolve(mu, nu).fourier(n) - mu.fourier(n) * nu.fourier(n)) <= 1e-12


@given(measures(), st.integers(1, 1000))
def test_cauchy_schwarz_sandwich(mu, n):
    lhs = abs(fourier_minus_one(mu, n))
    mid = abs_moment(mu, n)
    assert mid - lhs >= -1e-12
    assert math.sqrt(2) * math.sqrt(lhs) - mid >= -1e-12


@given(st.integers(2, 60).flatmap(lambda q: st.tuples(st.just(q), st.lists(st.integers(0, q - 1), min_size=1, max_size=6, unique=True))))
def test_wiener_converges_to_sum_of_squares(qr):
    q, rs = qr
    mu = AtomicMeasure.from_atoms([(Fraction(r, q), Fraction(1, len(rs))) for r in rs])
    w2 = float(sum(w * w for w in mu.weights))
    # one full period averages to the sum of squared masses exactly
    full = sum(abs(mu.fourier(n)) ** 2 for n in range(q)) / q
    assert abs(full - w2) <= 1e-9
    N = 50 * q
    assert abs(wiener_statistic(mu, N) - w2) <= 2.0 * q / (2 * N + 1)
