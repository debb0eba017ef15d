import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jamkaz.measures import AtomicMeasure, nonkazhdan_witness_convolution, two_point
from jamkaz.operators import (
    ContractionModel,
    DiagonalModel,
    ModelError,
    ergodic_average,
    ergodic_error_bound,
    full_norm_sq,
    kazhdan_operator_test,
    moment_measure,
    orbit_defect,
    renorm_demo,
    weighted_norm_sq,
)
from jamkaz.sequences import make_sequence

from oracles import measure_fourier

H = Fraction(1, 2)
NAT = make_sequence("poly:1,0", 100)


def test_orbit_defect_examples():
    assert orbit_defect(DiagonalModel.from_measure(AtomicMeasure.dirac(0)), 7) == 0
    assert orbit_defect(DiagonalModel.from_atoms([(0, H), (H, H)]), 1) == pytest.approx(2, abs=1e-15)
    m = DiagonalModel.from_measure(two_point(Fraction(1, 10), Fraction(1, 8)))
    assert orbit_defect(m, 4) == pytest.approx(0.4, abs=1e-15)


def test_ergodic_examples():
    assert ergodic_average(DiagonalModel.from_measure(AtomicMeasure.dirac(0)), 10) == 1
    m = DiagonalModel.from_atoms([(0, Fraction(2, 5)), (Fraction(2, 7), Fraction(3, 5))])
    v = ergodic_average(m, 10**5)
    assert abs(v.real - 0.4) <= 1e-4
    no_atom = DiagonalModel.from_atoms([(Fraction(1, 3), H), (Fraction(3, 5), H)])
    assert abs(ergodic_average(no_atom, 10**5)) <= 1e-4


def test_ergodic_closed_form_matches_loop():
    m = DiagonalModel.from_atoms([(0, Fraction(1, 4)), (Fraction(1, 9), Fraction(1, 4)), (Fraction(5, 11), H)])
    N = 777
    atoms = list(zip((p.theta for p in m.angles), m.weights))
    loop = sum(measure_fourier(atoms, j) for j in range(N)) / N
    assert abs(ergodic_average(m, N) - loop) <= 1e-12


def test_contraction_identity():
    r = moment_measure(ContractionModel(np.eye(3), np.array([0.6, 0.8, 0])), 20)
    assert r.psd_ok and r.measure.angles == (0,)


def test_contraction_diag_one_i():
    s = math.sqrt(0.5)
    r = moment_measure(ContractionModel(np.diag([1, 1j]), np.array([s, s])), 64)
    assert r.measure.angles == (0, Fraction(1, 4))
    assert all(abs(float(w) - 0.5) < 1e-12 for w in r.measure.weights)
    assert abs(r.fixed_projection - 0.5) < 1e-12


def test_contraction_jordan_strict():
    T = np.array([[0.5, 0.5], [0, 0.5]])
    model = ContractionModel(T, np.array([0.0, 1.0]))
    r = moment_measure(model, 400)
    assert r.psd_ok and r.fixed_projection == 0
    # power iteration oracle: T^n x -> 0, so the mean of the moments tends to 0
    v = model.x.copy()
    for _ in range(400):
        v = T @ v
    assert np.linalg.norm(v) < 1e-100
    assert abs(r.ergodic_mean) < 0.01


def test_contraction_rejects_expanding():
    with pytest.raises(ModelError, match="norm"):
        ContractionModel(np.diag([1.1, 1]), np.array([1.0, 0]))


def test_operator_test_best_constant():
    m = DiagonalModel.from_measure(AtomicMeasure.dirac(Fraction(1, 3)))
    rep = kazhdan_operator_test(m, NAT, 100, 1.7)
    assert rep.sup_defect == pytest.approx(math.sqrt(3), abs=1e-12)
    assert not rep.passes and rep.consistent


def test_operator_test_convolution_model():
    p2 = make_sequence("pow:2", 40)
    spec, _ = nonkazhdan_witness_convolution(p2, 0.1, 10, k_max=9)
    m = DiagonalModel.from_measure(spec.to_measure())
    rep = kazhdan_operator_test(m, p2, 10, 0.1, mode="measure")
    assert rep.passes and rep.consistent
    # the only fixed vector is the atom at 1 carried by the truncation
    nontrivial = [p for p in m.angles if p.theta != 0]
    assert len(nontrivial) == len(m.angles) - 1
    unitary = kazhdan_operator_test(m, p2, 10, 0.1, mode="unitary")
    assert unitary.sup_defect > 0.1


def test_renorm_pair():
    t = renorm_demo([0, Fraction(1, 3)], NAT, 2, 20, J=2000)
    pair = next(p for p in t.pairs if p["lambda"] != p["mu"])
    assert pair["lower"] >= math.sqrt(3) / 4 - t.tail
    same = [p for p in t.pairs if p["lambda"] == p["mu"]]
    assert all(p["lower"] == 0 for p in same)


def test_renorm_norms():
    assert abs(weighted_norm_sq(10**6) - full_norm_sq()) < 3e-6
    with pytest.raises(ValueError, match="budget"):
        renorm_demo([0], NAT, 13, 5)


@st.composite
def diagonal_models(draw):
    pts = draw(st.lists(st.fractions(min_value=0, max_value=Fraction(99, 100), max_denominator=100), min_size=1, max_size=8, unique=True))
    raw = draw(st.lists(st.integers(1, 50), min_size=len(pts), max_size=len(pts)))
    return DiagonalModel.from_atoms([(p, Fraction(r, sum(raw))) for p, r in zip(pts, raw)])


@given(diagonal_models(), st.integers(-1000, 1000))
def test_orbit_defect_identity(m, n):
    assert abs(orbit_defect(m, n) - 2 * (1 - m.measure.fourier(n).real)) <= 1e-12


@given(diagonal_models(), st.integers(1, 5000))
def test_ergodic_error_bound_holds(m, N):
    err = abs(ergodic_average(m, N) - m.fixed_weight())
    assert err <= ergodic_error_bound(m, N) + 1e-12


@settings(max_examples=30)
@given(diagonal_models())
def test_toeplitz_of_unitary_is_psd(m):
    T = np.diag(m.power(1))
    r = moment_measure(ContractionModel(T, m.one), 24)
    assert r.psd_ok
