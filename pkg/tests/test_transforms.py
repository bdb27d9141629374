import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from davenport import arith
from davenport.coeffs import FiniteSupport, Hecke, PowerLacunary, f_gamma_norm, zero_family
from davenport.errors import InvalidInputError
from davenport.transforms import (LatticeMap, davenport_to_fourier, fourier_map,
                                  fourier_to_davenport, invert_jump, jump_operator,
                                  maximal_operator, subsample, theta_a_estimate)
from oracles import fourier_coefficient_quad, odd_terms, zeta

SMALL = FiniteSupport(1, [((1,), Fraction(1, 2)), ((2,), Fraction(1, 4))])
LAC = PowerLacunary(2, (1, 0), 0.5)


def test_jump_finite_exact():
    A = jump_operator(SMALL, 3, 4)
    assert A.get((1,)) == Fraction(3, 2) and A.get((2,)) == Fraction(1, 2)
    assert A.get((-1,)) == Fraction(-3, 2)
    assert A.tail_bound == 0


def test_jump_hecke_q2():
    A = jump_operator(Hecke(2), 3, 10**6)
    assert abs(A.get((2,)) - zeta(2) / 4) <= A.entry_tail((2,))
    assert A.get((2,)) == pytest.approx(0.411234, abs=1e-6)


def test_jump_zero_family():
    assert len(jump_operator(zero_family(2), 10, 5)) == 0


def test_maximal_examples():
    M = maximal_operator(SMALL, 3, 4)
    assert M.get((1,)) == Fraction(1, 2) and M.get((2,)) == Fraction(1, 4)
    assert M.get((-2,)) == Fraction(1, 4) and M.parity == "even"
    assert maximal_operator(Hecke(2), 4, 100).get((3,)) == pytest.approx(1 / 18)
    assert maximal_operator(LAC, 10, 64).get((3, 0)) == 0


def test_invert_jump_examples():
    A = jump_operator(SMALL, 3, 4)
    assert invert_jump(A, (1,), 4) == Fraction(1, 2)
    assert invert_jump(LatticeMap(1), (1,), 10) == 0
    single = LatticeMap(2, {(1, 2): 0.6})
    assert invert_jump(single, (1, 2), 10) == pytest.approx(0.3)
    with pytest.raises(InvalidInputError):
        invert_jump(LatticeMap(1, parity="even"), (1,), 3)


def test_subsample_examples():
    s = subsample(LAC, (1, 0), 5)
    assert s == pytest.approx([0.5, 0.5 * 2**-0.5, 0, 0.25, 0])
    a = FiniteSupport(2, [((1, 2), 0.5), ((2, 4), 0.25)])
    assert subsample(a, (1, 2), 3) == [0.5, 0.25, 0]
    for bad in [(2, 0), (2, 4), (-1, 2)]:
        with pytest.raises(InvalidInputError):
            subsample(a, bad, 3)


def test_davenport_to_fourier_examples():
    unit = FiniteSupport(1, [((1,), 0.5)])
    quad = fourier_coefficient_quad(odd_terms([((1,), 0.5)]), (1,))
    assert davenport_to_fourier(unit, (1,)) == pytest.approx(quad, abs=1e-12)
    assert davenport_to_fourier(unit, (1,)) == pytest.approx(-0.1591549, abs=1e-7)
    for k in range(1, 6):
        assert davenport_to_fourier(unit, (k,)) == pytest.approx(-1 / (2 * math.pi * k))
    a = FiniteSupport(2, [((2, 3), 0.7)])
    assert davenport_to_fourier(a, (2, 3)) == pytest.approx(-0.7 / math.pi)
    assert davenport_to_fourier(zero_family(2), (2, 3)) == 0
    with pytest.raises(InvalidInputError):
        davenport_to_fourier(a, (0, 0))


def test_fourier_to_davenport_examples():
    unit = FiniteSupport(1, [((1,), 0.5)])
    c = fourier_map(unit, 10)
    assert fourier_to_davenport(c, (1,)) == pytest.approx(0.5)
    assert fourier_to_davenport(LatticeMap(2), (1, 1)) == 0
    single = LatticeMap(2, {(1, 2): 0.1})
    assert fourier_to_davenport(single, (1, 2)) == pytest.approx(-math.pi * 0.1)
    with pytest.raises(InvalidInputError):
        fourier_to_davenport(LatticeMap(2, parity="even"), (1, 2))


def test_theta_examples():
    nonneg = FiniteSupport(1, [((n,), Fraction(1, 2 * n * n)) for n in range(1, 40)])
    t = theta_a_estimate(nonneg, 40, 40)
    assert t.value <= 1 and not t.canceling
    h = theta_a_estimate(Hecke(2), 64, 1000)
    assert h.value <= 1 and not h.canceling
    # a_2 = -1/2 + delta makes A_1 = 2 delta while abar_1 = 1/2
    delta = 1e-6
    cancel = FiniteSupport(1, [((1,), 0.5), ((2,), -0.5 + delta)])
    c = theta_a_estimate(cancel, 3, 4, inner=1)
    assert c.canceling
    assert c.value == pytest.approx(math.log(2 * delta) / math.log(0.5), rel=1e-6)
    assert c.to_json()["flag"] == "jump-canceling"


def test_theta_empty_shell_indeterminate():
    t = theta_a_estimate(zero_family(1), 10, 5)
    assert t.indeterminate and math.isnan(t.value)


def test_lattice_map_json():
    A = jump_operator(SMALL, 3, 4)
    obj = A.to_json()
    assert obj["entries"] == [[[1], 1.5], [[2], 0.5]] and obj["parity"] == "odd"
    B = LatticeMap.from_json(obj)
    assert B.get((1,)) == 1.5 and B.get((-2,)) == -0.5


def _random_finite(draw_entries, d, exact):
    entries = {}
    for n, p, q in draw_entries:
        n = tuple(n[:d])
        if not any(n):
            continue
        rep, _ = arith.positive_rep(n)
        entries[rep] = Fraction(p, q) if exact else p / q
    return FiniteSupport(d, list(entries.items()))


entry = st.tuples(st.lists(st.integers(-8, 8), min_size=3, max_size=3),
                  st.integers(-50, 50), st.integers(1, 50))


@given(st.lists(entry, max_size=20), st.integers(1, 3), st.booleans())
def test_jump_roundtrip(entries, d, exact):
    a = _random_finite(entries, d, exact)
    R = max(2, math.ceil(a.max_norm()) + 1)
    A = jump_operator(a, R, R)
    for n, v in a.support(R):
        got = invert_jump(A, n, R)
        if exact:
            assert got == v
        else:
            assert abs(got - v) < 1e-12


@given(st.lists(entry, max_size=10), st.integers(2, 3))
def test_smjm_identity(entries, d):
    # family supported on multiples of an irreducible m: S_m(J a) = 2 J_1(S_m a)
    m = (1, 2, 3)[:d]
    scal = {}
    for _, p, q in entries:
        scal[(abs(p) % 7) + 1] = Fraction(p, q)
    a = FiniteSupport(d, [(tuple(l * c for c in m), v) for l, v in scal.items()])
    L = 8
    A = jump_operator(a, L * arith.norm(m) + 1, L)
    s = subsample(a, m, L)
    for k in range(1, L + 1):
        one_d = sum(s[l * k - 1] for l in range(1, L // k + 1))
        assert A.get(tuple(k * c for c in m)) == 2 * one_d


@given(st.lists(entry, max_size=12), st.integers(1, 2))
def test_fourier_roundtrip(entries, d):
    a = _random_finite(entries, d, False)
    M = max(2.0, a.max_norm())
    c = fourier_map(a, M)
    for n, v in a.support(M, inclusive=True):
        assert abs(fourier_to_davenport(c, n) - v) < 1e-12


@given(st.lists(entry, min_size=1, max_size=12), st.integers(1, 3), st.sampled_from([0.5, 1.5, 2.5]))
def test_estsig_bound(entries, d, gamma):
    a = _random_finite(entries, d, False)
    M = 30
    c = fourier_map(a, M)
    norm = f_gamma_norm(a, gamma, M + 1)
    for m, v in c.items():
        bound = norm * arith.sigma_power(m, 1 - gamma) / (math.pi * arith.norm(m))
        assert abs(v) <= bound * (1 + 1e-12)


def test_only_zero_family_is_continuous():
    vals = (-1, 0, 1)
    for d, reps in [(1, [(1,), (2,), (3,), (4,)]),
                    (2, [(1, 0), (0, 1), (1, 1), (1, -1), (2, 0)])]:
        for combo in itertools.product(vals, repeat=len(reps)):
            a = FiniteSupport(d, [(n, v) for n, v in zip(reps, combo) if v])
            A = jump_operator(a, 5, 4)
            if all(v == 0 for _, v in A.items()):
                assert a.is_zero()


def test_fourier_quadrature_small():
    a = FiniteSupport(2, [((1, 2), 0.3), ((2, -1), 0.2), ((1, 1), -0.1)])
    terms = odd_terms(a.support(10))
    for m in [(1, 2), (2, 4), (1, 1), (3, 3)]:
        assert davenport_to_fourier(a, m) == pytest.approx(fourier_coefficient_quad(terms, m), abs=1e-10)
