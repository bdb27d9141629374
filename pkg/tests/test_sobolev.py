import math

import pytest
from hypothesis import given, strategies as st

from davenport import arith
from davenport.coeffs import (FBeta, FiniteSupport, Hecke, LAdic, PowerLacunary, gamma_a_estimate,
                              zero_family)
from davenport.errors import InvalidInputError
from davenport.sobolev import (SobolevLabel, classify_sobolev, divergence_test, fourier_bound_check,
                               highly_composite, regime_of, sigma_regime, sobolev_norm_estimate)
from davenport.transforms import fourier_map
from oracles import tau_table

TABLE = [((-1, 2), "H^{-2}_{1,+}"), ((0.5, 2), "H^{-0.5,-}"), ((1.5, 2), "H^{0.25,-}"),
         ((2.5, 3), "H^{0.25}_{1,+}"), ((3, 3), "H^{0.5}_{2,+}"), ((5, 3), "H^{0.5}_{1,+}")]


@pytest.mark.parametrize("args,label", TABLE)
def test_classifier_table(args, label):
    assert str(classify_sobolev(*args)) == label


def test_classifier_boundaries():
    assert str(classify_sobolev(2.5, 2)) == "H^{0.5}_{1,+}"
    assert str(classify_sobolev(2, 2)) == "H^{0.5,-}"
    assert str(classify_sobolev(0, 4)) == "H^{-2}_{1,+}"
    with pytest.raises(InvalidInputError):
        classify_sobolev(1.0, 1)
    with pytest.raises(InvalidInputError):
        classify_sobolev(math.nan, 2)


@given(st.integers(2, 6))
def test_classifier_continuity_of_s(d):
    for g in (1, 2):
        assert classify_sobolev(g, d).s == pytest.approx(classify_sobolev(g + 1e-12, d).s, abs=1e-11)
    assert classify_sobolev(1, d).s == (1 + 1 - d) / 2


def test_label_validation_and_json():
    with pytest.raises(InvalidInputError):
        SobolevLabel(math.inf)
    with pytest.raises(InvalidInputError):
        SobolevLabel(0.5, "delta_plus")
    with pytest.raises(InvalidInputError):
        SobolevLabel(0.5, "minus", 1.0)
    lab = SobolevLabel(0.25, "delta_plus", 1.0)
    assert lab.to_json() == {"s": 0.25, "modifier": "delta_plus", "delta": 1.0,
                             "label": "H^{0.25}_{1,+}"}
    assert str(SobolevLabel(1.0)) == "H^{1}"


SAW = FiniteSupport(1, [((1,), 0.5)])


def test_norm_of_zero_and_sawtooth():
    assert sobolev_norm_estimate(fourier_map(zero_family(2), 50), 0.3, 1.0, 50) == 0.0
    c = fourier_map(SAW, 1000)
    assert sobolev_norm_estimate(c, 0, 0, 1000) == pytest.approx(1 / 12, abs=1e-3)
    with pytest.raises(InvalidInputError):
        sobolev_norm_estimate(c, 0, 0, 2000)


def test_divergence_doubling():
    c = fourier_map(SAW, 1000)
    assert divergence_test(c, 0.5, 0, 1000).divergent
    assert not divergence_test(c, 0.0, 0, 1000).divergent
    with pytest.raises(InvalidInputError):
        divergence_test(c, 0.5, 0, 2)


@given(st.floats(-1, 1), st.floats(0, 0.5), st.floats(0, 2), st.integers(2, 60))
def test_norm_monotone(s, ds, delta, M):
    c = fourier_map(PowerLacunary(2, (1, 1), 0.7), 64)
    assert sobolev_norm_estimate(c, s, delta, M) <= sobolev_norm_estimate(c, s, delta, M + 4)
    assert sobolev_norm_estimate(c, s, delta, M) <= sobolev_norm_estimate(c, s + ds, delta, M) * (1 + 1e-12)


def test_fourier_bound_examples():
    rep = fourier_bound_check(Hecke(2), 2, 200)
    assert rep.holds and rep.max_ratio <= 1 + 1e-9
    unit = FiniteSupport(2, [((1, 0), 0.5)])
    rep = fourier_bound_check(unit, 10, 50)
    assert rep.holds
    for m, r in rep.ratios:
        k = m[0]
        assert m[1] == 0
        assert r == pytest.approx(1 / float(arith.sigma_power((k,), -9)), rel=1e-12)
    empty = fourier_bound_check(zero_family(2), 1, 50)
    assert empty.holds and empty.checked == 0


@pytest.mark.parametrize("a", [Hecke(2), Hecke(3), FBeta(1.7), LAdic(2, 2),
                               PowerLacunary(2, (1, 0), 0.5), PowerLacunary(3, (1, 2), 0.8)],
                         ids=lambda a: a.kind)
def test_fourier_bound_builtins(a):
    g = gamma_a_estimate(a, 1, 2**12).value
    assert fourier_bound_check(a, g - 0.1, 60).holds


def test_regimes():
    assert regime_of(-2) == ("O(1)", 0.0)
    assert regime_of(-0.5)[0] == "O(|m|^eps)"
    assert regime_of(0.5) == ("O(|m|^(z+eps))", 0.5)
    assert regime_of(2) == ("O(|m|^z)", 2.0)


def test_highly_composite_records():
    tau = tau_table(10**4)
    best, ref = 0, []
    for n in range(1, 10**4 + 1):
        if tau[n] > best:
            ref.append(n)
            best = tau[n]
    assert highly_composite(10**4) == ref


def test_sigma_regime_fits():
    assert sigma_regime(-2).fitted_exponent < 0.05
    ks = [(k, 0) for k in range(2, 10**4, 37)]
    assert abs(sigma_regime(2, ks).fitted_exponent - 2) <= 0.1
    rep = sigma_regime(0)
    assert not rep.insufficient_range and rep.decades >= 3
    # tau grows like 2^{log m / log log m}: the fitted slope on highly composite
    # numbers up to 10^6 is 0.36, well above its eventual limit 0
    assert rep.fitted_exponent == pytest.approx(0.3585, abs=1e-3)
    assert sigma_regime(0, [(2, 0), (6, 0), (12, 0)]).insufficient_range
