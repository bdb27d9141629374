"""End-to-end acceptance checks, one per criterion.

Run under pytest (one PASS/FAIL line per criterion is printed) or directly with
``python3 tests/test_acceptance.py``.
"""
from __future__ import annotations

import math
import random
import sys
import tempfile
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from davenport import arith  # noqa: E402
from davenport.cli import main as cli_main  # noqa: E402
from davenport.coeffs import (FBeta, FiniteSupport, Hecke, LAdic, PowerLacunary,  # noqa: E402
                              gamma_a_estimate)
from davenport.evaluation import GridSpec, evaluate_points  # noqa: E402
from davenport.regularity import (empirical_exponent, holder_exponent,  # noqa: E402
                                  kappa_estimate)
from davenport.sobolev import classify_sobolev, fourier_bound_check  # noqa: E402
from davenport.spectrum import empirical_spectrum  # noqa: E402
from davenport.transforms import davenport_to_fourier, invert_jump, jump_operator  # noqa: E402
from oracles import dyadic_digits, fourier_coefficient_quad, odd_terms, zeta  # noqa: E402

LACUNARY = PowerLacunary(2, (1, 0), 0.5)
PROBES = (45, 180, 215, 350, 429, 434, 435, 710, 720, 776)


def _random_finite(rng: random.Random, exact: bool):
    d = rng.choice((1, 2, 3))
    entries = {}
    for _ in range(rng.randint(1, 20)):
        n = tuple(rng.randint(-32, 32) for _ in range(d))
        if any(n):
            rep, _ = arith.positive_rep(n)
            v = Fraction(rng.randint(-1000, 1000), rng.randint(1, 1000))
            entries[rep] = v if exact else float(v)
    return FiniteSupport(d, list(entries.items()))


def criterion_1():
    t0 = time.perf_counter()
    rng = random.Random(2024)
    worst_exact, worst_float = Fraction(0), 0.0
    for i in range(200):
        exact = i % 2 == 0
        a = _random_finite(rng, exact)
        R = max(2, math.ceil(a.max_norm()) + 1)
        A = jump_operator(a, R, R)
        for n, v in a.support(R):
            err = abs(invert_jump(A, n, R) - v)
            if exact:
                worst_exact = max(worst_exact, err)
            else:
                worst_float = max(worst_float, float(err))
    dt = time.perf_counter() - t0
    ok = worst_exact == 0 and worst_float < 1e-12 and dt < 10
    return ok, f"exact max {float(worst_exact)}, float max {worst_float:.3g}, {dt:.1f}s"


def criterion_2():
    t0 = time.perf_counter()
    A = jump_operator(Hecke(2), 17, 10**6)
    errs = [(abs(A.get((q,)) - zeta(2) / q**2), A.entry_tail((q,))) for q in range(1, 17)]
    dt = time.perf_counter() - t0
    worst = max(e for e, _ in errs)
    ok = all(e <= t for e, t in errs) and worst < 1e-6 and dt < 5
    return ok, f"max |A_q - zeta(2)/q^2| = {worst:.6g}, {dt:.1f}s"


def _fourier_pairs():
    fin = FiniteSupport(2, [((1, 2), 0.3), ((2, -1), -0.2), ((1, 1), 0.25)])
    return [(Hecke(2), 40, [(m,) for m in (1, 2, 3, 4, 6, 12)]),
            (FBeta(1.7), 30, [(1,), (5,), (7,)]),
            (LAdic(3, 2), 81, [(1,), (3,), (9,)]),
            (fin, 3, [(1, 2), (2, 4), (1, 1), (3, 3)]),
            (PowerLacunary(2, (1, 1), 0.7), 6, [(1, 1), (2, 2), (4, 4), (3, 3)])]


def criterion_3():
    t0 = time.perf_counter()
    worst, count, ok = 0.0, 0, True
    for a, N, ms in _fourier_pairs():
        terms = odd_terms([(n, v) for n, v in a.support(N, inclusive=True)])
        tail = float(a.tail(N))
        for m in ms:
            quad = fourier_coefficient_quad(terms, m)
            err = abs(davenport_to_fourier(a, m) - quad)
            ok &= err <= 1e-6 + tail
            worst = max(worst, err - tail)
            count += 1
    dt = time.perf_counter() - t0
    ok = ok and count == 20 and dt < 60
    return ok, f"{count} pairs, max (error - tail) = {worst:.3g}, {dt:.1f}s"


def criterion_4():
    t0 = time.perf_counter()
    kw = dict(scales=[2.0**-j for j in range(4, 21)], N_cap=2**48)
    rows = []
    for n in PROBES:
        x0 = (Fraction(dyadic_digits(n), 2**256), Fraction(3, 10))
        est = holder_exponent(LACUNARY, x0, R=2**20, with_empirical=True, empirical_kwargs=kw)
        rows.append((est.formula_value, est.empirical_value))
    dt = time.perf_counter() - t0
    gap = max(abs(f - e) for f, e in rows)
    lo, hi = min(f for f, _ in rows), max(f for f, _ in rows)
    ok = gap <= 0.15 and 0.45 <= lo and hi <= 0.55 and dt < 300
    return ok, f"formula in [{lo:.3f}, {hi:.3f}], max |formula - empirical| = {gap:.3f}, {dt:.1f}s"


def criterion_5():
    t0 = time.perf_counter()
    fit = empirical_exponent(FBeta(1.7), (0.0,), scales=[2.0**-j for j in range(3, 11)])
    upper = holder_exponent(FBeta(1.7), (0.0,), R=2**16).upper_bound_value
    dt = time.perf_counter() - t0
    # "near beta": the bound approaches beta like beta - log zeta(beta) / log R
    ok = 0.6 <= fit.value <= 0.8 and abs(upper - 1.7) <= 0.15 and dt < 120
    return ok, f"empirical {fit.value:.3f}, jump-based upper bound {upper:.3f}, {dt:.1f}s"


def criterion_6():
    t0 = time.perf_counter()
    sp = empirical_spectrum(LACUNARY, GridSpec(2, (0, 0), (1, 1), (256, 256)))
    g = sp.gamma_a
    top, bottom, slope = sp.dimension_at(g), sp.dimension_at(0.0), sp.slope(0, g)
    dt = time.perf_counter() - t0
    ok = (abs(top - 2) <= 0.3 and abs(bottom - 1) <= 0.4 and slope > 0
          and abs(slope - 1 / g) <= 0.4 / g and dt < 600)
    return ok, f"dim(gamma) {top:.3f}, dim(0) {bottom:.3f}, slope {slope:.3f} vs {1 / g:.3f}, {dt:.1f}s"


SOBOLEV_ROWS = [((-1, 2), "H^{-2}_{1,+}"), ((0.5, 2), "H^{-0.5,-}"), ((1.5, 2), "H^{0.25,-}"),
                ((2.5, 3), "H^{0.25}_{1,+}"), ((3, 3), "H^{0.5}_{2,+}"), ((5, 3), "H^{0.5}_{1,+}")]


def criterion_7():
    t0 = time.perf_counter()
    got = [str(classify_sobolev(*args)) for args, _ in SOBOLEV_ROWS]
    dt = time.perf_counter() - t0
    bad = [(args, g) for (args, want), g in zip(SOBOLEV_ROWS, got) if g != want]
    return not bad and dt < 1, f"{6 - len(bad)}/6 rows match, {dt * 1000:.1f}ms"


def criterion_8():
    t0 = time.perf_counter()
    notes, ok = [], True

    N = 10**5
    mu = arith.mobius_table(N)
    sums = np.zeros(N + 1, dtype=np.int64)
    for l in range(1, N + 1):
        if mu[l]:
            sums[l::l] += mu[l]
    mob = sums[1] == 1 and not sums[2:].any()
    ok &= bool(mob)
    notes.append(f"mobius {'ok' if mob else 'FAIL'}")

    rng = random.Random(8)
    worst = 0.0
    for _ in range(1000):
        d = rng.choice((2, 3))
        g = rng.randint(1, 5040)
        m = tuple(g * rng.randint(-50, 50) for _ in range(d))
        if not any(m):
            continue
        z = rng.uniform(-3, 3)
        gg = arith.gcd_vec(m)
        lhs = float(arith.sigma_power(m, z))
        rhs = (math.sqrt(sum(c * c for c in m)) / gg) ** z * float(arith.sigma_power((gg,), z))
        worst = max(worst, abs(lhs - rhs) / abs(rhs))
    ok &= worst < 1e-12
    notes.append(f"relsig rel err {worst:.2g}")

    fams = [Hecke(2), FBeta(1.7), LACUNARY, PowerLacunary(3, (1, -2, 1), 0.8),
            FiniteSupport(3, [((1, 2, 0), 0.5), ((0, 1, 1), -0.3)])]
    worst = 0.0
    for i in range(1000):
        a = fams[i % len(fams)]
        x = np.array([rng.randint(-3 * 2**20, 3 * 2**20) / 2**20 for _ in range(a.d)])
        k = np.array([rng.randint(-3, 3) for _ in range(a.d)])
        f = evaluate_points(a, 256, np.array([x, -x, x + k]))
        worst = max(worst, abs(f[0] + f[1]), abs(f[0] - f[2]))
    ok &= worst < 1e-12
    notes.append(f"odd/periodic max {worst:.2g}")

    ratio = 0.0
    for a in (Hecke(2), Hecke(3), FBeta(1.7), LAdic(2, 2), LACUNARY, PowerLacunary(3, (1, 2), 0.8)):
        g = gamma_a_estimate(a, 1, 2**12).value
        rep = fourier_bound_check(a, g - 0.1, 60)
        ok &= rep.holds
        ratio = max(ratio, rep.max_ratio)
    ok &= fourier_bound_check(Hecke(2), 2, 200).holds
    notes.append(f"estsig max ratio {ratio:.4f}")

    Q = [(2**k,) for k in range(1, 21)]
    xs = np.random.default_rng(8).random(100)
    kmax = max(kappa_estimate(float(x), Q, R=2**20).value for x in xs)
    ok &= kmax < 0.2
    notes.append(f"kappa max {kmax:.3f}")

    dt = time.perf_counter() - t0
    ok = ok and dt < 60
    return ok, ", ".join(notes) + f", {dt:.1f}s"


def criterion_9():
    with tempfile.TemporaryDirectory() as tmp:
        a, b = Path(tmp) / "a", Path(tmp) / "b"
        codes = (cli_main(["selftest", "--out", str(a), "--seed", "0"]),
                 cli_main(["selftest", "--out", str(b), "--seed", "0"]))
        files = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
        same = files == sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
        same = same and all((a / f).read_bytes() == (b / f).read_bytes() for f in files)
    ok = codes == (0, 0) and same and len(files) > 0
    return ok, f"{len(files)} artifacts, exit codes {codes}, identical: {same}"


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
            6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9}


def _report(k: int) -> tuple[bool, str]:
    ok, detail = CRITERIA[k]()
    return ok, f"ACCEPTANCE {k}: {'PASS' if ok else 'FAIL'} ({detail})"


@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_acceptance(k, capsys):
    ok, line = _report(k)
    with capsys.disabled():
        print(f"\n{line}")
    assert ok, line


if __name__ == "__main__":
    results = [_report(k) for k in sorted(CRITERIA)]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
