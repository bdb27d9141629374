"""Diophantine distances, discontinuity hyperplanes and pointwise Hölder
exponents: closed formulas on a truncation shell plus an oscillation oracle."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np

from . import arith
from .arith import HyperplaneIndex, Vector
from .coeffs import (CoefficientFamily, RegularityProfile, _below, _sq, gamma_a_estimate,
                     slow_decay_test, sparsity_exponent)
from .errors import InvalidInputError, ResourceLimitError
from .evaluation import ball_samples, evaluate_points, N_CAP, TAIL_FRACTION, _accumulate, _terms
from .transforms import LatticeMap, jump_operator, maximal_operator, theta_a_estimate

ZERO_TOL = 1e-12
DEFAULT_SCALES = tuple(2.0**-j for j in range(4, 21))


def _point(x0) -> tuple:
    """Keep exact rationals exact; everything else becomes float."""
    if isinstance(x0, (int, float, Fraction, np.floating, np.integer)):
        x0 = (x0,)
    out = []
    for c in x0:
        if isinstance(c, Rational):
            out.append(Fraction(c))
        else:
            out.append(float(c))
    return tuple(out)


def _is_exact(x0: tuple) -> bool:
    return all(isinstance(c, Fraction) for c in x0)


def _dot(x0: tuple, n: Sequence[int]):
    if _is_exact(x0):
        return sum((c * k for c, k in zip(x0, n)), Fraction(0))
    return math.fsum(float(k) * float(c) for c, k in zip(x0, n))


def _dist_to_int(t):
    f = t - math.floor(t)
    return min(f, 1 - f)


def _log(v) -> float:
    """Natural log of a positive float or (possibly huge) Fraction."""
    if isinstance(v, Fraction):
        return math.log(v.numerator) - math.log(v.denominator)
    return math.log(v)


def _check_dims(x0: tuple, n: Sequence[int]):
    if len(x0) != len(n):
        raise InvalidInputError(f"point has {len(x0)} coordinates, frequency has {len(n)}")


def delta_n(x0, n) -> float:
    """``dist(n.x0, Z) / |n|``."""
    n = arith.as_vector(n)
    x0 = _point(x0)
    _check_dims(x0, n)
    return float(_dist_to_int(_dot(x0, n))) / arith.norm(n)


def _log_delta_n(x0: tuple, n: Vector) -> float:
    dist = _dist_to_int(_dot(x0, n))
    if dist <= ZERO_TOL:
        return -math.inf
    return _log(dist) - arith.log_norm(n)


def _coprime_gap(x0: tuple, q: Vector, K: int = 1):
    """``min |q.x0 - p|`` over integers ``p`` coprime to ``gcd(q)``."""
    t = _dot(x0, q)
    g = math.gcd(*q)
    if g == 1:
        return _dist_to_int(t)
    K = max(1, int(K))
    base = math.floor(t)
    while True:
        cands = [p for p in range(base - K, base + K + 2) if math.gcd(p, g) == 1]
        if cands:
            return min(abs(t - p) for p in cands)
        K *= 2


def delta_P_q(x0, q, K: int = 1) -> float:
    """Distance from ``x0`` to the hyperplanes ``q.x = p`` with ``p``
    coprime to ``gcd(q)``; the search window doubles from ``K``."""
    q = arith.as_vector(q)
    x0 = _point(x0)
    _check_dims(x0, q)
    return float(_coprime_gap(x0, q, K)) / arith.norm(q)


def discontinuity_query(A: LatticeMap, x0, radius: float) -> list[tuple[HyperplaneIndex, float, float]]:
    """Hyperplanes ``H_{p,q}`` with ``q`` in the stored support of ``A`` lying
    within ``radius`` of ``x0``, sorted by distance."""
    x0 = _point(x0)
    out = []
    for q, v in A.items():
        if not v:
            continue
        _check_dims(x0, q)
        nq = arith.norm(q)
        t = _dot(x0, q)
        g = math.gcd(*q)
        reach = radius * nq
        lo = math.ceil(float(t) - reach - 1e-9)
        hi = math.floor(float(t) + reach + 1e-9)
        for p in range(lo, hi + 1):
            if math.gcd(p, g) != 1:
                continue
            gap = abs(t - p)
            if gap <= ZERO_TOL:
                gap = 0
            dist = float(gap) / nq
            if dist <= radius:
                out.append((HyperplaneIndex(p, q), dist, abs(float(v))))
    out.sort(key=lambda e: (e[1], e[0]))
    return out


def _certain_hyperplane(A: LatticeMap, x0: tuple) -> HyperplaneIndex | None:
    for hp, dist, _ in discontinuity_query(A, x0, 0.0):
        if not A.is_uncertain(hp.q):
            return hp
    return None


@dataclass
class ShellInfimum:
    value: float
    witness: Vector | None
    trace: list = field(default_factory=list)
    zero_hit: bool = False


def _shell_inf(items, R0, R, ratio) -> ShellInfimum:
    """Infimum of ``ratio(q, v)`` over ``R0 <= |q| < R`` with a running trace
    per dyadic shell. ``ratio`` returns None to skip a term."""
    best, witness = math.inf, None
    shells: dict[int, float] = {}
    for q, v in items:
        sq = _sq(q)
        if _below(sq, R0) or not _below(sq, R):
            continue
        r = ratio(q, v)
        if r is None:
            continue
        j = math.floor(arith.log_norm(q) / math.log(2)) + 1
        shells[j] = min(shells.get(j, math.inf), r)
        if r < best:
            best, witness = r, q
            if r == 0:
                break
    trace, run = [], math.inf
    for j in sorted(shells):
        run = min(run, shells[j])
        trace.append((2.0**j, shells[j], run))
    return ShellInfimum(best, witness, trace, best == 0)


def _upper_ratio(A: LatticeMap, x0: tuple):
    def ratio(q, v):
        if not v or A.is_uncertain(q) or abs(float(v)) >= 1:
            return None
        gap = _coprime_gap(x0, q)
        if gap <= ZERO_TOL:
            return 0.0
        log_d = _log(gap) - arith.log_norm(q)
        return max(0.0, math.log(abs(float(v))) / log_d)
    return ratio


def holder_upper_bound(A: LatticeMap, x0, R0, R) -> float:
    """``inf log|A_q| / log delta^P_q(x0)`` over ``R0 <= |q| < R``."""
    return _upper_bound(A, _point(x0), R0, R).value


def _upper_bound(A: LatticeMap, x0: tuple, R0, R) -> ShellInfimum:
    if A.parity != "odd":
        raise InvalidInputError("jump sizes form an odd map")
    return _shell_inf(A.items(), R0, R, _upper_ratio(A, x0))


def _formula(a: CoefficientFamily, x0: tuple, R0, R) -> ShellInfimum:
    def ratio(n, v):
        if not v or abs(float(v)) >= 1:
            return None
        log_d = _log_delta_n(x0, n)
        if log_d == -math.inf:
            return 0.0
        return max(0.0, math.log(abs(float(v))) / log_d)
    return _shell_inf(a.support(R), R0, R, ratio)


# ---------------------------------------------------------------------------
# empirical oracle


@dataclass
class EmpiricalFit:
    value: float
    intercept: float
    residual: float
    radii: list
    osc_values: list
    partial_sum_N: list
    detrend: str
    low_confidence: bool
    samples_per_ball: int
    seed: int

    def to_json(self):
        return {"value": self.value, "intercept": self.intercept, "residual": self.residual,
                "radii": self.radii, "osc_values": self.osc_values,
                "partial_sum_N": self.partial_sum_N, "detrend": self.detrend,
                "low_confidence": self.low_confidence,
                "samples_per_ball": self.samples_per_ball, "seed": self.seed}


def _detrended_osc(vals: np.ndarray, pts: np.ndarray, x0: np.ndarray, r: float,
                   detrend: str, global_fit) -> float:
    if detrend == "linear":
        X = np.hstack([np.ones((len(pts), 1)), (pts - x0) / r])
        coef, *_ = np.linalg.lstsq(X, vals, rcond=None)
        vals = vals - X @ coef
    elif detrend == "linear-global" and global_fit is not None:
        vals = vals - (global_fit[0] + (pts - x0) @ global_fit[1:])
    return float(vals.max() - vals.min())


def empirical_exponent(a: CoefficientFamily, x0, scales: Sequence[float] = DEFAULT_SCALES,
                       detrend: str = "linear", samples_per_ball: int = 256, seed: int = 0,
                       N_start: int = 2**10, N_cap: int = N_CAP,
                       threads: int | None = None) -> EmpiricalFit:
    """Least-squares slope of ``log osc`` against ``log r`` over the given radii.

    ``detrend="linear"`` removes the best affine fit on every ball before
    taking the oscillation; ``"linear-global"`` removes the one fitted on the
    largest ball; ``"none"`` takes the raw oscillation.
    """
    if detrend not in ("none", "linear", "linear-global"):
        raise InvalidInputError(f"unknown detrend mode {detrend!r}")
    radii = sorted((float(r) for r in scales), reverse=True)
    if len(radii) < 2 or math.log2(radii[0] / radii[-1]) < 4 - 1e-9:
        raise InvalidInputError("scales must span at least 5 dyadic levels")
    xf = np.array([float(c) for c in _point(x0)])
    if len(xf) != a.d:
        raise InvalidInputError(f"point must have {a.d} coordinates")
    oscs, Ns, low = [], [], False
    N = N_start
    global_fit = None
    for r in radii:
        pts = ball_samples(xf, r, samples_per_ball, seed)
        vals = evaluate_points(a, N, pts, threads)
        if detrend == "linear-global" and global_fit is None:
            X = np.hstack([np.ones((len(pts), 1)), pts - xf])
            global_fit, *_ = np.linalg.lstsq(X, vals, rcond=None)
        while True:
            osc = _detrended_osc(vals, pts, xf, r, detrend, global_fit)
            tail = float(a.tail(N))
            if 2 * tail <= TAIL_FRACTION * osc or tail == 0.0:
                break
            if N >= N_cap:
                low = True
                break
            try:
                ns, w = _terms(a, 2 * N, lo=N)
            except ResourceLimitError:
                low = True
                break
            if len(ns):
                vals = vals + _accumulate(pts, ns, w)
            N *= 2
        oscs.append(osc)
        Ns.append(N)
    lr = np.log(radii)
    lo = np.log(np.maximum(oscs, 1e-300))
    if not all(o > 0 for o in oscs):
        return EmpiricalFit(math.inf, math.nan, math.nan, radii, oscs, Ns, detrend, low,
                            samples_per_ball, seed)
    slope, intercept = np.polyfit(lr, lo, 1)
    resid = float(np.sqrt(np.mean((lo - (slope * lr + intercept)) ** 2)))
    return EmpiricalFit(float(slope), float(intercept), resid, radii, oscs, Ns, detrend, low,
                        samples_per_ball, seed)


# ---------------------------------------------------------------------------
# exponent estimate


@dataclass
class ExponentEstimate:
    x0: tuple
    formula_value: float | None
    upper_bound_value: float
    empirical_value: float | None
    shells_used: tuple
    validity: str
    on_discontinuity: HyperplaneIndex | None = None
    gamma_cap: float = math.inf
    notes: list = field(default_factory=list)
    formula_trace: list = field(default_factory=list)
    upper_trace: list = field(default_factory=list)
    empirical: EmpiricalFit | None = None
    profile: RegularityProfile | None = None
    config_hash: str = ""

    def to_json(self):
        return {"x0": [float(c) for c in self.x0],
                "formula_value": self.formula_value,
                "upper_bound_value": self.upper_bound_value,
                "empirical_value": self.empirical_value,
                "shells_used": list(self.shells_used), "validity": self.validity,
                "on_discontinuity": self.on_discontinuity.to_json() if self.on_discontinuity else None,
                "gamma_cap": self.gamma_cap, "notes": list(self.notes),
                "formula_trace": [list(t) for t in self.formula_trace],
                "upper_trace": [list(t) for t in self.upper_trace],
                "empirical": self.empirical.to_json() if self.empirical else None,
                "profile": self.profile.to_json() if self.profile else None,
                "config_hash": self.config_hash}


def regularity_profile(a: CoefficientFamily, R, L_max: int = 64, R0=None,
                       A: LatticeMap | None = None) -> RegularityProfile:
    R0 = math.sqrt(R) if R0 is None else R0
    g = gamma_a_estimate(a, max(1.0, R0), R)
    sp = sparsity_exponent(a, R)
    th = theta_a_estimate(a, R, L_max, A=A)
    slow = slow_decay_test(a, (n for n, _ in a.support(R)), R)
    return RegularityProfile(g.value, th.value, sp.value, sp.sparse, bool(slow.slow),
                             float(R), g.extrapolated, int(L_max))


def holder_exponent(a: CoefficientFamily, x0, R0=None, R=2**20, with_empirical: bool = False,
                    L_max: int = 64, empirical_kwargs: dict | None = None) -> ExponentEstimate:
    """Pointwise exponent at ``x0`` on the shell ``R0 <= |n| < R``
    (``R0`` defaults to ``sqrt(R)``)."""
    x0 = _point(x0)
    if len(x0) != a.d:
        raise InvalidInputError(f"point must have {a.d} coordinates")
    R0 = math.sqrt(R) if R0 is None else R0
    if not 1 <= R0 < R:
        raise InvalidInputError(f"need 1 <= R0 < R, got R0={R0}, R={R}")
    notes = []
    A = jump_operator(a, R, L_max)
    profile = regularity_profile(a, R, L_max, R0, A=A)
    valid = profile.sparse and not profile.theta_a > 1
    if not profile.sparse:
        notes.append("support is not sparse at this truncation")
    if profile.theta_a > 1:
        notes.append("family is jump canceling at this truncation")

    upper = _upper_bound(A, x0, R0, R)
    hp = _certain_hyperplane(A, x0)
    formula: float | None
    ftrace: list = []
    if hp is not None:
        formula, validity = 0.0, "discontinuity"
        notes.append("point lies on a discontinuity hyperplane")
    elif not valid:
        formula, validity = None, "upper-bound-only"
    else:
        f = _formula(a, x0, R0, R)
        ftrace = f.trace
        if f.zero_hit:
            formula, validity = None, "undetermined"
            notes.append("point lies on a hyperplane of the maximal sequence but on no "
                         "certain jump; the exponent is not determined there")
        else:
            formula, validity = min(f.value, profile.gamma_a), "formula"
    emp = None
    if with_empirical:
        emp = empirical_exponent(a, x0, **(empirical_kwargs or {}))
        if emp.low_confidence:
            notes.append("empirical oscillation hit the partial-sum cap at some scale")
    return ExponentEstimate(x0, formula, upper.value, emp.value if emp else None,
                            (float(R0), float(R)), validity, hp, profile.gamma_a, notes,
                            ftrace, upper.trace, emp, profile, a.config_hash())


def formula_exponents(a: CoefficientFamily, pts: np.ndarray, R0, R) -> np.ndarray:
    """Vectorized formula ``inf log|a_n| / log delta_n(x)`` over ``R0 <= |n| < R``
    at float points; ``+inf`` where the shell is empty."""
    pts = np.asarray(pts, dtype=float).reshape(len(pts), a.d)
    out = np.full(len(pts), np.inf)
    for n, v in a.support(R):
        if not v or abs(float(v)) >= 1 or _below(_sq(n), R0):
            continue
        t = pts @ np.array(n, dtype=float)
        dist = np.abs(t - np.rint(t))
        log_d = np.where(dist <= ZERO_TOL, -np.inf,
                         np.log(np.maximum(dist, ZERO_TOL)) - arith.log_norm(n))
        with np.errstate(divide="ignore"):
            r = np.maximum(0.0, math.log(abs(float(v))) / log_d)
        out = np.minimum(out, r)
    return out


# ---------------------------------------------------------------------------
# regular sets


@dataclass
class KappaReport:
    value: float
    witness: Vector | None
    indeterminate: bool = False
    distance_zero: bool = False
    trace: list = field(default_factory=list)

    def to_json(self):
        return {"value": self.value, "witness": list(self.witness) if self.witness else None,
                "indeterminate": self.indeterminate, "distance_zero": self.distance_zero}


def kappa_estimate(x0, Q: Iterable[Sequence[int]], R0=1, R=2**20) -> KappaReport:
    """``sup log(inf_p |q.x0 - p|) / log|q|`` over ``q`` in ``Q`` with
    ``R0 <= |q| < R`` and ``p`` coprime to ``gcd(q)``."""
    x0 = _point(x0)
    best, witness, zero = -math.inf, None, False
    trace = []
    seen = False
    for q in Q:
        q = arith.as_vector(q)
        sq = _sq(q)
        if sq <= 1 or _below(sq, R0) or not _below(sq, R):
            continue
        seen = True
        gap = _coprime_gap(x0, q)
        if gap <= ZERO_TOL:
            zero = True
            continue
        k = _log(gap) / arith.log_norm(q)
        trace.append((q, k))
        if k > best:
            best, witness = k, q
    if not seen:
        return KappaReport(math.nan, None, indeterminate=True)
    return KappaReport(best, witness, False, zero, trace)


@dataclass
class RegularSetVerdict:
    regular: bool
    worst_point: tuple | None
    worst_kappa: float
    suspect: bool
    finite_set: bool = False
    margin: float = 0.05
    note: str = "verdict is based on finitely many sample points"

    def to_json(self):
        return {"regular": self.regular,
                "worst_point": [float(c) for c in self.worst_point] if self.worst_point else None,
                "worst_kappa": self.worst_kappa, "suspect": self.suspect,
                "finite_set": self.finite_set, "margin": self.margin, "note": self.note}


def is_regular_set(Q: Iterable[Sequence[int]], sample_points, R0=1, R=2**20,
                   margin: float = 0.05) -> RegularSetVerdict:
    Q = [arith.as_vector(q) for q in Q]
    worst, worst_pt = -math.inf, None
    any_shell = False
    for x in sample_points:
        rep = kappa_estimate(x, Q, R0, R)
        if rep.indeterminate:
            continue
        any_shell = True
        if rep.value > worst or worst_pt is None:
            worst, worst_pt = rep.value, _point(x)
    if not any_shell:
        return RegularSetVerdict(True, None, math.nan, False, finite_set=True, margin=margin)
    return RegularSetVerdict(worst < 1 - margin, worst_pt, worst, worst > 0, margin=margin)
