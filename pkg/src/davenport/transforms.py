"""Coefficient calculus: jumps, maximal sequences, Mobius inversion,
subsampling along rays and the Davenport/Fourier dictionary."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import arith
from .arith import Vector
from .coeffs import CoefficientFamily, _below, _sq
from .errors import InvalidInputError, ResourceLimitError

DENSE_WORK_CAP = 5 * 10**8


@dataclass
class LatticeMap:
    """Truncated odd or even map on the nonzero lattice.

    Only positive representatives are stored; ``get`` applies the parity.
    ``tail_bound`` bounds the truncation error of every stored entry and
    ``tails`` refines it per entry where known.
    """

    d: int
    entries: dict = field(default_factory=dict)
    parity: str = "odd"
    truncation_radius: float = math.inf
    tail_bound: float = 0.0
    tails: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.parity not in ("odd", "even"):
            raise InvalidInputError(f"parity must be 'odd' or 'even', got {self.parity!r}")

    def get(self, q):
        q = arith.as_vector(q)
        rep, sign = arith.positive_rep(q)
        v = self.entries.get(rep, 0)
        return -v if sign < 0 and self.parity == "odd" else v

    def entry_tail(self, q) -> float:
        rep, _ = arith.positive_rep(arith.as_vector(q))
        return self.tails.get(rep, self.tail_bound)

    def is_uncertain(self, q) -> bool:
        """True when the entry could be zero given its truncation error."""
        return abs(float(self.get(q))) <= self.entry_tail(q)

    def items(self):
        return self.entries.items()

    def __len__(self):
        return len(self.entries)

    def to_json(self) -> dict:
        R = self.truncation_radius
        return {"d": self.d, "parity": self.parity,
                "R": R if math.isfinite(R) else None,
                "tail": self.tail_bound,
                "entries": [[list(q), float(v)] for q, v in self.entries.items()],
                "uncertain": [list(q) for q in self.entries if self.is_uncertain(q)]}

    @classmethod
    def from_json(cls, obj: dict) -> "LatticeMap":
        try:
            d = int(obj["d"])
            entries = {}
            for q, v in obj["entries"]:
                rep, sign = arith.positive_rep(arith.as_vector(q))
                entries[rep] = -v if sign < 0 and obj.get("parity", "odd") == "odd" else v
            R = obj.get("R")
            return cls(d, _sorted(entries), obj.get("parity", "odd"),
                       math.inf if R is None else float(R), float(obj.get("tail", 0.0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed lattice map: {exc}") from exc


def _sorted(entries: dict) -> dict:
    return dict(sorted(entries.items(), key=lambda kv: (_sq(kv[0]), kv[0])))


def _check_L(L_max) -> int:
    if int(L_max) != L_max or L_max < 1:
        raise InvalidInputError(f"L_max must be a positive integer, got {L_max}")
    return int(L_max)


def _dense_qs(Q_radius) -> range:
    m = math.ceil(Q_radius) - 1
    return range(1, max(m, 0) + 1)


def _scatter(a: CoefficientFamily, Q_radius, L: int):
    """Yield ``(q, l, a_{lq})`` for support points ``lq`` with ``l <= L`` and
    ``|q| < Q_radius``."""
    for n, v in a.support(L * Q_radius):
        g = math.gcd(*n)
        for l in arith.divisors(g):
            if l > L:
                break
            q = tuple(c // l for c in n)
            if _below(_sq(q), Q_radius):
                yield q, l, v


def _ray_map(a: CoefficientFamily, Q_radius, L_max: int, reduce: str) -> LatticeMap:
    L = _check_L(L_max)
    if not Q_radius > 1:
        raise InvalidInputError(f"Q_radius must exceed 1, got {Q_radius}")
    entries: dict = {}
    tails: dict = {}
    parity = "odd" if reduce == "sum" else "even"
    if a.dense:
        qs = _dense_qs(Q_radius)
        if len(qs) * L > DENSE_WORK_CAP:
            raise ResourceLimitError(
                f"{len(qs)} rays of length {L} exceed the work cap {DENSE_WORK_CAP}")
        for q in qs:
            vals = a.ray_values((q,), L)
            v = 2.0 * math.fsum(vals) if reduce == "sum" else float(np.max(np.abs(vals)))
            if v:
                entries[(q,)] = v
                tails[(q,)] = (2.0 if reduce == "sum" else 1.0) * a.ray_tail((q,), L)
    else:
        for q, _, v in _scatter(a, Q_radius, L):
            if reduce == "sum":
                entries[q] = entries.get(q, 0) + 2 * v
            else:
                entries[q] = max(entries.get(q, 0), abs(v))
        entries = {q: v for q, v in entries.items() if v}
        for q in entries:
            t = a.ray_tail(q, L)
            tails[q] = 2 * t if reduce == "sum" else t
    tail = max(tails.values(), default=0.0)
    if a.dense:
        tail = (2.0 if reduce == "sum" else 1.0) * a.ray_tail((1,), L)
    return LatticeMap(a.d, _sorted(entries), parity, float(Q_radius), float(tail),
                      {q: float(t) for q, t in tails.items()})


def jump_operator(a: CoefficientFamily, Q_radius, L_max: int) -> LatticeMap:
    """``A_q = 2 sum_{l=1}^{L_max} a_{lq}`` for ``|q| < Q_radius``.

    Exact (rational in, rational out) for finite families with Fraction values.
    """
    return _ray_map(a, Q_radius, L_max, "sum")


def maximal_operator(a: CoefficientFamily, Q_radius, L_max: int) -> LatticeMap:
    """Even map ``abar_q = max_{l <= L_max} |a_{lq}|``."""
    return _ray_map(a, Q_radius, L_max, "max")


def invert_jump(A: LatticeMap, n, L_max: int):
    """Recover ``a_n = 1/2 sum_l mu(l) A_{ln}`` from a jump map."""
    if A.parity != "odd":
        raise InvalidInputError("jump inversion needs an odd map")
    n = arith.as_vector(n)
    L = _check_L(L_max)
    total = 0
    for l in range(1, L + 1):
        ln = tuple(l * c for c in n)
        if math.isfinite(A.truncation_radius) and not _below(_sq(ln), A.truncation_radius):
            break
        mu = arith.mobius(l)
        if mu:
            v = A.get(ln)
            if v:
                total += mu * v
    return total / 2


def subsample(a: CoefficientFamily, m, L_max: int) -> list:
    """``(a_{lm})`` for ``l = 1..L_max`` along an irreducible positive ray."""
    m = arith.as_vector(m)
    if not arith.is_positive_rep(m) or not arith.is_irreducible(m):
        raise InvalidInputError(f"subsampling step must be irreducible and sign-normalized, got {m}")
    L = _check_L(L_max)
    return [a.value_at(tuple(l * c for c in m)) for l in range(1, L + 1)]


def davenport_to_fourier(a: CoefficientFamily, m, trunc: int | None = None) -> float:
    """Sine coefficient ``c_m`` of the series, ``f = sum c_m sin(2 pi m.x)``
    summed over all ``m``; the ``(-l, -n)`` divisor pairs are folded in."""
    m = arith.as_vector(m)
    if len(m) != a.d:
        raise InvalidInputError(f"expected a {a.d}-vector, got {m}")
    total = 0.0
    for l in arith.divisors(math.gcd(*m)):
        if trunc is not None and l > trunc:
            break
        v = a.value_at(tuple(c // l for c in m))
        if v:
            total += float(v) / l
    return -total / math.pi


def fourier_map(a: CoefficientFamily, M, trunc: int | None = None) -> LatticeMap:
    """All ``c_m`` with ``|m| <= M``."""
    if not M >= 1:
        raise InvalidInputError(f"Fourier radius must be at least 1, got {M}")
    entries: dict = {}
    if a.dense:
        ms = range(1, math.floor(M) + 1)
        if len(ms) > 10**7:
            raise ResourceLimitError(f"Fourier radius {M} too large")
        for k in ms:
            c = davenport_to_fourier(a, (k,), trunc)
            if c:
                entries[(k,)] = c
    else:
        for n, v in a.support(M, inclusive=True):
            v = float(v)
            l = 1
            while True:
                if trunc is not None and l > trunc:
                    break
                ln = tuple(l * c for c in n)
                if not _below(_sq(ln), M, inclusive=True):
                    break
                entries[ln] = entries.get(ln, 0.0) - v / (math.pi * l)
                l += 1
        entries = {q: c for q, c in entries.items() if c}
    return LatticeMap(a.d, _sorted(entries), "odd", float(M) * (1 + 1e-12), 0.0)


def fourier_to_davenport(c: LatticeMap, n, L_max: int | None = None) -> float:
    """``a_n = -pi sum_{l | gcd(n)} mu(l)/l * c_{n/l}``."""
    if c.parity != "odd":
        raise InvalidInputError("Fourier coefficients of a Davenport series form an odd map")
    n = arith.as_vector(n)
    total = 0.0
    for l in arith.divisors(math.gcd(*n)):
        if L_max is not None and l > L_max:
            break
        mu = arith.mobius(l)
        if mu:
            total += mu * float(c.get(tuple(x // l for x in n))) / l
    return -math.pi * total


@dataclass
class ThetaReport:
    value: float
    canceling: bool
    indeterminate: bool
    Q_radius: float
    inner: float
    L_max: int
    table: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"value": self.value, "canceling": self.canceling,
                "flag": "jump-canceling" if self.canceling else "non-canceling",
                "indeterminate": self.indeterminate, "Q_radius": self.Q_radius,
                "inner": self.inner, "L_max": self.L_max,
                "table": [{"q": list(q), "A": float(A), "abar": float(m), "ratio": r}
                          for q, A, m, r in self.table]}


def theta_a_estimate(a: CoefficientFamily, Q_radius, L_max: int,
                     inner=None, A: LatticeMap | None = None,
                     abar: LatticeMap | None = None) -> ThetaReport:
    """``sup log|A_q| / log abar_q`` over ``inner <= |q| < Q_radius``
    (``inner`` defaults to ``sqrt(Q_radius)``), skipping uncertain jumps."""
    if inner is None:
        inner = math.sqrt(Q_radius)
    A = A if A is not None else jump_operator(a, Q_radius, L_max)
    abar = abar if abar is not None else maximal_operator(a, Q_radius, L_max)
    best = -math.inf
    table = []
    for q, m in abar.items():
        if not m or _below(_sq(q), inner) or float(m) >= 1:
            continue
        Aq = A.get(q)
        if Aq and A.is_uncertain(q):
            continue
        if not Aq and A.entry_tail(q) > 0:
            continue
        ratio = math.inf if not Aq else math.log(abs(float(Aq))) / math.log(float(m))
        table.append((q, Aq, m, ratio))
        best = max(best, ratio)
    if not table:
        return ThetaReport(math.nan, False, True, float(Q_radius), float(inner), int(L_max))
    return ThetaReport(best, best > 1, False, float(Q_radius), float(inner), int(L_max), table)
