"""Coefficient families of Davenport series and their decay descriptors.

Every family is an odd sequence over the nonzero lattice: values are stored on
the positive half-lattice (first nonzero coordinate positive) and extended by
``a(-n) = -a(n)``. One-dimensional families that are classically written
``sum_{n>=1} b_n {n x}`` are mapped to the odd convention ``a_n = b_|n| / 2``,
so both sums agree and ``A_q = 2 sum_l a_{lq}`` equals ``sum_l b_{lq}``.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
import sympy
from scipy.special import zeta

from . import arith
from .arith import Vector
from .errors import InvalidInputError, ResourceLimitError

SUPPORT_CAP = 10**7
SLOW_DECAY_EPS = 0.05
TREND_SCALES = 5
SPARSE_SLOPE = 0.25


def _below(norm_sq: int, R, inclusive: bool = False) -> bool:
    """Exact test of ``sqrt(norm_sq) < R`` (or ``<=``)."""
    R2 = Fraction(R) ** 2
    return norm_sq <= R2 if inclusive else norm_sq < R2


def _above(norm_sq: int, R) -> bool:
    return norm_sq > Fraction(R) ** 2


def _sq(n: Sequence[int]) -> int:
    return sum(c * c for c in n)


class CoefficientFamily:
    """Base class; concrete families define the support and values on
    positive representatives."""

    kind: str = ""
    dense = False

    def __init__(self, d: int):
        if int(d) != d or d < 1:
            raise InvalidInputError(f"dimension must be a positive integer, got {d!r}")
        self.d = int(d)

    # -- values --------------------------------------------------------
    def _rep_value(self, rep: Vector):
        raise NotImplementedError

    def value_at(self, n):
        n = arith.as_vector(n)
        if len(n) != self.d:
            raise InvalidInputError(f"expected a {self.d}-vector, got {n}")
        rep, sign = arith.positive_rep(n)
        v = self._rep_value(rep)
        return v if sign > 0 else -v

    # -- support -------------------------------------------------------
    def _iter_reps(self, R, inclusive: bool):
        """Yield positive representatives of the support with ``|n| < R``
        (``<=`` when inclusive), in nondecreasing norm order."""
        raise NotImplementedError

    def count_reps(self, R, inclusive: bool = False) -> int:
        return sum(1 for _ in self._iter_reps(R, inclusive))

    def support(self, R, inclusive: bool = False, lo=0) -> list[tuple[Vector, object]]:
        """``(rep, value)`` pairs with ``lo < |n| < R`` (``<= R`` if inclusive)."""
        if self.count_reps(R, inclusive) > SUPPORT_CAP:
            raise ResourceLimitError(
                f"support in ball of radius {R} exceeds cap {SUPPORT_CAP}")
        out = []
        for rep in self._iter_reps(R, inclusive):
            if lo and not _above(_sq(rep), lo):
                continue
            out.append((rep, self._rep_value(rep)))
        return out

    def support_arrays(self, R, inclusive: bool = True, lo=0) -> tuple[np.ndarray, np.ndarray]:
        """Support as ``(int64 reps of shape (k, d), float values)``."""
        pairs = self.support(R, inclusive, lo)
        ns = np.array([p[0] for p in pairs], dtype=np.int64).reshape(-1, self.d)
        vals = np.array([float(p[1]) for p in pairs], dtype=float)
        return ns, vals

    # -- envelopes -----------------------------------------------------
    def tail(self, R) -> float:
        """Upper bound on ``sum |a_n|`` over representatives with ``|n| > R``;
        it bounds ``|f - f^R|`` since the sawtooth is at most 1/2 and each
        representative stands for a +/- pair."""
        raise NotImplementedError

    def ray_values(self, q: Vector, L: int) -> np.ndarray:
        """``a_{lq}`` for ``l = 1..L``."""
        return np.array([float(self.value_at(tuple(l * c for c in q)))
                         for l in range(1, L + 1)])

    def ray_tail(self, q: Vector, L: int) -> float:
        """Upper bound on ``sum_{l > L} |a_{lq}|``."""
        return self.tail(L * arith.norm(q))

    def is_zero(self) -> bool:
        return False

    # -- serialization -------------------------------------------------
    def to_json(self) -> dict:
        raise NotImplementedError

    def config_hash(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def __repr__(self):
        return f"{type(self).__name__}({self.to_json()})"

    def __eq__(self, other):
        return type(self) is type(other) and self.to_json() == other.to_json()

    def __hash__(self):
        return hash(self.config_hash())


class FiniteSupport(CoefficientFamily):
    kind = "finite"

    def __init__(self, d: int, entries: Iterable[tuple[Sequence[int], object]] = ()):
        super().__init__(d)
        table: dict[Vector, object] = {}
        seen: set[Vector] = set()
        for n, v in entries:
            n = arith.as_vector(n)
            if len(n) != self.d:
                raise InvalidInputError(f"entry {n} does not have dimension {self.d}")
            if n in seen:
                raise InvalidInputError(f"duplicate frequency {n}")
            seen.add(n)
            rep, sign = arith.positive_rep(n)
            val = v if sign > 0 else -v
            if rep in table:
                # a mirrored entry is accepted only when it agrees with oddness
                if table[rep] != val:
                    raise InvalidInputError(
                        f"entries at {rep} and {arith.neg(rep)} violate oddness")
                continue
            if val != 0:
                table[rep] = val
        self.entries = dict(sorted(table.items(), key=lambda kv: (_sq(kv[0]), kv[0])))

    def _rep_value(self, rep):
        return self.entries.get(rep, 0)

    def _iter_reps(self, R, inclusive):
        for rep in self.entries:
            if _below(_sq(rep), R, inclusive):
                yield rep

    def max_norm(self) -> float:
        return max((arith.norm(n) for n in self.entries), default=0.0)

    def tail(self, R) -> float:
        return float(sum(abs(v) for n, v in self.entries.items() if _above(_sq(n), R)))

    def ray_tail(self, q, L):
        q = arith.as_vector(q)
        total = 0
        for n, v in self.entries.items():
            # does n = t*q for an integer t with |t| > L?
            if any(c and not qc or qc and not c for c, qc in zip(n, q)):
                continue
            ratios = {Fraction(c, qc) for c, qc in zip(n, q) if qc}
            if len(ratios) == 1:
                t = ratios.pop()
                if t.denominator == 1 and abs(t) > L:
                    total += abs(v)
        return float(total)

    def is_zero(self):
        return not self.entries

    def to_json(self):
        return {"d": self.d, "kind": "finite",
                "entries": [[list(n), float(v)] for n, v in self.entries.items()]}


class _OneDimensional(CoefficientFamily):
    def __init__(self):
        super().__init__(1)


class Hecke(_OneDimensional):
    """``sum_{n>=1} {n x} / n**beta``."""

    kind = "hecke"
    dense = True

    def __init__(self, beta: float):
        super().__init__()
        if not beta > 1:
            raise InvalidInputError(f"hecke needs beta > 1 for absolute summability, got {beta}")
        self.beta = float(beta)

    def _b(self, n: int) -> float:
        return float(n) ** -self.beta

    def _rep_value(self, rep):
        return 0.5 * self._b(rep[0])

    def count_reps(self, R, inclusive=False):
        m = math.floor(R)
        if m == R and not inclusive:
            m -= 1
        return max(m, 0)

    def _iter_reps(self, R, inclusive):
        for n in range(1, self.count_reps(R, inclusive) + 1):
            yield (n,)

    def support_arrays(self, R, inclusive=True, lo=0):
        hi = self.count_reps(R, inclusive)
        if hi > SUPPORT_CAP:
            raise ResourceLimitError(f"support in ball of radius {R} exceeds cap {SUPPORT_CAP}")
        start = math.floor(lo) + 1 if lo else 1
        ns = np.arange(start, hi + 1, dtype=np.int64)
        return ns.reshape(-1, 1), self._values(ns)

    def _values(self, ns: np.ndarray) -> np.ndarray:
        return 0.5 * ns.astype(float) ** -self.beta

    def ray_values(self, q, L):
        return self._values(np.arange(1, L + 1, dtype=np.int64) * abs(q[0]))

    def _zeta_tail(self, m: float) -> float:
        """Bound on ``sum_{n > m} n**-beta`` for ``m >= 1``."""
        m = math.floor(m)
        if m < 1:
            return float(zeta(self.beta))
        return m ** (1 - self.beta) / (self.beta - 1)

    def tail(self, R):
        return 0.5 * self._zeta_tail(R)

    def ray_tail(self, q, L):
        return 0.5 * abs(q[0]) ** -self.beta * self._zeta_tail(L)

    def to_json(self):
        return {"d": 1, "kind": "hecke", "beta": self.beta}


class FBeta(Hecke):
    """Hecke function with the jump at the integers removed:
    ``-zeta(beta) {x} + sum_{n>=1} {n x} / n**beta``."""

    kind = "f_beta"

    def __init__(self, beta: float):
        super().__init__(beta)
        self.first = 1.0 - float(zeta(self.beta))

    def _rep_value(self, rep):
        if rep[0] == 1:
            return 0.5 * self.first
        return 0.5 * self._b(rep[0])

    def _values(self, ns):
        vals = 0.5 * ns.astype(float) ** -self.beta
        vals[ns == 1] = 0.5 * self.first
        return vals

    def to_json(self):
        return {"d": 1, "kind": "f_beta", "beta": self.beta}


class LAdic(_OneDimensional):
    """``sum_{k>=1} {l**k x} / k**alpha`` for a prime ``l``."""

    kind = "l_adic"

    def __init__(self, l: int, alpha: float):
        super().__init__()
        if int(l) != l or not sympy.isprime(int(l)):
            raise InvalidInputError(f"l_adic needs a prime base, got {l}")
        if not alpha > 1:
            raise InvalidInputError(f"l_adic needs alpha > 1 for absolute summability, got {alpha}")
        self.l = int(l)
        self.alpha = float(alpha)

    def _level(self, n: int) -> int | None:
        k = 0
        while n % self.l == 0:
            n //= self.l
            k += 1
        return k if n == 1 and k >= 1 else None

    def _rep_value(self, rep):
        k = self._level(rep[0])
        return 0.0 if k is None else 0.5 * k ** -self.alpha

    def _iter_reps(self, R, inclusive):
        n = self.l
        while _below(n * n, R, inclusive):
            yield (n,)
            n *= self.l

    def tail(self, R):
        k0, n = 1, self.l
        while not _above(n * n, R):
            k0 += 1
            n *= self.l
        return 0.5 * (k0 ** -self.alpha + k0 ** (1 - self.alpha) / (self.alpha - 1))

    def to_json(self):
        return {"d": 1, "kind": "l_adic", "l": self.l, "alpha": self.alpha}


class PowerLacunary(CoefficientFamily):
    """Coefficients ``1/2 |n|**-gamma`` at ``n = base**k * direction``, ``k >= 0``."""

    kind = "power_lacunary"

    def __init__(self, base: int, direction: Sequence[int], gamma: float):
        direction = arith.as_vector(direction)
        super().__init__(len(direction))
        if int(base) != base or base < 2:
            raise InvalidInputError(f"base must be an integer >= 2, got {base}")
        if not gamma > 0:
            raise InvalidInputError(f"power_lacunary needs gamma > 0, got {gamma}")
        self.base = int(base)
        self.direction = direction
        self.gamma = float(gamma)
        self._rep_dir, self._dir_sign = arith.positive_rep(direction)

    def _level(self, rep: Vector) -> int | None:
        i = next(i for i, c in enumerate(self._rep_dir) if c)
        t, r = divmod(rep[i], self._rep_dir[i])
        if r or t <= 0 or tuple(t * c for c in self._rep_dir) != rep:
            return None
        k = 0
        while t % self.base == 0:
            t //= self.base
            k += 1
        return k if t == 1 else None

    def _magnitude(self, rep: Vector) -> float:
        return 0.5 * math.exp(-self.gamma * arith.log_norm(rep))

    def _rep_value(self, rep):
        if self._level(rep) is None:
            return 0.0
        return self._dir_sign * self._magnitude(rep)

    def _iter_reps(self, R, inclusive):
        t = 1
        while True:
            rep = tuple(t * c for c in self._rep_dir)
            if not _below(_sq(rep), R, inclusive):
                return
            yield rep
            t *= self.base

    def tail(self, R):
        t = 1
        while True:
            rep = tuple(t * c for c in self._rep_dir)
            if _above(_sq(rep), R):
                return self._magnitude(rep) / (1 - self.base ** -self.gamma)
            t *= self.base

    def to_json(self):
        return {"d": self.d, "kind": "power_lacunary", "base": self.base,
                "direction": list(self.direction), "gamma": self.gamma}


def zero_family(d: int) -> FiniteSupport:
    return FiniteSupport(d, [])


def family_from_json(obj: dict) -> CoefficientFamily:
    """Build a family from its JSON description."""
    if not isinstance(obj, dict) or "kind" not in obj:
        raise InvalidInputError(f"family config must be an object with a 'kind': {obj!r}")
    kind = obj["kind"]
    d = obj.get("d", 1)
    try:
        if kind in ("finite", "finite_support"):
            return FiniteSupport(d, [(n, v) for n, v in obj.get("entries", [])])
        if kind in ("hecke", "l_adic", "f_beta") and d != 1:
            raise InvalidInputError(f"{kind} families are one-dimensional, got d={d}")
        if kind == "hecke":
            return Hecke(obj["beta"])
        if kind == "f_beta":
            return FBeta(obj["beta"])
        if kind == "l_adic":
            return LAdic(obj["l"], obj["alpha"])
        if kind == "power_lacunary":
            fam = PowerLacunary(obj.get("base", 2), obj["direction"], obj["gamma"])
            if fam.d != d:
                raise InvalidInputError(f"direction has dimension {fam.d}, config says d={d}")
            return fam
    except KeyError as exc:
        raise InvalidInputError(f"{kind} family is missing field {exc}") from exc
    except TypeError as exc:
        raise InvalidInputError(f"malformed {kind} family: {exc}") from exc
    raise InvalidInputError(f"unknown family kind {kind!r}")


# ---------------------------------------------------------------------------
# operations


def value_at(a: CoefficientFamily, n):
    return a.value_at(n)


def support_in_ball(a: CoefficientFamily, R) -> set[Vector]:
    """Positive representatives of the support inside the open ball ``B(0, R)``;
    each stands for itself and its negative."""
    if not R > 0:
        raise InvalidInputError(f"radius must be positive, got {R}")
    return {rep for rep, _ in a.support(R)}


def f_gamma_norm(a: CoefficientFamily, gamma: float, R) -> float:
    """``sup |n|**gamma |a_n|`` over the support in ``B(0, R)``."""
    best = 0.0
    for rep, v in a.support(R):
        if not v:
            continue
        ln = arith.log_norm(rep)
        if ln < 700:
            w = abs(float(v)) * arith.norm(rep) ** gamma
        else:
            w = math.exp(gamma * ln + math.log(abs(float(v))))
        best = max(best, w)
    return best


def _decay_ratio(rep: Vector, v) -> float:
    """``-log|a_n| / log|n|``; callers exclude ``|n| <= 1``."""
    return -math.log(abs(float(v))) / arith.log_norm(rep)


@dataclass
class GammaEstimate:
    """Truncated decay exponent over the shell ``R0 <= |n| < R``.

    ``value`` is the shell infimum. ``extrapolated`` fits the per-dyadic-shell
    infima against ``1/log R`` (exact for ``C |n|**-gamma`` envelopes, whose
    ratio is ``gamma - log C / log |n|``) and reports the intercept.
    """

    value: float
    extrapolated: float
    R0: float
    R: float
    empty: bool = False
    witness: Vector | None = None
    trend: list = field(default_factory=list)

    def to_json(self):
        return {"value": self.value, "extrapolated": self.extrapolated, "R0": self.R0,
                "R": self.R, "empty": self.empty,
                "witness": list(self.witness) if self.witness else None,
                "trend": [[r, v] for r, v in self.trend]}


def _dyadic_extrapolate(trend: list[tuple[float, float]], window: int = TREND_SCALES) -> float | None:
    pts = [(r, v) for r, v in trend if r > 1 and math.isfinite(v)][-window:]
    if len(pts) < 2:
        return None
    x = np.array([1.0 / math.log(r) for r, _ in pts])
    y = np.array([v for _, v in pts])
    if np.ptp(x) == 0:
        return None
    slope, intercept = np.polyfit(x, y, 1)
    return float(intercept)


def gamma_a_estimate(a: CoefficientFamily, R0, R) -> GammaEstimate:
    if not (1 <= R0 < R):
        raise InvalidInputError(f"need 1 <= R0 < R, got R0={R0}, R={R}")
    best, witness = math.inf, None
    shells: dict[int, float] = {}
    for rep, v in a.support(R):
        sq = _sq(rep)
        if sq <= 1 or not v or _below(sq, R0):
            continue
        r = _decay_ratio(rep, v)
        if r < best:
            best, witness = r, rep
        j = max(1, math.floor(arith.log_norm(rep) / math.log(2)) + 1)
        shells[j] = min(shells.get(j, math.inf), r)
    if witness is None:
        return GammaEstimate(math.inf, math.inf, R0, R, empty=True)
    trend = [(min(2.0**j, float(R)), v) for j, v in sorted(shells.items())]
    ext = _dyadic_extrapolate(trend)
    ext = best if ext is None else max(0.0, ext)
    return GammaEstimate(best, ext, R0, R, witness=witness, trend=trend)


@dataclass
class SparsityReport:
    value: float
    R: float
    sparse: bool
    growth_slope: float
    trend: list
    empty: bool = False
    note: str = ("sparsity is judged from the growth of the support count over "
                 "the last dyadic scales; finitely many scales cannot certify the limit")

    def to_json(self):
        return {"value": self.value, "R": self.R, "sparse": self.sparse,
                "growth_slope": self.growth_slope, "empty": self.empty,
                "trend": [[r, v] for r, v in self.trend], "note": self.note}


def sparsity_exponent(a: CoefficientFamily, R, scales: int = TREND_SCALES) -> SparsityReport:
    """``log #(supp a in B(0,R)) / log R`` counting both members of each
    +/- pair, plus the trend over ``scales`` dyadic radii ending at ``R``."""
    if not R >= 2:
        raise InvalidInputError(f"sparsity needs R >= 2, got {R}")
    radii = [R / 2**i for i in range(scales - 1, -1, -1)]
    radii = [r for r in radii if r >= 2]
    counts = [2 * a.count_reps(r) for r in radii]
    if counts[-1] == 0:
        return SparsityReport(0.0, R, True, 0.0, [(r, 0.0) for r in radii], empty=True)
    values = [math.log(c) / math.log(r) if c else 0.0 for r, c in zip(radii, counts)]
    pos = [(math.log(r), math.log(c)) for r, c in zip(radii, counts) if c]
    if len(pos) >= 2:
        xs, ys = zip(*pos)
        slope = float(np.polyfit(xs, ys, 1)[0])
    else:
        slope = 0.0
    nonincreasing = all(v2 <= v1 + 1e-12 for v1, v2 in zip(values, values[1:]))
    sparse = slope < SPARSE_SLOPE and nonincreasing
    return SparsityReport(values[-1], R, sparse, slope, list(zip(radii, values)))


@dataclass
class SlowDecayReport:
    slow: bool | None
    value: float
    witness: Vector | None
    R: float
    threshold: float
    indeterminate: bool = False
    trend: list = field(default_factory=list)

    def to_json(self):
        return {"slow": self.slow, "value": self.value,
                "witness": list(self.witness) if self.witness else None,
                "R": self.R, "threshold": self.threshold,
                "indeterminate": self.indeterminate,
                "trend": [[r, v] for r, v in self.trend]}


def slow_decay_test(a: CoefficientFamily, Q: Iterable[Sequence[int]], R,
                    eps: float = SLOW_DECAY_EPS) -> SlowDecayReport:
    """Is ``inf (-log|a_q|)/log|q|`` over ``q in Q``, ``sqrt(R) <= |q| < R``,
    below ``eps``? The witness attains the infimum."""
    if not R >= 2:
        raise InvalidInputError(f"slow decay test needs R >= 2, got {R}")
    lo = math.sqrt(R) if R < 2**1000 else Fraction(R) ** 0.5
    best, witness = math.inf, None
    shells: dict[int, float] = {}
    for q in Q:
        q = arith.as_vector(q)
        sq = _sq(q)
        if sq <= 1 or _below(sq, lo) or not _below(sq, R):
            continue
        v = a.value_at(q)
        if not v:
            continue
        r = _decay_ratio(q, v)
        j = math.floor(arith.log_norm(q) / math.log(2)) + 1
        shells[j] = min(shells.get(j, math.inf), r)
        if r < best:
            best, witness = r, q
    if witness is None:
        return SlowDecayReport(None, math.inf, None, R, eps, indeterminate=True)
    trend = [(2.0**j, v) for j, v in sorted(shells.items())]
    return SlowDecayReport(best < eps, best, witness, R, eps, trend=trend)


@dataclass
class RegularityProfile:
    """Scalar regularity descriptors of a family at one truncation."""

    gamma_a: float
    theta_a: float
    sparsity_exponent: float
    sparse: bool
    slow_decay: bool
    truncation_radius: float
    gamma_extrapolated: float = math.nan
    L_max: int = 0

    def __post_init__(self):
        if self.slow_decay:
            self.gamma_a = 0.0

    def to_json(self):
        return {"gamma_a": self.gamma_a, "gamma_extrapolated": self.gamma_extrapolated,
                "theta_a": self.theta_a, "sparsity_exponent": self.sparsity_exponent,
                "sparse": self.sparse, "slow_decay": self.slow_decay,
                "truncation_radius": self.truncation_radius, "L_max": self.L_max}
