"""Number theory on lattice vectors.

Lattice vectors are plain tuples of Python ints. Divisibility follows the
multivariate convention: ``l`` (a positive integer) and ``n`` (a vector) are
divisors of ``m`` when ``m == l * n``, so the divisor structure of ``m`` is
that of the integer ``gcd_vec(m)``.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
import sympy

from .errors import InvalidInputError

Vector = tuple[int, ...]

SIEVE_BOUND = 10**7

_spf: np.ndarray | None = None
_spf_lock = threading.Lock()


def as_vector(m: Iterable[int], allow_zero: bool = False) -> Vector:
    """Coerce ``m`` to a tuple of ints, rejecting the zero vector by default."""
    if isinstance(m, (int, np.integer)):
        m = (m,)
    try:
        vec = tuple(int(c) for c in m)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"not an integer vector: {m!r}") from exc
    for c, orig in zip(vec, m):
        if c != orig:
            raise InvalidInputError(f"non-integer coordinate in {m!r}")
    if not vec:
        raise InvalidInputError("empty vector")
    if not allow_zero and not any(vec):
        raise InvalidInputError("zero vector is not a frequency")
    return vec


def norm(m: Sequence[int]) -> float:
    return math.sqrt(sum(c * c for c in m))


def log_norm(m: Sequence[int]) -> float:
    """``log|m|`` that stays finite for coordinates far beyond float range."""
    big = max(abs(c) for c in m)
    if big < 2**500:
        return 0.5 * math.log(sum(c * c for c in m))
    scaled = sum(float(Fraction(c, big)) ** 2 for c in m)
    return math.log(big) + 0.5 * math.log(scaled)


def neg(m: Sequence[int]) -> Vector:
    return tuple(-c for c in m)


def is_positive_rep(m: Sequence[int]) -> bool:
    """True when the first nonvanishing coordinate is positive."""
    for c in m:
        if c:
            return c > 0
    return False


def positive_rep(m: Sequence[int]) -> tuple[Vector, int]:
    """Return ``(rep, sign)`` with ``rep`` in the positive half-lattice and
    ``m == sign * rep``."""
    m = tuple(m)
    if is_positive_rep(m):
        return m, 1
    return neg(m), -1


def gcd_vec(m: Iterable[int]) -> int:
    m = as_vector(m)
    return math.gcd(*m)


def is_irreducible(n: Iterable[int]) -> bool:
    return gcd_vec(n) == 1


def _build_spf(limit: int) -> np.ndarray:
    spf = np.zeros(limit + 1, dtype=np.int32 if limit < 2**31 else np.int64)
    spf[1:] = 1
    for p in range(2, math.isqrt(limit) + 1):
        if spf[p] == 1:
            block = spf[p * p :: p]
            block[block == 1] = p
    idx = np.nonzero(spf == 1)[0]
    spf[idx] = idx
    spf[1] = 1
    return spf


def _spf_table(n: int) -> np.ndarray | None:
    """Smallest-prime-factor table covering ``n``, grown on demand."""
    global _spf
    if n > SIEVE_BOUND:
        return None
    table = _spf
    if table is None or len(table) <= n:
        with _spf_lock:
            table = _spf
            if table is None or len(table) <= n:
                size = min(SIEVE_BOUND, max(2 * n, 1 << 16))
                table = _build_spf(size)
                _spf = table
    return table


@lru_cache(maxsize=65536)
def factorize(n: int) -> tuple[tuple[int, int], ...]:
    """Prime factorization of ``n >= 1`` as sorted ``(prime, exponent)`` pairs."""
    if n < 1:
        raise InvalidInputError(f"factorize needs n >= 1, got {n}")
    table = _spf_table(n)
    if table is None:
        return tuple(sorted(sympy.factorint(n).items()))
    out: dict[int, int] = {}
    while n > 1:
        p = int(table[n])
        while n % p == 0:
            n //= p
            out[p] = out.get(p, 0) + 1
    return tuple(sorted(out.items()))


def divisors(n: int) -> list[int]:
    """Sorted positive divisors of ``n >= 1``."""
    divs = [1]
    for p, e in factorize(n):
        divs = [d * p**k for d in divs for k in range(e + 1)]
    return sorted(divs)


def mobius(n: int) -> int:
    if n < 1:
        raise InvalidInputError(f"mobius is defined for n >= 1, got {n}")
    fac = factorize(n)
    if any(e > 1 for _, e in fac):
        return 0
    return -1 if len(fac) % 2 else 1


def mobius_table(n: int) -> np.ndarray:
    """``mu(k)`` for ``0 <= k <= n`` as an int8 array (index 0 holds 0)."""
    mu = np.ones(n + 1, dtype=np.int8)
    mu[0] = 0
    is_comp = np.zeros(n + 1, dtype=bool)
    for p in range(2, n + 1):
        if is_comp[p]:
            continue
        is_comp[2 * p :: p] = True
        mu[p::p] *= -1
        if p * p <= n:
            mu[p * p :: p * p] = 0
    return mu


def mobius_sum_check(n: int) -> int:
    """Sum of ``mu`` over the positive divisors of ``n``."""
    return sum(mobius(d) for d in divisors(n))


def tau_multi(m: Iterable[int]) -> int:
    """Number of decompositions ``m = l*n`` with ``l`` a positive integer."""
    return len(divisors(gcd_vec(m)))


def sigma_power(m: Iterable[int], z: float, variant: str = "vector"):
    """Divisor power sums of a lattice vector.

    ``variant="vector"`` sums ``|n|**z`` over the vector divisors ``n`` of
    ``m``; ``variant="integer"`` sums ``l**z`` over the integer divisors.
    Integer variant with integer ``z >= 0`` is computed exactly.
    """
    m = as_vector(m)
    g = math.gcd(*m)
    divs = divisors(g)
    if variant == "integer":
        if float(z).is_integer() and z >= 0:
            return sum(l ** int(z) for l in divs)
        return math.fsum(float(l) ** z for l in divs)
    if variant != "vector":
        raise InvalidInputError(f"unknown sigma variant {variant!r}")
    sq = sum(c * c for c in m)
    if float(z).is_integer() and z >= 0 and int(z) % 2 == 0:
        # |m/l|**z = (|m|^2 / l^2)**(z/2) is rational; exact when it is integral
        total = sum(Fraction(sq, l * l) ** (int(z) // 2) for l in divs)
        return int(total) if total.denominator == 1 else float(total)
    return math.fsum((math.sqrt(sq) / l) ** z for l in divs)


@dataclass(frozen=True, order=True)
class HyperplaneIndex:
    """Canonical index ``(p, q)`` of the hyperplane ``{x : q.x = p}``."""

    p: int
    q: Vector

    def contains(self, x: Sequence) -> bool:
        return sum(qi * xi for qi, xi in zip(self.q, x)) == self.p

    def to_json(self) -> list:
        return [self.p, list(self.q)]


def canonical_hyperplane(k: int, n: Iterable[int]) -> HyperplaneIndex:
    """Canonical index of ``{x : n.x = k}``: ``q`` in the positive
    half-lattice and ``gcd(p, q) = 1``."""
    n = as_vector(n)
    k = int(k)
    if not is_positive_rep(n):
        n, k = neg(n), -k
    g = math.gcd(k, *n)
    return HyperplaneIndex(k // g, tuple(c // g for c in n))
