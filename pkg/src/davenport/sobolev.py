"""Global regularity: Fourier-coefficient bounds, divisor-sum growth regimes,
truncated Sobolev norms and the convergence-space classifier."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import sympy

from . import arith
from .coeffs import CoefficientFamily, f_gamma_norm
from .errors import InvalidInputError
from .transforms import LatticeMap, fourier_map

BOUND_SLACK = 1e-9
MIN_DECADES = 3.0


def _fmt(s: float) -> str:
    if float(s).is_integer():
        return str(int(s))
    return f"{s:.10g}"


@dataclass(frozen=True)
class SobolevLabel:
    """``H^s`` with one modifier: ``plain``, ``delta_plus`` (``H^s_{delta,+}``)
    or ``minus`` (``H^{s,-}``)."""

    s: float
    modifier: str = "plain"
    delta: float | None = None

    def __post_init__(self):
        if not math.isfinite(self.s):
            raise InvalidInputError(f"Sobolev index must be finite, got {self.s}")
        if self.modifier not in ("plain", "delta_plus", "minus"):
            raise InvalidInputError(f"unknown modifier {self.modifier!r}")
        if (self.modifier == "delta_plus") != (self.delta is not None):
            raise InvalidInputError("delta is required exactly for the delta_plus modifier")

    def __str__(self) -> str:
        if self.modifier == "minus":
            return f"H^{{{_fmt(self.s)},-}}"
        if self.modifier == "delta_plus":
            return f"H^{{{_fmt(self.s)}}}_{{{_fmt(self.delta)},+}}"
        return f"H^{{{_fmt(self.s)}}}"

    def to_json(self) -> dict:
        return {"s": self.s, "modifier": self.modifier, "delta": self.delta, "label": str(self)}


def classify_sobolev(gamma: float, d: int) -> SobolevLabel:
    """Space in which the partial sums converge for coefficients in ``F^gamma``."""
    if int(d) != d or d < 1:
        raise InvalidInputError(f"dimension must be a positive integer, got {d}")
    if d == 1:
        raise InvalidInputError("the classifier covers d >= 2 only")
    if math.isnan(gamma):
        raise InvalidInputError("gamma is NaN")
    if gamma <= 0:
        return SobolevLabel(gamma - d / 2, "delta_plus", 1.0)
    if gamma <= 1:
        return SobolevLabel(gamma - d / 2, "minus")
    if gamma <= 2:
        return SobolevLabel((1 + gamma - d) / 2, "minus")
    if gamma < d:
        return SobolevLabel((1 + gamma - d) / 2, "delta_plus", 1.0)
    if gamma == d:
        return SobolevLabel(0.5, "delta_plus", 2.0)
    return SobolevLabel(0.5, "delta_plus", 1.0)


# ---------------------------------------------------------------------------
# truncated norms


def _weights(c: LatticeMap, s: float, delta: float, M) -> tuple[np.ndarray, np.ndarray]:
    """Norms ``|m|`` and summands for the stored ``m`` with ``|m| <= M``."""
    if c.parity != "odd":
        raise InvalidInputError("Fourier coefficients of an odd distribution form an odd map")
    if M > c.truncation_radius:
        raise InvalidInputError(f"M = {M} exceeds the map's truncation radius {c.truncation_radius}")
    norms, terms = [], []
    for m, v in c.items():
        r = arith.norm(m)
        if r > M:
            continue
        norms.append(r)
        # each positive representative stands for m and -m
        terms.append(2.0 * float(v) ** 2 * r ** (2 * s) / (1 + math.log(r)) ** delta)
    order = np.argsort(norms, kind="stable")
    return np.asarray(norms)[order], np.asarray(terms)[order]


def sobolev_norm_estimate(c: LatticeMap, s: float, delta: float, M) -> float:
    """Squared ``H^s_delta`` norm truncated to ``|m| <= M``."""
    _, terms = _weights(c, s, delta, M)
    return math.fsum(terms)


@dataclass
class DivergenceReport:
    M: float
    partial_sums: list
    radii: list
    ratio: float
    threshold: float
    divergent: bool

    def to_json(self) -> dict:
        return {"M": self.M, "radii": self.radii, "partial_sums": self.partial_sums,
                "ratio": self.ratio, "threshold": self.threshold, "divergent": self.divergent}


def divergence_test(c: LatticeMap, s: float, delta: float, M, levels: int = 6) -> DivergenceReport:
    """Doubling test: the sum diverges when ``S(M) / S(M/2)`` exceeds
    ``1 + 1/(2 log M)``."""
    if not M > 2:
        raise InvalidInputError(f"M must exceed 2, got {M}")
    norms, terms = _weights(c, s, delta, M)
    csum = np.cumsum(terms)
    radii = [M / 2**k for k in range(levels - 1, -1, -1) if M / 2**k >= 1]
    sums = [float(csum[np.searchsorted(norms, r, side="right") - 1])
            if np.searchsorted(norms, r, side="right") else 0.0 for r in radii]
    ratio = sums[-1] / sums[-2] if sums[-2] > 0 else (math.inf if sums[-1] > 0 else 1.0)
    threshold = 1 + 1 / (2 * math.log(M))
    return DivergenceReport(float(M), sums, [float(r) for r in radii], float(ratio),
                            threshold, bool(ratio > threshold))


# ---------------------------------------------------------------------------
# coefficient bound


@dataclass
class FourierBoundReport:
    gamma: float
    M: float
    norm: float
    max_ratio: float
    argmax: tuple | None
    checked: int
    holds: bool
    ratios: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"gamma": self.gamma, "M": self.M, "F_gamma_norm": self.norm,
                "max_ratio": self.max_ratio,
                "argmax": list(self.argmax) if self.argmax else None,
                "checked": self.checked, "holds": self.holds,
                "ratios": [[list(m), r] for m, r in self.ratios]}


def fourier_bound_check(a: CoefficientFamily, gamma: float, M) -> FourierBoundReport:
    """Check ``|c_m| <= |a|_{F^gamma} sigma_{1-gamma}(m) / (pi |m|)`` for ``|m| <= M``.

    Only ``a_n`` with ``|n| <= M`` enter ``c_m`` there, so the check is exact
    up to rounding. Zero coefficients satisfy the bound trivially and are skipped.
    """
    c = fourier_map(a, M)
    norm = f_gamma_norm(a, gamma, M * (1 + 1e-12)) if len(c) else 0.0
    best, arg, ratios = 0.0, None, []
    for m, v in c.items():
        bound = norm * float(arith.sigma_power(m, 1 - gamma)) / (math.pi * arith.norm(m))
        r = abs(float(v)) / bound if bound > 0 else math.inf
        ratios.append((m, r))
        if r > best:
            best, arg = r, m
    return FourierBoundReport(float(gamma), float(M), float(norm), float(best), arg, len(ratios),
                              bool(best <= 1 + BOUND_SLACK), ratios)


# ---------------------------------------------------------------------------
# divisor-sum growth


REGIMES = ("O(1)", "O(|m|^eps)", "O(|m|^(z+eps))", "O(|m|^z)")


def regime_of(z: float) -> tuple[str, float]:
    """Growth regime of ``sigma_z`` and the exponent it allows (before ``eps``)."""
    if z < -1:
        return REGIMES[0], 0.0
    if z < 0:
        return REGIMES[1], 0.0
    if z <= 1:
        return REGIMES[2], float(z)
    return REGIMES[3], float(z)


def highly_composite(limit: int) -> list[int]:
    """Integers ``<= limit`` with more divisors than every smaller integer."""
    primes = list(sympy.primerange(2, 60))
    cands = []

    def walk(i: int, n: int, cap: int, tau: int):
        cands.append((n, tau))
        if i == len(primes):
            return
        p, e = primes[i], 0
        while e < cap and n * p <= limit:
            n *= p
            e += 1
            walk(i + 1, n, e, tau * (e + 1))

    walk(0, 1, 64, 1)
    out, best = [], 0
    for n, tau in sorted(cands):
        if tau > best:
            out.append(n)
            best = tau
    return out


@dataclass
class SigmaRegimeReport:
    z: float
    regime: str
    regime_exponent: float
    fitted_exponent: float
    decades: float
    insufficient_range: bool
    samples: int

    def to_json(self) -> dict:
        return {"z": self.z, "regime": self.regime, "regime_exponent": self.regime_exponent,
                "fitted_exponent": self.fitted_exponent, "decades": self.decades,
                "insufficient_range": self.insufficient_range, "samples": self.samples}


def sigma_regime(z: float, m_samples: Iterable[Sequence[int]] | None = None,
                 d: int = 2) -> SigmaRegimeReport:
    """Least-squares slope of ``log sigma_z(m)`` against ``log |m|``.

    The default samples are ``g e_1`` for the highly composite ``g <= 10^6``,
    the subsequence on which divisor sums grow fastest.
    """
    if m_samples is None:
        m_samples = [(g,) + (0,) * (d - 1) for g in highly_composite(10**6)]
    ms = [arith.as_vector(m) for m in m_samples]
    if len(ms) < 2:
        raise InvalidInputError("need at least two samples")
    x = np.array([arith.log_norm(m) for m in ms])
    y = np.array([math.log(float(arith.sigma_power(m, z))) for m in ms])
    decades = float((x.max() - x.min()) / math.log(10))
    slope = float(np.polyfit(x, y, 1)[0]) if decades > 0 else math.nan
    tag, expo = regime_of(z)
    return SigmaRegimeReport(float(z), tag, expo, slope, decades, decades < MIN_DECADES, len(ms))
