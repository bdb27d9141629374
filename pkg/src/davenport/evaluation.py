"""Partial sums, grid evaluation and sampled oscillations of Davenport series."""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.stats import qmc

from .coeffs import CoefficientFamily
from .errors import InvalidInputError, ResourceLimitError

GRID_CAP = 10**8
POINT_CHUNK = 512
TERM_CHUNK = 4096
N_START = 2**10
N_CAP = 2**24
TAIL_FRACTION = 0.01


def sawtooth(t):
    """Centered sawtooth: ``t - floor(t) - 1/2`` off the integers, 0 on them."""
    arr = np.asarray(t, dtype=float)
    fl = np.floor(arr)
    out = arr - fl - 0.5
    out = np.where(arr == fl, 0.0, out)
    if np.ndim(t) == 0:
        return float(out)
    return out


def _sawtooth_inplace(t: np.ndarray) -> None:
    fl = np.floor(t)
    np.subtract(t, fl, out=t)
    on_int = t == 0.0
    t -= 0.5
    t[on_int] = 0.0


def _as_points(x, d: int) -> np.ndarray:
    pts = np.asarray(x, dtype=float)
    if d == 1 and pts.ndim <= 1:
        return pts.reshape(-1, 1)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    if pts.ndim != 2 or pts.shape[1] != d:
        raise InvalidInputError(f"points must have {d} coordinates, got shape {pts.shape}")
    return pts


def _terms(a: CoefficientFamily, N, lo=0) -> tuple[np.ndarray, np.ndarray]:
    """Representatives with ``lo < |n| <= N`` and their doubled coefficients."""
    ns, vals = a.support_arrays(N, inclusive=True, lo=lo)
    return ns, 2.0 * vals


def _accumulate(pts: np.ndarray, ns: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``sum_j w_j {n_j . x}`` at every point.

    The dot products are formed coordinate by coordinate and reduced in
    fixed term chunks, so a point's value does not depend on which other
    points share its batch.
    """
    out = np.zeros(len(pts))
    if len(ns) == 0:
        return out
    nsf = ns.astype(float)
    for s in range(0, len(ns), TERM_CHUNK):
        block = nsf[s : s + TERM_CHUNK]
        wb = w[s : s + TERM_CHUNK]
        for p in range(0, len(pts), POINT_CHUNK):
            x = pts[p : p + POINT_CHUNK]
            t = x[:, 0:1] * block[None, :, 0]
            for j in range(1, x.shape[1]):
                t = t + x[:, j : j + 1] * block[None, :, j]
            _sawtooth_inplace(t)
            t *= wb[None, :]
            out[p : p + POINT_CHUNK] += np.sum(t, axis=1)
    return out


def _evaluate(a: CoefficientFamily, N, pts: np.ndarray, threads: int | None = None) -> np.ndarray:
    ns, w = _terms(a, N)
    if threads is None or threads <= 1 or len(pts) <= POINT_CHUNK:
        return _accumulate(pts, ns, w)
    chunks = [pts[i : i + POINT_CHUNK] for i in range(0, len(pts), POINT_CHUNK)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda c: _accumulate(c, ns, w), chunks))
    return np.concatenate(parts)


def partial_sum(a: CoefficientFamily, N, x) -> tuple[float, float]:
    """``f^N(x) = sum_{|n| <= N} a_n {n.x}`` and a bound on ``|f(x) - f^N(x)|``."""
    if not N > 0:
        raise InvalidInputError(f"N must be positive, got {N}")
    pts = _as_points(x, a.d)
    if len(pts) != 1:
        raise InvalidInputError("partial_sum takes a single point; use grid_eval or evaluate_points")
    return float(_evaluate(a, N, pts)[0]), float(a.tail(N))


def evaluate_points(a: CoefficientFamily, N, pts, threads: int | None = None) -> np.ndarray:
    return _evaluate(a, N, _as_points(pts, a.d), threads)


@dataclass
class GridSpec:
    d: int
    origin: tuple
    extent: tuple
    resolution: tuple

    def __post_init__(self):
        self.origin = tuple(float(v) for v in self.origin)
        self.extent = tuple(float(v) for v in self.extent)
        self.resolution = tuple(int(v) for v in self.resolution)
        if not (len(self.origin) == len(self.extent) == len(self.resolution) == self.d):
            raise InvalidInputError("grid origin, extent and resolution must all have length d")
        if any(c < 2 for c in self.resolution):
            raise InvalidInputError(f"grid needs at least 2 nodes per axis, got {self.resolution}")
        if any(not e > 0 for e in self.extent):
            raise InvalidInputError(f"grid extents must be positive, got {self.extent}")
        if self.size > GRID_CAP:
            raise ResourceLimitError(f"grid of {self.size} nodes exceeds cap {GRID_CAP}")

    @property
    def size(self) -> int:
        return math.prod(self.resolution)

    @property
    def spacing(self) -> tuple:
        return tuple(e / c for e, c in zip(self.extent, self.resolution))

    def axes(self) -> list[np.ndarray]:
        return [o + np.arange(c) * (e / c)
                for o, e, c in zip(self.origin, self.extent, self.resolution)]

    def nodes(self) -> np.ndarray:
        """Nodes as a ``(size, d)`` array, first axis varying slowest."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def to_json(self) -> dict:
        return {"d": self.d, "origin": list(self.origin), "extent": list(self.extent),
                "resolution": list(self.resolution)}

    @classmethod
    def from_json(cls, obj: dict) -> "GridSpec":
        try:
            d = int(obj["d"]) if "d" in obj else len(obj["resolution"])
            return cls(d, obj.get("origin", [0.0] * d), obj.get("extent", [1.0] * d),
                       obj["resolution"])
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"malformed grid spec: {exc}") from exc


def grid_eval(a: CoefficientFamily, N, g: GridSpec, threads: int | None = None) -> tuple[np.ndarray, float]:
    """``f^N`` at every grid node (shape ``g.resolution``) and the tail bound."""
    if g.d != a.d:
        raise InvalidInputError(f"grid dimension {g.d} does not match family dimension {a.d}")
    vals = _evaluate(a, N, g.nodes(), threads)
    return vals.reshape(g.resolution), float(a.tail(N))


def grid_csv(g: GridSpec, values: np.ndarray, tail: float) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x{i + 1}" for i in range(g.d)] + ["value", "tail_bound"])
    t = repr(float(tail))
    for x, v in zip(g.nodes(), values.ravel()):
        w.writerow([repr(float(c)) for c in x] + [repr(float(v)), t])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# oscillations


def ball_samples(x0: Sequence[float], r: float, count: int, seed: int = 0) -> np.ndarray:
    """Center plus ``count`` scrambled Sobol points of the closed ball ``B(x0, r)``."""
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    d = len(x0)
    sampler = qmc.Sobol(d, scramble=True, seed=seed)
    if d == 1:
        u = sampler.random(count)
        pts = 2.0 * u - 1.0
    else:
        pts = np.empty((0, d))
        while len(pts) < count:
            u = 2.0 * sampler.random(max(2 * count, 64)) - 1.0
            pts = np.vstack([pts, u[np.sum(u * u, axis=1) <= 1.0]])
        pts = pts[:count]
    return np.vstack([x0[None, :], x0[None, :] + r * pts])


@dataclass
class OscillationReport:
    center: tuple
    radii: list
    osc_values: list
    partial_sum_N: list
    tail_bounds: list
    low_confidence: list
    samples_per_ball: int
    seed: int = 0
    note: str = "sampled oscillation is a lower bound for the true oscillation of f^N"

    @property
    def confident(self) -> bool:
        return not any(self.low_confidence)

    def to_json(self) -> dict:
        return {"center": list(self.center), "radii": self.radii,
                "osc_values": self.osc_values, "partial_sum_N": self.partial_sum_N,
                "tail_bounds": self.tail_bounds, "low_confidence": self.low_confidence,
                "samples_per_ball": self.samples_per_ball, "seed": self.seed,
                "note": self.note}


def _osc_at(a: CoefficientFamily, pts: np.ndarray, N0: int, N_cap: int,
            threads: int | None) -> tuple[float, float, int, float, bool]:
    N = N0
    vals = _evaluate(a, N, pts, threads)
    while True:
        hi, lo = float(vals.max()), float(vals.min())
        tail = float(a.tail(N))
        if 2 * tail <= TAIL_FRACTION * (hi - lo) or tail == 0.0:
            return hi, lo, N, tail, False
        if N >= N_cap:
            return hi, lo, N, tail, True
        try:
            ns, w = _terms(a, 2 * N, lo=N)
        except ResourceLimitError:
            # the support cap acts as an earlier N_cap
            return hi, lo, N, tail, True
        if len(ns):
            vals = vals + _accumulate(pts, ns, w)
        N *= 2


def oscillation(a: CoefficientFamily, x0, radii: Sequence[float], samples_per_ball: int = 256,
                N_start: int = N_START, N_cap: int = N_CAP, seed: int = 0,
                threads: int | None = None) -> OscillationReport:
    """Sampled ``sup - inf`` of ``f^N`` over ``B(x0, r)`` for each radius.

    ``N`` doubles from ``N_start`` until twice the tail bound is at most 1%
    of the oscillation; radii that hit ``N_cap`` first are flagged.
    """
    x0 = tuple(float(v) for v in np.atleast_1d(np.asarray(x0, dtype=float)))
    if len(x0) != a.d:
        raise InvalidInputError(f"center must have {a.d} coordinates")
    radii = [float(r) for r in radii]
    if not radii or any(r <= 0 for r in radii) or any(r2 >= r1 for r1, r2 in zip(radii, radii[1:])):
        raise InvalidInputError("radii must be positive and strictly decreasing")
    if samples_per_ball < 64:
        raise InvalidInputError(f"need at least 64 samples per ball, got {samples_per_ball}")
    his, los, Ns, tails, flags = [], [], [], [], []
    N = N_start
    for r in radii:
        pts = ball_samples(x0, r, samples_per_ball, seed)
        hi, lo, N, tail, low = _osc_at(a, pts, N, N_cap, threads)
        his.append(hi)
        los.append(lo)
        Ns.append(N)
        tails.append(tail)
        flags.append(low)
    hi_pool = np.maximum.accumulate(his[::-1])[::-1]
    lo_pool = np.minimum.accumulate(los[::-1])[::-1]
    oscs = [float(h - l) for h, l in zip(hi_pool, lo_pool)]
    return OscillationReport(x0, radii, oscs, Ns, tails, flags, samples_per_ball, seed)


@dataclass
class JumpEstimate:
    value: float
    tail_bound: float
    report: OscillationReport
    trend_slope: float = math.nan

    def to_json(self) -> dict:
        return {"value": self.value, "tail_bound": self.tail_bound,
                "trend_slope": self.trend_slope, "oscillation": self.report.to_json()}


def jump_magnitude_estimate(a: CoefficientFamily, x0, radii: Sequence[float],
                            samples_per_ball: int = 256, seed: int = 0, **kw) -> JumpEstimate:
    """Oscillation at the smallest radius, with the slope of osc against r
    over the last radii as a convergence diagnostic."""
    rep = oscillation(a, x0, radii, samples_per_ball, seed=seed, **kw)
    slope = math.nan
    if len(radii) >= 2:
        slope = float(np.polyfit(rep.radii[-3:], rep.osc_values[-3:], 1)[0])
    return JumpEstimate(rep.osc_values[-1], rep.tail_bounds[-1], rep, slope)


def _plain(obj):
    """Strict-JSON view: NaN becomes null, infinities the strings ``"inf"``/``"-inf"``."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating, Fraction)):
        v = float(obj)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def write_json(obj, path=None) -> str:
    """Deterministic JSON text: sorted keys, LF endings, trailing newline."""
    text = json.dumps(_plain(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"
    if path is not None:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    return text
