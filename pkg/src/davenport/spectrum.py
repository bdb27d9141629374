"""Multifractal spectrum: closed-form prediction and a box-counting estimator."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import arith
from .coeffs import CoefficientFamily, gamma_a_estimate
from .errors import InvalidInputError, ResourceLimitError
from .evaluation import GridSpec
from .regularity import ZERO_TOL, empirical_exponent
from .transforms import jump_operator

EMPTY = -math.inf
HYPERPLANE_TOL = 1e-6
MIN_LEVELS = 3


def theoretical_spectrum(gamma_a: float, d: int, h: float) -> float:
    """``d - 1 + h / gamma_a`` on ``[0, gamma_a]``; ``EMPTY`` (``-inf``) elsewhere."""
    if not (isinstance(d, int) or float(d).is_integer()) or d < 1:
        raise InvalidInputError(f"dimension must be a positive integer, got {d}")
    if math.isinf(gamma_a):
        raise InvalidInputError("gamma_a = inf lies outside the modeled regime")
    if not gamma_a > 0:
        raise InvalidInputError("gamma_a <= 0: slow decay makes the exponent vanish everywhere")
    if h < 0 or h > gamma_a:
        return EMPTY
    return d - 1 + h / gamma_a


@dataclass(frozen=True)
class SpectrumPrediction:
    gamma_a: float
    d: int

    @property
    def support(self) -> tuple[float, float]:
        return (0.0, self.gamma_a)

    @property
    def packing_dim_singularity(self) -> int:
        return self.d

    def value(self, h: float) -> float:
        return theoretical_spectrum(self.gamma_a, self.d, h)

    def note_at_zero(self) -> str:
        return (f"E_f(0) contains the discontinuity hyperplanes, so its dimension is at "
                f"least {self.d - 1}")


@dataclass
class EmpiricalSpectrum:
    bin_edges: list
    dimensions: list
    box_counts: list
    levels: list
    node_counts: list
    infinite_nodes: int
    method: str
    cumulative: bool
    gamma_a: float
    C: float
    grid: dict
    params: dict = field(default_factory=dict)
    note: str = ("box-counting over a few dyadic scales stands in for Hausdorff "
                 "dimension; expect errors of a few tenths")

    @property
    def centers(self) -> list:
        e = self.bin_edges
        return [(e[i] + e[i + 1]) / 2 for i in range(len(e) - 1)]

    def dimension_at(self, h: float) -> float:
        for i in range(len(self.bin_edges) - 1):
            if self.bin_edges[i] <= h < self.bin_edges[i + 1]:
                return self.dimensions[i]
        return math.nan

    def slope(self, h_lo: float, h_hi: float) -> float:
        """Least-squares slope of dimension against bin center on ``[h_lo, h_hi]``."""
        pts = [(c, v) for c, v in zip(self.centers, self.dimensions)
               if h_lo <= c <= h_hi and math.isfinite(v)]
        if len(pts) < 2:
            return math.nan
        xs, ys = zip(*pts)
        return float(np.polyfit(xs, ys, 1)[0])

    def to_csv(self, prediction: SpectrumPrediction | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        head = ["h_bin_center", "dimension"]
        if prediction is not None:
            head.append("predicted")
        head += [f"box_count_J{J}" for J in self.levels]
        w.writerow(head)
        for c, dim, counts in zip(self.centers, self.dimensions, self.box_counts):
            row = [repr(float(c)), repr(float(dim))]
            if prediction is not None:
                row.append(repr(float(prediction.value(c))))
            w.writerow(row + [str(int(n)) for n in counts])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {"bin_edges": self.bin_edges, "dimensions": self.dimensions,
                "box_counts": self.box_counts, "levels": self.levels,
                "node_counts": self.node_counts, "infinite_nodes": self.infinite_nodes,
                "method": self.method, "cumulative": self.cumulative,
                "gamma_a": self.gamma_a, "C": self.C, "grid": self.grid,
                "params": self.params, "note": self.note}


def _decay_fit(a: CoefficientFamily, R) -> tuple[float, float]:
    """Least-squares fit ``log|a_n| = log C - gamma log|n|`` over the support."""
    pairs = [(arith.log_norm(n), math.log(abs(float(v)))) for n, v in a.support(R) if v]
    if not pairs:
        return math.inf, 1.0
    if len(pairs) == 1 or len({p[0] for p in pairs}) == 1:
        return math.inf, math.exp(max(p[1] for p in pairs))
    x, y = np.array(pairs).T
    slope, intercept = np.polyfit(x, y, 1)
    return float(-slope), float(math.exp(intercept))


def _coarse_exponents(terms, pts: np.ndarray, eps: float, C: float) -> np.ndarray:
    """Per node: min of ``log(|a_n|/C) / log eps`` over ``|n| <= 1/eps`` with
    the node within ``eps/2`` of a hyperplane ``n.x in Z``.

    Every point lies within ``1/(2|n|)`` of some hyperplane with normal ``n``,
    so the frequencies with ``|n|`` near ``1/eps`` always qualify and set the
    typical value; coarser frequencies only count close to their hyperplanes.
    """
    h = np.full(len(pts), np.inf)
    for n, logv, norm in terms:
        if norm > 1.0 / eps:
            break
        t = pts @ n
        near = np.abs(t - np.rint(t)) <= 0.5 * eps * norm * (1 + 1e-12)
        if near.any():
            val = max(0.0, (logv - math.log(C)) / math.log(eps))
            h = np.where(near, np.minimum(h, val), h)
    return h


def _box_ids(pts: np.ndarray, g: GridSpec, J: int) -> np.ndarray:
    k = 2**J
    idx = np.floor((pts - np.array(g.origin)) / np.array(g.extent) * k).astype(np.int64)
    idx = np.clip(idx, 0, k - 1)
    ids = np.zeros(len(pts), dtype=np.int64)
    for j in range(g.d):
        ids = ids * k + idx[:, j]
    return ids


def _default_levels(g: GridSpec) -> list[int]:
    top = int(math.floor(math.log2(min(g.resolution)))) - 1
    return list(range(max(1, top - 5), top + 1))


def empirical_spectrum(a: CoefficientFamily, region: GridSpec, h_bins=None, R=None,
                       method: str = "formula", levels: Sequence[int] | None = None,
                       cumulative: bool = True, offset: float | None = None,
                       gamma_a: float | None = None, osc_kwargs: dict | None = None,
                       ) -> EmpiricalSpectrum:
    """Box-counting estimate of the spectrum over ``region``.

    ``method="formula"`` gives each node, at box size ``eps``, the exponent
    of the formula truncated to frequencies ``|n| <= 1/eps`` whose hyperplanes
    pass within ``eps/2`` of the node. ``method="oscillation"`` runs the
    oscillation oracle at every node (slow; meant for small grids).
    Nodes are shifted by ``offset`` grid steps (irrational by default) so
    they avoid rational hyperplanes. With ``cumulative`` the count for a bin
    uses every node with exponent below the bin's upper edge.
    """
    if region.d != a.d:
        raise InvalidInputError("region and family dimensions differ")
    if method not in ("formula", "oscillation"):
        raise InvalidInputError(f"unknown method {method!r}")
    levels = list(levels) if levels is not None else _default_levels(region)
    if len(levels) < MIN_LEVELS:
        raise InvalidInputError(f"need at least {MIN_LEVELS} dyadic levels")
    if min(region.resolution) < 2 ** (max(levels) + 1):
        raise InvalidInputError("finest box level must hold at least two nodes per side")
    if offset is None:
        offset = (math.sqrt(5) - 1) / 2
    ext_min = min(region.extent)
    R = R if R is not None else 2.0 ** max(levels) / ext_min + 1
    gamma_fit, C = _decay_fit(a, max(R, 4.0))
    if gamma_a is None:
        gamma_a = gamma_fit if math.isfinite(gamma_fit) else gamma_a_estimate(a, 1, max(R, 4.0)).value
    if h_bins is None:
        width = 0.1 * gamma_a if math.isfinite(gamma_a) and gamma_a > 0 else 0.1
        n_bins = int(round(1.5 / 0.1)) if math.isfinite(gamma_a) else 10
        h_bins = [i * width - width / 2 for i in range(n_bins + 1)]
    edges = [float(e) for e in h_bins]
    pts = region.nodes() + np.array(region.spacing) * offset

    terms = []
    for n, v in a.support(R, inclusive=True):
        if v:
            terms.append((np.array(n, dtype=float), math.log(abs(float(v))), arith.norm(n)))

    # nodes on a certain jump hyperplane get exponent 0 at every scale
    on_jump = np.zeros(len(pts), dtype=bool)
    if terms:
        A = jump_operator(a, max(R, 2.0), 8)
        for q, v in A.items():
            if A.is_uncertain(q):
                continue
            qv = np.array(q, dtype=float)
            t = pts @ qv
            g = math.gcd(*q)
            p = np.rint(t)
            coprime = np.array([math.gcd(int(pi), g) == 1 for pi in p]) if g > 1 else True
            on_jump |= (np.abs(t - p) <= HYPERPLANE_TOL * np.linalg.norm(qv)) & coprime

    fixed_h = None
    if method == "oscillation":
        kw = dict(scales=[2.0**-j for j in range(4, 10)], samples_per_ball=64, N_cap=2**14)
        kw.update(osc_kwargs or {})
        fixed_h = np.zeros(len(pts))
        for i in np.flatnonzero(~on_jump):
            fixed_h[i] = empirical_exponent(a, pts[i], **kw).value

    counts_per_bin = [[0] * len(levels) for _ in range(len(edges) - 1)]
    node_counts = [0] * (len(edges) - 1)
    infinite_nodes = 0
    for li, J in enumerate(levels):
        eps = ext_min * 2.0**-J
        if fixed_h is not None:
            h = fixed_h.copy()
        else:
            h = _coarse_exponents(terms, pts, eps, C)
        h[on_jump] = 0.0
        ids = _box_ids(pts, region, J)
        if li == len(levels) - 1:
            infinite_nodes = int(np.sum(~np.isfinite(h)))
        for b in range(len(edges) - 1):
            lo, hi = edges[b], edges[b + 1]
            sel = (h < hi) if cumulative else ((h >= lo) & (h < hi))
            counts_per_bin[b][li] = int(len(np.unique(ids[sel])))
            if li == len(levels) - 1:
                node_counts[b] = int(np.sum(sel))

    dims = []
    for counts in counts_per_bin:
        pairs = [(J * math.log(2), math.log(c)) for J, c in zip(levels, counts) if c > 0]
        if len(pairs) < MIN_LEVELS:
            dims.append(math.nan)
            continue
        x, y = np.array(pairs).T
        dims.append(float(min(max(np.polyfit(x, y, 1)[0], 0.0), a.d + 0.1)))
    return EmpiricalSpectrum(edges, dims, counts_per_bin, levels, node_counts, infinite_nodes,
                             method, cumulative, float(gamma_a), float(C), region.to_json(),
                             {"R": float(R), "offset": float(offset)})


@dataclass
class HomogeneityReport:
    h: float
    dimensions: list
    node_counts: list
    spread: float

    def to_json(self):
        return {"h": self.h, "dimensions": self.dimensions,
                "node_counts": self.node_counts, "spread": self.spread}


def homogeneity_report(a: CoefficientFamily, regions: Sequence[GridSpec], h: float,
                       **kwargs) -> HomogeneityReport:
    """Bin-dimension at ``h`` in each region and the largest pairwise gap."""
    if len(regions) < 2:
        raise InvalidInputError("need at least two regions")
    dims, nodes = [], []
    for g in regions:
        sp = empirical_spectrum(a, g, **kwargs)
        i = next((i for i in range(len(sp.bin_edges) - 1)
                  if sp.bin_edges[i] <= h < sp.bin_edges[i + 1]), None)
        dims.append(sp.dimensions[i] if i is not None else math.nan)
        nodes.append(sp.node_counts[i] if i is not None else 0)
    finite = [v for v in dims if math.isfinite(v)]
    spread = max(finite) - min(finite) if len(finite) >= 2 else math.nan
    return HomogeneityReport(float(h), dims, nodes, spread)
