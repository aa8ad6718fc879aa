"""Change-point search: contrast minimization over m change instants.

The contrast of a candidate segmentation is the sum over segments of the
log-log regression residual (see :func:`scalebreak.scalogram.segment_cost`),
optionally in its precision-weighted, length-scaled form.  Minimization
runs over a candidate grid (segment costs only change where a boundary
crosses some scale's shift grid, so a stride equal to the base scale is
exhaustive for base-aligned grids) by dynamic programming over precomputed
pair costs; the result is the exact global minimizer on that grid, with
ties broken toward the lexicographically smallest instant vector.  m <= 1
avoids the quadratic pair table and scans boundary costs directly; both
routes evaluate segment costs through the same code path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ValidationError
from .scalogram import ScalogramTable, design_matrix, segment_cost

__all__ = [
    "SegmentationConstraints",
    "ChangePointResult",
    "contrast",
    "detect",
    "shrink",
]


@dataclass(frozen=True)
class SegmentationConstraints:
    """Known change count m, minimal segment length and candidate stride
    (both in sample-index units)."""

    m: int
    min_len: int
    candidate_stride: int

    def __post_init__(self):
        if self.m < 0:
            raise ValidationError("m must be nonnegative")
        if self.min_len < 2:
            raise ValidationError("min_len must be at least 2 samples")
        if self.candidate_stride < 1:
            raise ValidationError("candidate stride must be at least 1")


@dataclass(frozen=True)
class ChangePointResult:
    """Estimated change instants (sample indices), fractions, contrast value
    and, after :func:`shrink`, the margin-shrunk estimation windows."""

    k_hat: tuple
    tau_hat: tuple
    g_min: float
    n: int
    delta: float
    stride: int
    shrunk: tuple | None = None
    v_n: float | None = None

    @property
    def m(self):
        return len(self.k_hat)

    @property
    def k_hat_time(self):
        return tuple(k * self.delta for k in self.k_hat)


def _pair_costs(table, k_lo, k_hi, min_len, objective="plain"):
    """Per-segment costs for the segments [k_lo[i], k_hi[i]).

    ``objective="plain"`` is the unweighted regression residual summed by
    the contrast.  ``"stabilized"`` is its Gaussian quasi-likelihood form:
    residuals weighted by the leading-order precision 1/(2 * scale) of each
    log-variance and the whole residual scaled by the segment length, which
    removes the 1/length noise-floor imbalance between long and short
    candidate segments.  Vectorized over any broadcastable pair of bound
    arrays; infeasible segments (shorter than min_len, fewer than 2 shifts
    at some scale, or with vanishing variance) get +inf.
    """
    grid = table.grid
    k_lo = np.asarray(k_lo, dtype=float)
    k_hi = np.asarray(k_hi, dtype=float)
    length = k_hi - k_lo
    feasible = length >= min_len
    x = grid.log_scales
    if objective == "plain":
        weights = np.ones(grid.ell)
    elif objective == "stabilized":
        weights = 1.0 / (2.0 * grid.scales)
    else:
        raise ValidationError(f"unknown objective {objective!r}")
    wsum = weights.sum()
    xc = x - (weights * x).sum() / wsum
    sxx = float(weights @ (xc * xc))
    trim = table.trim
    q0 = np.zeros(np.broadcast(k_lo, k_hi).shape)
    q1 = np.zeros_like(q0)
    q2 = np.zeros_like(q0)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_len = np.log(length)
    for i, a in enumerate(table.scales):
        prefix = table.sq_prefix[i]
        p_lo = np.floor((k_lo + trim * length) / a).astype(np.int64)
        p_hi = np.floor((k_hi - trim * length) / a).astype(np.int64)
        ok = feasible & (p_hi - p_lo >= 2)
        sums = prefix[np.clip(p_hi, 0, prefix.size - 1)] - prefix[
            np.clip(p_lo, 0, prefix.size - 1)
        ]
        ok &= sums > 0.0
        feasible = ok
        with np.errstate(divide="ignore", invalid="ignore"):
            y = math.log(a / (1.0 - 2.0 * trim)) - log_len + np.log(sums)
        y = np.where(ok, y, 0.0)
        q0 += weights[i] * (y * y)
        q1 += (weights[i] * xc[i]) * y
        q2 += weights[i] * y
    cost = q0 - q2 * q2 / wsum - q1 * q1 / sxx
    if objective == "stabilized":
        cost = cost * length
    return np.where(feasible, np.maximum(cost, 0.0), np.inf)


def _candidates(n, stride):
    interior = np.arange(stride, n, stride, dtype=np.int64)
    return np.concatenate([[0], interior, [n]])


def cost_matrix(table, constraints, objective="plain"):
    """Candidate grid and the full pair-cost matrix (used for m >= 2 and by
    the exhaustive-search oracle)."""
    cands = _candidates(table.n, constraints.candidate_stride)
    cost = _pair_costs(
        table, cands[:, None].astype(float), cands[None, :].astype(float),
        constraints.min_len, objective,
    )
    return cands, cost


def _dp_minimize(cost, m):
    """Exact DP over the pair-cost matrix; suffix table plus greedy-left
    reconstruction gives the lexicographically smallest optimal vector."""
    p = cost.shape[0]
    suffix = np.full((m + 2, p), np.inf)
    suffix[1] = cost[:, -1]
    for j in range(2, m + 2):
        suffix[j] = np.min(cost + suffix[j - 1][None, :], axis=1)
    g_min = suffix[m + 1][0]
    if not np.isfinite(g_min):
        raise ValidationError("no feasible segmentation under the constraints")
    picks = []
    i = 0
    for j in range(m, 0, -1):
        totals = cost[i] + suffix[j]
        k = int(np.argmin(totals))
        picks.append(k)
        i = k
    return g_min, picks


def contrast(path, wavelet, grid, ks, min_len=None):
    """Contrast value of a fixed segmentation: the sum of per-segment
    regression residuals over [0, k_1), ..., [k_m, N)."""
    ks = [int(k) for k in ks]
    n = path.n
    bounds = [0] + ks + [n]
    if any(b <= a for a, b in zip(bounds, bounds[1:])):
        raise ValidationError("change instants must be strictly increasing in (0, N)")
    if min_len is not None and any(
        b - a < min_len for a, b in zip(bounds, bounds[1:])
    ):
        raise ValidationError("a segment is shorter than min_len")
    table = ScalogramTable(path, wavelet, grid)
    design = design_matrix(grid)
    return sum(
        segment_cost(table.log_variance_vector(a, b), design)
        for a, b in zip(bounds, bounds[1:])
    )


def detect(path, wavelet, grid, constraints, table=None, objective="plain"):
    """Globally minimize the contrast over the candidate grid.

    ``objective`` selects the segment cost ("plain" is the sum of
    unweighted regression residuals; "stabilized" the precision-weighted,
    length-scaled variant -- see :func:`_pair_costs`).  Returns the
    estimated instants (sample indices), the fractions tau_hat = k_hat / N
    and the attained cost.
    """
    if table is None:
        table = ScalogramTable(path, wavelet, grid)
    n = table.n
    if (constraints.m + 1) * constraints.min_len > n:
        raise ValidationError("(m+1) * min_len exceeds the series length")
    if constraints.m == 0:
        g = float(_pair_costs(table, 0.0, float(n), constraints.min_len, objective))
        if not np.isfinite(g):
            raise ValidationError("no feasible segmentation under the constraints")
        k_hat = ()
    elif constraints.m == 1:
        cands = _candidates(n, constraints.candidate_stride)[1:-1].astype(float)
        if cands.size == 0:
            raise ValidationError("candidate grid is empty; reduce the stride")
        left = _pair_costs(table, 0.0, cands, constraints.min_len, objective)
        right = _pair_costs(table, cands, float(n), constraints.min_len, objective)
        totals = left + right
        best = int(np.argmin(totals))
        g = float(totals[best])
        if not np.isfinite(g):
            raise ValidationError("no feasible segmentation under the constraints")
        k_hat = (int(cands[best]),)
    else:
        cands, cost = cost_matrix(table, constraints, objective)
        g, picks = _dp_minimize(cost, constraints.m)
        g = float(g)
        k_hat = tuple(int(cands[k]) for k in picks)
    return ChangePointResult(
        k_hat=k_hat,
        tau_hat=tuple(k / n for k in k_hat),
        g_min=g,
        n=n,
        delta=path.delta,
        stride=int(constraints.candidate_stride),
    )


def shrink(result, v_n):
    """Move every estimated boundary inward by N/v_n samples, so that the
    estimation windows fall inside the true segments with probability
    tending to one.  Fails if a margin swallows its segment."""
    if not v_n > 0.0:
        raise ValidationError("v_n must be positive")
    margin = result.n / v_n
    bounds = [0, *result.k_hat, result.n]
    intervals = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        # epsilon guards keep the v_n -> infinity limit at the full segment
        t_lo = int(math.ceil(lo + margin - 1e-9))
        t_hi = int(math.floor(hi - margin + 1e-9))
        if t_lo >= t_hi:
            raise ValidationError(
                f"margins swallow segment [{lo}, {hi}): margin {margin:.1f}"
            )
        intervals.append((t_lo, t_hi))
    return replace(result, shrunk=tuple(intervals), v_n=float(v_n))
