"""Principal component pursuit and the windowed separation pipeline.

``pcp_solve`` splits a matrix into low-rank plus sparse parts with an
inexact augmented-Lagrangian iteration.  ``separate_windowed`` applies
it to successive fast-time windows of a trace matrix and stitches the
parts back together; windowing is what makes the separation work when
the full matrix is itself sparse.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg

from .signal import TraceMatrix

#: Windows span this many 1/bandwidth units of fast time by default.
WINDOW_SPAN_FACTOR = 16.0

#: Full SVD below this minimum dimension; iterative partial SVD above.
FULL_SVD_LIMIT = 512

__all__ = [
    "WINDOW_SPAN_FACTOR",
    "FULL_SVD_LIMIT",
    "PcpSolution",
    "pcp_solve",
    "WindowLayout",
    "choose_window",
    "SeparationResult",
    "separate_windowed",
]


@dataclass(frozen=True)
class PcpSolution:
    """Result of principal component pursuit on one matrix."""

    low: np.ndarray
    sparse: np.ndarray
    iterations: int
    converged: bool
    feasibility: float
    rank: int
    sparse_fraction: float

    def objective(self, eta: float) -> float:
        """Nuclear norm of the low part plus eta times the l1 of the sparse."""
        return float(
            np.linalg.svd(self.low, compute_uv=False).sum()
            + eta * np.abs(self.sparse).sum()
        )


def _shrink(x: np.ndarray, threshold: float) -> np.ndarray:
    return np.sign(x) * np.maximum(np.abs(x) - threshold, 0.0)


def _svd_threshold(
    g: np.ndarray, threshold: float, sv: int
) -> tuple[np.ndarray, int, int]:
    """Singular value thresholding, with partial SVD on large matrices.

    Returns (thresholded matrix, number of kept values, next sv hint).
    """
    mind = min(g.shape)
    if mind <= FULL_SVD_LIMIT or sv >= mind - 1:
        u, vals, vt = np.linalg.svd(g, full_matrices=False)
    else:
        # Deterministic start vector keeps repeated runs bit-identical.
        v0 = np.full(mind, 1.0 / np.sqrt(mind))
        u, vals, vt = scipy.sparse.linalg.svds(g, k=sv, v0=v0)
        order = np.argsort(vals)[::-1]
        u, vals, vt = u[:, order], vals[order], vt[order]
    kept = int(np.sum(vals > threshold))
    if kept == 0:
        return np.zeros_like(g), 0, max(1, sv)
    low = (u[:, :kept] * (vals[:kept] - threshold)) @ vt[:kept]
    if kept < sv or mind <= FULL_SVD_LIMIT:
        nxt = min(kept + 1, mind - 1)
    else:
        nxt = min(kept + int(round(0.05 * mind)), mind - 1)
    return low, kept, max(nxt, 1)


def pcp_solve(
    matrix: np.ndarray,
    eta: float | None = None,
    tol: float = 1e-7,
    max_iter: int = 1000,
    mu: float | None = None,
    mu_growth: float = 1.6,
) -> PcpSolution:
    """Split ``matrix`` into low-rank plus sparse parts.

    Solves min ||L||_* + eta ||S||_1 subject to L + S = M by the
    inexact augmented-Lagrangian method: alternating singular-value
    thresholding on L and entrywise soft-thresholding on S, with a dual
    update and geometrically growing penalty.

    Parameters
    ----------
    matrix : 2-D real array
    eta : float, optional
        Sparsity weight; defaults to 1/sqrt(max dimension).
    tol : float
        Stop when ||M - L - S||_F / ||M||_F falls below this.
    max_iter : int
        Iteration cap; on hitting it the best iterate is returned with
        ``converged`` False.
    mu, mu_growth : float, optional
        Initial penalty (default 1.25/sigma_max) and its growth factor.

    Raises
    ------
    ValueError
        If the input contains non-finite entries or is not 2-D.
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2:
        raise ValueError("pcp_solve expects a 2-D matrix")
    if not np.all(np.isfinite(m)):
        raise ValueError("pcp_solve input contains non-finite entries")
    if eta is None:
        eta = 1.0 / np.sqrt(max(m.shape))
    norm_fro = float(np.linalg.norm(m))
    if norm_fro == 0.0:
        z = np.zeros_like(m)
        return PcpSolution(z, z.copy(), 1, True, 0.0, 0, 0.0)
    norm_two = float(np.linalg.svd(m, compute_uv=False)[0])
    if mu is None:
        mu = 1.25 / norm_two
    mu_cap = mu * 1.0e7
    dual_scale = max(norm_two, float(np.abs(m).max()) / eta)
    y = m / dual_scale
    s = np.zeros_like(m)
    low = np.zeros_like(m)
    sv = 10
    rank = 0
    feasibility = np.inf
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        low, rank, sv = _svd_threshold(m - s + y / mu, 1.0 / mu, sv)
        s = _shrink(m - low + y / mu, eta / mu)
        gap = m - low - s
        y += mu * gap
        feasibility = float(np.linalg.norm(gap)) / norm_fro
        if feasibility <= tol:
            converged = True
            break
        mu = min(mu * mu_growth, mu_cap)
    if not converged:
        warnings.warn(
            f"pcp_solve hit the {max_iter}-iteration cap at feasibility "
            f"{feasibility:.2e}; returning the final iterate",
            RuntimeWarning,
            stacklevel=2,
        )
    sparse_fraction = float(np.count_nonzero(s)) / s.size
    return PcpSolution(
        low=low,
        sparse=s,
        iterations=iterations,
        converged=converged,
        feasibility=feasibility,
        rank=rank,
        sparse_fraction=sparse_fraction,
    )


@dataclass(frozen=True)
class WindowLayout:
    """Fast-time window length and overlap, in samples."""

    length: int
    overlap: int

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("window length must be positive")
        if not (0 <= self.overlap < self.length):
            raise ValueError("overlap must satisfy 0 <= overlap < length")

    def spans(self, total: int) -> list[tuple[int, int]]:
        """Half-open column spans tiling ``total`` columns."""
        if self.length >= total:
            return [(0, total)]
        stride = self.length - self.overlap
        starts = list(range(0, total - self.length + 1, stride))
        if starts[-1] != total - self.length:
            starts.append(total - self.length)
        return [(a, a + self.length) for a in starts]


def choose_window(
    n_cols: int, bandwidth: float, dt: float, span_factor: float = WINDOW_SPAN_FACTOR
) -> WindowLayout:
    """Default layout: windows spanning span_factor/bandwidth of fast time.

    Length is clamped to [64, n_cols]; overlap is one eighth of the
    length.
    """
    length = int(round(span_factor / (bandwidth * dt)))
    length = min(max(length, 64), n_cols)
    if length >= n_cols:
        return WindowLayout(length=n_cols, overlap=0)
    return WindowLayout(length=length, overlap=length // 8)


def _crossfade_weights(length: int, overlap: int) -> np.ndarray:
    w = np.ones(length)
    if overlap > 0:
        ramp = np.arange(1, overlap + 1) / (overlap + 1.0)
        w[:overlap] = ramp
        w[-overlap:] = ramp[::-1]
    return w


@dataclass(frozen=True)
class SeparationResult:
    """Windowed low-rank/sparse split of a trace matrix."""

    low: TraceMatrix
    sparse: TraceMatrix
    layout: WindowLayout
    diagnostics: list
    feasibility: float


def separate_windowed(
    trace: TraceMatrix,
    layout: WindowLayout | None = None,
    eta: float | None = None,
    tol: float = 1e-7,
    max_iter: int = 1000,
) -> SeparationResult:
    """Low-rank/sparse separation per fast-time window.

    Each window of columns is split by ``pcp_solve``; overlapping
    windows are blended with linear cross-fades applied to L and S with
    the same weights, so the stitched parts still sum to the input up to
    the solver feasibility.

    Parameters
    ----------
    trace : TraceMatrix
        Range-compressed (or transformed) traces.
    layout : WindowLayout, optional
        Defaults to ``choose_window`` using the bandwidth recorded in
        the trace metadata; a trace without that record needs an
        explicit layout.
    eta, tol, max_iter :
        Passed to ``pcp_solve``; eta defaults per window to
        1/sqrt(max(rows, window length)).
    """
    if not trace.compressed:
        raise ValueError("separation expects range-compressed traces")
    n_cols = trace.m + 1
    if layout is None:
        bandwidth = trace.meta.get("bandwidth")
        if bandwidth is None:
            raise ValueError(
                "trace metadata lacks a bandwidth; pass an explicit layout"
            )
        layout = choose_window(n_cols, bandwidth, trace.axis.dt)
    start, stop = trace.valid_rows
    rows = trace.data[start:stop]
    acc_low = np.zeros_like(rows)
    acc_sparse = np.zeros_like(rows)
    acc_weight = np.zeros(n_cols)
    diagnostics = []
    for w_index, (a, b) in enumerate(layout.spans(n_cols)):
        solution = pcp_solve(
            rows[:, a:b], eta=eta, tol=tol, max_iter=max_iter
        )
        weights = _crossfade_weights(b - a, layout.overlap if b - a == layout.length else 0)
        acc_low[:, a:b] += solution.low * weights
        acc_sparse[:, a:b] += solution.sparse * weights
        acc_weight[a:b] += weights
        diagnostics.append(
            {
                "window": w_index,
                "columns": [a, b],
                "iterations": solution.iterations,
                "converged": solution.converged,
                "feasibility": solution.feasibility,
                "rank": solution.rank,
                "sparse_fraction": solution.sparse_fraction,
            }
        )
    acc_low /= acc_weight
    acc_sparse /= acc_weight
    low_full = np.zeros_like(trace.data)
    sparse_full = np.zeros_like(trace.data)
    low_full[start:stop] = acc_low
    sparse_full[start:stop] = acc_sparse
    gap = float(np.linalg.norm(rows - acc_low - acc_sparse))
    denom = float(np.linalg.norm(rows))
    feasibility = gap / denom if denom > 0.0 else 0.0
    low = trace.replace(
        data=low_full, tag="filtered", meta={**trace.meta, "part": "low-rank"}
    )
    sparse = trace.replace(
        data=sparse_full, tag="filtered", meta={**trace.meta, "part": "sparse"}
    )
    return SeparationResult(
        low=low,
        sparse=sparse,
        layout=layout,
        diagnostics=diagnostics,
        feasibility=feasibility,
    )
