"""Deterministic Gauss-Legendre panel quadrature shared across the package.

Design principles
-----------------
* Fixed rules and reproducible refinement only: downstream consumers compare
  output files byte-for-byte, so nothing here may depend on timing, threads,
  or dict ordering.
* Integrands are vectorized callables; refinement batches all pending panels
  into a single call per level so the cost stays numpy-bound.
* Adaptive refinement estimates per-panel error by comparing a panel against
  its two halves at the same rule order, which is reliable for the smooth
  (rotated-contour, damped) integrands used in this package.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import QuadratureError

__all__ = [
    "gauss_legendre",
    "panel_nodes",
    "fixed_panels",
    "adaptive_panels",
    "linear_edges",
    "geometric_edges",
]


@lru_cache(maxsize=64)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the ``order``-point Gauss-Legendre rule on [-1, 1]."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    return nodes, weights


def linear_edges(a: float, b: float, n: int) -> np.ndarray:
    """``n`` equal-width panels spanning [a, b] (n+1 edges)."""
    return np.linspace(a, b, n + 1)


def geometric_edges(a: float, b: float, n: int) -> np.ndarray:
    """``n`` geometrically graded panels on [a, b], 0 < a < b (n+1 edges)."""
    if not 0 < a < b:
        raise QuadratureError("geometric_edges requires 0 < a < b")
    return np.geomspace(a, b, n + 1)


def panel_nodes(
    edges: np.ndarray, order: int
) -> tuple[np.ndarray, np.ndarray]:
    """Flattened nodes and weights for GL panels with the given edges."""
    edges = np.asarray(edges, dtype=float)
    x, w = gauss_legendre(order)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def fixed_panels(fn, edges: np.ndarray, order: int = 24):
    """Integrate a vectorized callable over fixed GL panels."""
    nodes, weights = panel_nodes(edges, order)
    return np.sum(fn(nodes) * weights)


def _panel_values(fn, lo: np.ndarray, hi: np.ndarray, order: int) -> np.ndarray:
    """GL value of ``fn`` on each panel [lo_i, hi_i]; one call to ``fn``."""
    x, w = gauss_legendre(order)
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    vals = np.asarray(fn(nodes)).reshape(lo.size, order)
    return vals @ w * half


def adaptive_panels(
    fn,
    edges: np.ndarray,
    *,
    abs_tol: float = 1e-12,
    order: int = 16,
    max_levels: int = 40,
) -> tuple[complex, float]:
    """Globally adaptive bisection quadrature over an initial panel layout.

    Returns ``(value, error_estimate)``. Raises :class:`QuadratureError` when
    the budget of ``max_levels`` batched bisection rounds is exhausted with
    the accumulated error estimate still above ``abs_tol``.
    """
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise QuadratureError("edges must be strictly increasing, length >= 2")
    total_width = float(edges[-1] - edges[0])
    lo, hi = edges[:-1].copy(), edges[1:].copy()
    coarse = _panel_values(fn, lo, hi, order)

    accepted = 0.0 + 0.0j
    err_sum = 0.0
    min_width = 1e-14 * total_width
    for _ in range(max_levels):
        mid = 0.5 * (lo + hi)
        left = _panel_values(fn, lo, mid, order)
        right = _panel_values(fn, mid, hi, order)
        refined = left + right
        err = np.abs(coarse - refined)
        budget = abs_tol * (hi - lo) / total_width
        done = (err <= budget) | (hi - lo <= min_width)
        accepted += complex(np.sum(refined[done]))
        err_sum += float(np.sum(err[done]))
        keep = ~done
        if not np.any(keep):
            return accepted, err_sum
        lo = np.concatenate([lo[keep], mid[keep]])
        hi = np.concatenate([mid[keep], hi[keep]])
        coarse = np.concatenate([left[keep], right[keep]])
    residual = err_sum + float(np.sum(np.abs(coarse)))
    raise QuadratureError(
        "adaptive quadrature did not converge within the refinement budget",
        residual=residual,
    )
