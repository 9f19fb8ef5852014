"""Alpha-stable laws in exponent form: parameters and Fourier inversion.

Mathematical conventions
------------------------
* Characteristic function: ``exp(-sigma |xi|^alpha (1 + i beta sgn(xi)
  tan(pi alpha / 2)))`` with ``sigma > 0``, ``alpha in (1, 2)``,
  ``beta in [-1, 1]``.
* Density by inversion: ``density(x) = (1/pi) Re int_0^inf
  exp(-sigma xi^alpha (1 + i beta tan(pi alpha/2))) e^{i xi x} dxi``. The
  pairing of this exponent with the ``e^{+i xi x}`` kernel is deliberate and
  self-consistent: for ``beta = 1`` it produces the right-skewed law whose
  tail matches a positive-jump source.
* Scale from a fitted tail law: ``sigma = c_s * Gamma(3-alpha) /
  (alpha (alpha-1)) * |cos(pi alpha / 2)|``. The absolute value is load
  bearing — the raw cosine is negative throughout (1, 2) and would produce a
  non-integrable "characteristic function"; ``StableParams`` therefore
  rejects any non-positive scale, which is exactly how the sign-convention
  falsifier manifests downstream.

Design principles
-----------------
* The inversion integrand has an ``|xi|^alpha`` kink at zero and an
  oscillatory kernel, so panels are geometrically graded at the origin and
  capped in width by the phase budget ``width * |x| <= 2.5``; accuracy is
  verified by re-evaluating at a lower panel order and refining.
* Beyond ``|x| = 30 sigma^(1/alpha)`` the density is evaluated by the tail
  expansion in powers of ``|x|^{-alpha}``, which is far cheaper and
  increasingly accurate exactly where quadrature loses digits to
  cancellation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as _gamma_fn

from ._quadrature import gauss_legendre
from .errors import InputValidationError, InvalidStableParameterError, QuadratureError

__all__ = [
    "SourceLaw",
    "StableParams",
    "exponent_from_tail",
    "charfn_stable",
    "stable_density",
    "stable_density_at_zero",
]

_SERIES_SWITCH = 30.0  # |x| / sigma^(1/alpha) beyond which the tail expansion takes over
_LOG_CUTOFF = 40.0  # sigma * xi_max^alpha at the frequency cutoff


@dataclass(frozen=True)
class SourceLaw:
    """Tail data ``(c_s, alpha, p, q)`` of a law in a stable domain of attraction."""

    c_s: float
    alpha: float
    p: float
    q: float

    def __post_init__(self):
        if not self.c_s > 0.0:
            raise InputValidationError(f"c_s must be positive, got {self.c_s}")
        if not 1.0 < self.alpha < 2.0:
            raise InputValidationError(
                f"alpha must lie in (1, 2), got {self.alpha}"
            )
        if self.p < 0.0 or self.q < 0.0 or abs(self.p + self.q - 1.0) > 1e-12:
            raise InputValidationError(
                f"skew fractions must satisfy p, q >= 0, p + q = 1; "
                f"got p={self.p}, q={self.q}"
            )

    @classmethod
    def from_tail_law(cls, tail) -> "SourceLaw":
        """Adapt any object with ``c_s``/``alpha``/``p``/``q`` attributes."""
        return cls(
            c_s=float(tail.c_s),
            alpha=float(tail.alpha),
            p=float(tail.p),
            q=float(tail.q),
        )


@dataclass(frozen=True)
class StableParams:
    """Exponent-form stable parameters ``(sigma, alpha, beta)``."""

    sigma: float
    alpha: float
    beta: float

    def __post_init__(self):
        if not self.sigma > 0.0:
            raise InvalidStableParameterError(
                f"sigma must be positive, got {self.sigma}"
            )
        if not 1.0 < self.alpha < 2.0:
            raise InvalidStableParameterError(
                f"alpha must lie in (1, 2), got {self.alpha}"
            )
        if not -1.0 <= self.beta <= 1.0:
            raise InvalidStableParameterError(
                f"beta must lie in [-1, 1], got {self.beta}"
            )

    @property
    def skew_tangent(self) -> float:
        return math.tan(0.5 * math.pi * self.alpha)


def exponent_from_tail(src: SourceLaw, *, literal_cosine: bool = False) -> StableParams:
    """Map tail data to exponent-form parameters.

    ``sigma = c_s * Gamma(3-alpha) / (alpha (alpha-1)) * |cos(pi alpha/2)|``
    and ``beta = p - q``. Passing ``literal_cosine=True`` uses the raw
    (negative) cosine instead of its absolute value; the resulting
    non-positive scale is rejected by ``StableParams``, which is the
    executable falsifier for the sign convention.
    """
    a = src.alpha
    cosine = math.cos(0.5 * math.pi * a)
    if not literal_cosine:
        cosine = abs(cosine)
    sigma = src.c_s * _gamma_fn(3.0 - a) / (a * (a - 1.0)) * cosine
    return StableParams(sigma=sigma, alpha=a, beta=src.p - src.q)


def charfn_stable(params: StableParams, xi) -> np.ndarray | complex:
    """``exp(-sigma |xi|^alpha (1 + i beta sgn(xi) tan(pi alpha/2)))``."""
    x = np.asarray(xi, dtype=float)
    mag = np.abs(x) ** params.alpha
    phase = params.beta * np.sign(x) * params.skew_tangent
    out = np.exp(-params.sigma * mag * (1.0 + 1j * phase))
    return out if np.ndim(xi) else complex(out)


def stable_density_at_zero(params: StableParams) -> float:
    """Closed-form density at the origin (principal complex branch)."""
    a = params.alpha
    root = (1.0 + 1j * params.beta * params.skew_tangent) ** (-1.0 / a)
    return float(
        _gamma_fn(1.0 + 1.0 / a)
        / (math.pi * params.sigma ** (1.0 / a))
        * root.real
    )


def _inversion_edges(params: StableParams, x_cap: float) -> np.ndarray:
    """Panel edges on [0, xi_max]: origin-graded, phase-capped."""
    xi_max = (_LOG_CUTOFF / params.sigma) ** (1.0 / params.alpha)
    width_cap = min(2.5 / (x_cap + 1.0), xi_max / 16.0)
    edges = [0.0]
    # geometric grading over six decades absorbs the |xi|^alpha kink at 0
    graded = xi_max * np.geomspace(1e-6, 1.0, 49)
    prev = 0.0
    for e in graded:
        if e - prev > width_cap:
            k = int(np.ceil((e - prev) / width_cap))
            edges.extend(np.linspace(prev, e, k + 1)[1:].tolist())
        else:
            edges.append(float(e))
        prev = edges[-1]
    return np.asarray(edges)


def _inversion_tail_bound(params: StableParams) -> float:
    """Bound on the discarded integral beyond the cutoff, divided by pi."""
    a = params.alpha
    xi_max = (_LOG_CUTOFF / params.sigma) ** (1.0 / a)
    # ∫_X^inf e^{-sigma xi^a} dxi <= e^{-sigma X^a} / (a sigma X^{a-1})
    return math.exp(-_LOG_CUTOFF) / (
        a * params.sigma * xi_max ** (a - 1.0)
    ) / math.pi


def _quadrature_density(
    params: StableParams, x: np.ndarray, abs_tol: float
) -> np.ndarray:
    t = params.skew_tangent
    x_cap = float(np.max(np.abs(x))) if x.size else 1.0
    edges = _inversion_edges(params, x_cap)
    tail = _inversion_tail_bound(params)
    for _ in range(4):
        out, drift = _dot_inversion(params, t, edges, x, check_order=True)
        residual = drift + tail
        if residual <= abs_tol:
            return out
        # halve every panel and retry
        edges = np.sort(np.concatenate([edges, 0.5 * (edges[1:] + edges[:-1])]))
    raise QuadratureError(
        "stable-density quadrature failed to reach the accuracy target",
        residual=residual,
    )


def _dot_inversion(params, t, edges, x, check_order):
    def values(order):
        nodes, weights = _panel_rule(edges, order)
        spectrum = weights * np.exp(
            -params.sigma * nodes**params.alpha * (1.0 + 1j * params.beta * t)
        )
        out = np.empty(x.size, dtype=float)
        chunk = max(1, int(2**22) // max(nodes.size, 1))
        for lo in range(0, x.size, chunk):
            blk = x[lo : lo + chunk]
            kernel = np.exp(1j * np.outer(nodes, blk))
            out[lo : lo + chunk] = (spectrum @ kernel).real / math.pi
        return out

    fine = values(24)
    if not check_order:
        return fine, 0.0
    coarse = values(12)
    drift = float(np.max(np.abs(fine - coarse))) if x.size else 0.0
    return fine, drift


def _panel_rule(edges, order):
    xg, wg = gauss_legendre(order)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
    weights = (half[:, None] * wg[None, :]).ravel()
    return nodes, weights


def _series_density(params: StableParams, x: np.ndarray) -> np.ndarray:
    """Tail expansion in powers of |x|^{-alpha}; use beyond the switch radius."""
    a = params.alpha
    t = params.skew_tangent
    base = 1.0 + 1j * params.beta * t
    out = np.zeros_like(x)
    absx = np.abs(x)
    sgn = np.sign(x)
    for side in (1.0, -1.0):
        sel = sgn == side
        if not np.any(sel):
            continue
        xa = absx[sel]
        acc = np.zeros_like(xa)
        env_scale = np.full_like(xa, np.inf)
        powc = 1.0 + 0.0j
        for k in range(1, 41):
            powc *= -params.sigma * base
            coef = (
                powc
                * _gamma_fn(k * a + 1.0)
                / math.factorial(k)
                * np.exp(1j * side * 0.5 * math.pi * (k * a + 1.0))
            )
            # Optimal truncation must track the full complex coefficient
            # envelope: the real part alone vanishes (to roundoff) at
            # certain (alpha, beta) phase alignments, and a collapsed
            # running minimum would wrongly flag every later term as the
            # start of asymptotic growth.
            envelope = abs(coef) / math.pi * xa ** (-(k * a + 1.0))
            term = coef.real / math.pi * xa ** (-(k * a + 1.0))
            growing = envelope > env_scale
            acc += np.where(growing, 0.0, term)  # asymptotic: stop at min term
            env_scale = np.where(growing, env_scale, np.minimum(env_scale, envelope))
            if np.all(envelope <= 1e-18 * (np.abs(acc) + 1e-300)):
                break
        out[sel] = acc
    return out


def stable_density(params: StableParams, x, abs_tol: float = 1e-9):
    """Stable density by certified Fourier inversion (plus tail expansion).

    Absolute accuracy target ``abs_tol`` (default 1e-9) for the quadrature
    region ``|x| <= 30 sigma^(1/alpha)``; beyond it the tail series is used,
    whose optimal-truncation error at the crossover is negligible (the
    smallest retained term is ~1e-50 of the leading one) and improves
    further with ``|x|``. The switch scales with ``sigma^(1/alpha)`` because
    that is the law's natural length unit: in those units the expansion
    parameter at the crossover is the same for every ``sigma``.
    """
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty_like(arr)
    near = np.abs(arr) <= _SERIES_SWITCH * params.sigma ** (1.0 / params.alpha)
    if np.any(near):
        out[near] = _quadrature_density(params, arr[near], abs_tol)
    if np.any(~near):
        out[~near] = _series_density(params, arr[~near])
    return out if np.ndim(x) else float(out[0])
