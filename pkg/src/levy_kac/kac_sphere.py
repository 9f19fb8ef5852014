"""Sphere-conditioned product laws: normalisation, marginals, diagnostics.

Conditioning a product law ``f^{(x)N}`` on the energy shell ``|v|^2 = N``
produces an exchangeable law on the sphere of radius ``sqrt(N)``.  Every
quantity here routes through certified n-fold convolutions of the
squared-variable law (the distribution of ``X^2``), which turns sphere
integrals into ratios of one-dimensional convolution densities:

* the normalisation of the conditioned law is a convolution value at the
  total energy,
* its k-particle marginals are exact ratios of an (N-k)-fold and an N-fold
  convolution (every sphere-area factor cancels algebraically),
* entropy, relative entropy, Fisher information, and transport distances
  reduce to one-dimensional quadratures against those marginals.

All quadratures are deterministic Gauss-Legendre panel rules, so repeated
runs produce bit-identical numbers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.special import gammaln

from ._quadrature import geometric_edges, linear_edges, panel_nodes
from .clt_engine import _analytic_stable, nfold_log_density
from .densities import DensityModel, moments
from .errors import (
    CertificationError,
    InfiniteRelativeEntropyError,
    InputValidationError,
    QuadratureError,
)
from .stable import StableParams

__all__ = [
    "SphereLaw",
    "ChaosReport",
    "GridDensity",
    "sphere_law",
    "log_normalisation",
    "marginal_k",
    "l1_marginal_gap",
    "entropy_per_particle",
    "entropy_target",
    "relative_entropy",
    "cross_entropy_per_particle",
    "fisher_relative",
    "fisher_information",
    "pinsker_margin",
    "w1_first_marginal",
    "duality_lower_bound",
    "chaos_report",
]

_LOG_2PI = math.log(2.0 * math.pi)
_SQRT_PI = math.sqrt(math.pi)
# marginal values whose rigorous upper bound falls below exp(_EDGE_LOG) are
# reported as exactly zero instead of being pushed through the convolution
# engine; every consumer integrates against O(1) densities at tolerances of
# 1e-6 or looser, so the cut is far below anything observable
_EDGE_LOG = -40.0


# ----------------------------------------------------------------------
# Domain types
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class SphereLaw:
    """Product law of ``n`` unit-energy variables conditioned on the sphere.

    ``log_h_total`` caches the log of the n-fold squared-variable density at
    the total energy ``n`` (the only expensive datum every marginal shares),
    and ``h_accuracy`` records whether that value carries a full certificate
    (``"certified"``) or was forced past a failed one (``"forced"``).
    Instances are immutable and safe for concurrent use.
    """

    model: DensityModel
    n: int
    stable: StableParams | None
    log_h_total: float
    h_accuracy: str

    def __post_init__(self) -> None:
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)):
            raise InputValidationError("particle count must be an integer")
        if self.n < 3:
            raise InputValidationError("particle count must be at least 3")
        if not math.isfinite(self.log_h_total):
            raise InputValidationError(
                "the n-fold density must be positive at the total energy"
            )
        if self.h_accuracy not in ("certified", "forced"):
            raise InputValidationError(
                "h_accuracy must be 'certified' or 'forced'"
            )

    @property
    def radius(self) -> float:
        """Radius of the supporting sphere."""
        return math.sqrt(float(self.n))


@dataclass(frozen=True)
class ChaosReport:
    """Chaoticity diagnostics of one sphere-conditioned law.

    Distances compare the k-particle marginals with the tensor powers of the
    generator; the entropy pair tracks how fast the entropy per particle
    approaches its product-law limit.
    """

    n: int
    l1_gap_k1: float
    l1_gap_k2: float
    entropy_per_particle: float
    entropy_target: float
    w1_first_marginal: float
    pinsker_margin: float
    fisher_relative: float


@dataclass(frozen=True)
class GridDensity:
    """A probability density sampled on a strictly increasing 1-D grid."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0.0):
            raise InputValidationError(
                "grid must be 1-D, strictly increasing, with >= 2 points"
            )
        if values.shape != grid.shape:
            raise InputValidationError("values must match the grid point-wise")
        if not np.all(np.isfinite(values)) or np.any(values < 0.0):
            raise InputValidationError(
                "density values must be finite and non-negative"
            )

    @property
    def mass(self) -> float:
        """Trapezoid mass of the sampled density."""
        return float(np.trapezoid(self.values, self.grid))


# ----------------------------------------------------------------------
# Shared validation / plumbing
# ----------------------------------------------------------------------


def _check_model(model: DensityModel) -> DensityModel:
    if not isinstance(model, DensityModel):
        raise InputValidationError("expected a DensityModel instance")
    return model


def _check_law(law: SphereLaw) -> SphereLaw:
    if not isinstance(law, SphereLaw):
        raise InputValidationError("expected a SphereLaw instance")
    return law


def _check_count(n, minimum: int, what: str = "count") -> int:
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
        raise InputValidationError(f"{what} must be an integer")
    n = int(n)
    if n < minimum:
        raise InputValidationError(f"{what} must be at least {minimum}")
    return n


def _check_grid_pair(p: GridDensity, q: GridDensity) -> None:
    if not isinstance(p, GridDensity) or not isinstance(q, GridDensity):
        raise InputValidationError("expected GridDensity instances")
    if not np.array_equal(p.grid, q.grid):
        raise InputValidationError("grid densities must share one grid")


def _sup_density(model: DensityModel) -> float:
    """Safe upper bound for ``sup (f(x)+f(-x))/2`` (5% headroom)."""
    xs = np.linspace(0.0, 12.0, 4801)
    symm = 0.5 * (
        np.asarray(model.eval(xs), dtype=float)
        + np.asarray(model.eval(-xs), dtype=float)
    )
    return 1.05 * float(np.max(symm))


def _tail_integral(model: DensityModel, x0: float, p: float) -> float:
    """``int_{|x|>x0} |x|^p f(x) dx`` using the exact tail hook when valid."""
    x0 = float(x0)
    if model.tail_moment is not None:
        start = max(float(model.tail_start), x0)
        total = float(model.tail_moment(start, math.inf, p))
        if start > x0:
            nodes, weights = panel_nodes(linear_edges(x0, start, 32), 24)
            symm = np.asarray(model.eval(nodes), dtype=float) + np.asarray(
                model.eval(-nodes), dtype=float
            )
            total += float((symm * np.abs(nodes) ** p) @ weights)
        return total
    # no exact hook: march outward until the contribution underflows
    total = 0.0
    lo = x0
    for _ in range(200):
        hi = lo + 5.0
        nodes, weights = panel_nodes(linear_edges(lo, hi, 8), 24)
        symm = np.asarray(model.eval(nodes), dtype=float) + np.asarray(
            model.eval(-nodes), dtype=float
        )
        piece = float((symm * np.abs(nodes) ** p) @ weights)
        total += piece
        lo = hi
        if abs(piece) <= 1e-18 * (abs(total) + 1e-300):
            break
    return total


def _tail_mass(model: DensityModel, x0: float) -> float:
    """Two-sided mass of the generator beyond ``|x| = x0``."""
    return _tail_integral(model, x0, 0.0)


def _core_window(model: DensityModel) -> float:
    """Half-width beyond which tails are handled analytically or vanish."""
    if model.analytic_tail is not None:
        return max(float(model.tail_start), 30.0)
    x = 8.0
    while x < 512.0:
        vals = np.asarray(model.eval(np.array([x, -x])), dtype=float)
        if float(np.max(vals)) < 1e-280:
            return x
        x *= 1.5
    return 512.0


def _tail_blocks(
    fn: Callable[[np.ndarray], np.ndarray], x0: float, max_blocks: int = 60
) -> tuple[float, bool]:
    """Integrate ``fn`` (a combined two-sided integrand of ``|x|``) over
    doubling blocks ``[x0 2^j, x0 2^{j+1}]`` until the pieces stop mattering.

    Returns ``(total, converged)`` so callers can attach their own meaning
    to a divergent tail.
    """
    total = 0.0
    lo = x0
    for _ in range(max_blocks):
        nodes, weights = panel_nodes(geometric_edges(lo, 2.0 * lo, 4), 24)
        piece = float(np.asarray(fn(nodes), dtype=float) @ weights)
        total += piece
        lo *= 2.0
        if abs(piece) <= max(1e-14, 1e-12 * abs(total)):
            return total, True
    return total, False


# ----------------------------------------------------------------------
# Normalisation and law construction
# ----------------------------------------------------------------------


def _log_sphere_area(n: int) -> float:
    """log of the surface area of the unit sphere in n dimensions."""
    return math.log(2.0) + 0.5 * n * math.log(math.pi) - float(gammaln(0.5 * n))


def log_normalisation(
    model: DensityModel, n: int, u: float, *, force_cutoff: bool = False
) -> float:
    """Log-normalisation of ``f^{(x)n}`` restricted to the sphere of radius
    ``sqrt(u)``.

    The value equals ``log 2 + log h^{*n}(u) - log|S^{n-1}|
    - ((n-2)/2) log u`` where ``h`` is the squared-variable law of the
    generator; everything stays in the log domain so no ``n`` overflows.
    """
    _check_model(model)
    n = _check_count(n, 3, "particle count")
    u = float(u)
    if not (math.isfinite(u) and u > 0.0):
        raise InputValidationError("total energy u must be positive and finite")
    log_h = float(nfold_log_density(model, n, u, force_cutoff=force_cutoff))
    return _log_norm_value(n, u, log_h)


def _log_norm_value(n: int, u: float, log_h: float) -> float:
    if not math.isfinite(log_h):
        raise CertificationError(
            "the n-fold squared-variable density vanishes at the requested "
            "energy; the log-normalisation is undefined"
        )
    return (
        math.log(2.0)
        + log_h
        - _log_sphere_area(n)
        - 0.5 * (n - 2) * math.log(u)
    )


def sphere_law(
    model: DensityModel, n: int, *, force_cutoff: bool = False
) -> SphereLaw:
    """Build the law of ``n`` unit-energy variables conditioned on the
    sphere ``|v|^2 = n``, caching the shared normalisation datum."""
    _check_model(model)
    n = _check_count(n, 3, "particle count")
    mom = moments(model)
    if abs(mom.E - 1.0) > 1e-6:
        raise InputValidationError(
            f"model {model.name!r} is not unit-energy: |E-1| = "
            f"{abs(mom.E - 1.0):.3e}"
        )
    try:
        stable = _analytic_stable(model)
    except InputValidationError:
        stable = None  # light-tailed generator: no stable surrogate applies
    accuracy = "certified"
    try:
        log_h = float(nfold_log_density(model, n, float(n)))
    except CertificationError:
        if not force_cutoff:
            raise
        log_h = float(
            nfold_log_density(model, n, float(n), force_cutoff=True)
        )
        accuracy = "forced"
    return SphereLaw(
        model=model,
        n=n,
        stable=stable,
        log_h_total=log_h,
        h_accuracy=accuracy,
    )


def _log_norm_from_law(law: SphereLaw) -> float:
    return _log_norm_value(law.n, float(law.n), law.log_h_total)


# ----------------------------------------------------------------------
# Marginals
# ----------------------------------------------------------------------


def _edge_floor(law: SphereLaw, k: int) -> float:
    """Residual energy below which the k-marginal is provably < e^-40.

    Uses the Dirichlet-type bound ``h^{*m}(u) <= (c sqrt(pi))^m
    u^{m/2-1} / Gamma(m/2)`` with ``c = sup_t h(t) sqrt(t)``, which holds
    because ``h(t) <= c t^{-1/2}`` point-wise.
    """
    m = law.n - k
    c = _sup_density(law.model)
    log_c = math.log(c)
    rhs = (
        _EDGE_LOG
        - k * log_c
        - m * (log_c + math.log(_SQRT_PI))
        + float(gammaln(0.5 * m))
        + law.log_h_total
    )
    half = 0.5 * m - 1.0
    if half <= 0.0:
        return 0.0
    return min(math.exp(rhs / half), 0.5 * law.n)


def _marginal_batch(law: SphereLaw, k: int, pts: np.ndarray) -> np.ndarray:
    """k-particle marginal density on rows of ``pts`` (shape (m, k))."""
    n = law.n
    force = law.h_accuracy == "forced"
    sq = np.sum(pts * pts, axis=1)
    out = np.zeros(sq.size)
    u = float(n) - sq
    live = u > _edge_floor(law, k)
    if not np.any(live):
        return out
    with np.errstate(divide="ignore"):
        log_f = np.zeros(int(np.count_nonzero(live)))
        for j in range(k):
            col = np.asarray(law.model.eval(pts[live, j]), dtype=float)
            log_f = log_f + np.log(np.maximum(col, 0.0))
    log_h = np.asarray(
        nfold_log_density(law.model, n - k, u[live], force_cutoff=force),
        dtype=float,
    )
    log_pi = log_f + log_h - law.log_h_total
    # values certified to sit below the convolution noise floor come back as
    # -inf; treat any residual non-finite combination as an exact zero
    log_pi = np.where(np.isfinite(log_pi), log_pi, -math.inf)
    vals = np.exp(np.minimum(log_pi, 700.0))
    out[live] = vals
    return out


def marginal_k(law: SphereLaw, k: int, v) -> Union[float, np.ndarray]:
    """Exact k-particle marginal density of the sphere-conditioned law.

    The marginal equals ``f^{(x)k}(v) h^{*(n-k)}(n - |v|^2) / h^{*n}(n)``
    for ``|v|^2 < n`` and zero otherwise; the ratio form is exact because
    all sphere-area and radius powers cancel before evaluation.

    ``v`` may be a scalar (k=1), a length-k vector (one point), an (m,)
    array of scalars (k=1 batch), or an (m, k) batch of points; the return
    is a float for one point and an (m,) array for a batch.
    """
    _check_law(law)
    k = _check_count(k, 1, "marginal order k")
    if k > law.n - 3:
        raise InputValidationError(
            "marginal order k must satisfy k <= N - 3"
        )
    arr = np.asarray(v, dtype=float)
    single = False
    if arr.ndim == 0:
        if k != 1:
            raise InputValidationError(
                "a scalar point is only meaningful for k = 1"
            )
        pts = arr.reshape(1, 1)
        single = True
    elif arr.ndim == 1:
        if k == 1:
            pts = arr.reshape(-1, 1)
        elif arr.size == k:
            pts = arr.reshape(1, k)
            single = True
        else:
            raise InputValidationError(
                "a single point must have exactly k coordinates"
            )
    elif arr.ndim == 2 and arr.shape[1] == k:
        pts = arr
    else:
        raise InputValidationError(
            "points must be a scalar, a length-k vector, or an (m, k) array"
        )
    vals = _marginal_batch(law, k, pts)
    return float(vals[0]) if single else vals


def _k1_grid(law: SphereLaw) -> np.ndarray:
    return np.linspace(-law.radius, law.radius, 4097)


def _l1_k1_from(
    law: SphereLaw, grid: np.ndarray, pi1: np.ndarray
) -> float:
    f1 = np.asarray(law.model.eval(grid), dtype=float)
    core = float(np.trapezoid(np.abs(pi1 - f1), grid))
    return core + _tail_mass(law.model, law.radius)


def l1_marginal_gap(law: SphereLaw, k: int) -> float:
    """L1 distance between the k-particle marginal and ``f^{(x)k}``.

    Tensor-grid quadrature over ``[-sqrt(N), sqrt(N)]^k`` plus the exact
    mass of ``f^{(x)k}`` outside the box (the marginal itself carries no
    mass there).  Restricted to k in {1, 2}: the cost of a certified
    k-dimensional grid grows geometrically with k.
    """
    _check_law(law)
    if k not in (1, 2):
        raise InputValidationError(
            "L1 marginal gaps are computed for k in {1, 2} only"
        )
    if k > law.n - 3:
        raise InputValidationError(
            "marginal order k must satisfy k <= N - 3"
        )
    if k == 1:
        grid = _k1_grid(law)
        pi1 = _marginal_batch(law, 1, grid.reshape(-1, 1))
        return _l1_k1_from(law, grid, pi1)
    grid = np.linspace(-law.radius, law.radius, 193)
    gx, gy = np.meshgrid(grid, grid, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    pi2 = _marginal_batch(law, 2, pts).reshape(grid.size, grid.size)
    f1 = np.asarray(law.model.eval(grid), dtype=float)
    diff = np.abs(pi2 - np.multiply.outer(f1, f1))
    core = float(np.trapezoid(np.trapezoid(diff, grid, axis=1), grid, axis=0))
    t = _tail_mass(law.model, law.radius)
    return core + (1.0 - (1.0 - t) ** 2)


# ----------------------------------------------------------------------
# Entropy functionals
# ----------------------------------------------------------------------


def _marginal_quad(law: SphereLaw) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Quadrature nodes, weights, and first-marginal values with the
    edge-regularizing substitution ``v = sqrt(N) sin(theta)``."""
    rad = law.radius
    panels = max(64, 4 * math.ceil(rad))
    theta, tw = panel_nodes(linear_edges(-0.5 * math.pi, 0.5 * math.pi, panels), 24)
    v = rad * np.sin(theta)
    w = rad * np.cos(theta) * tw
    pi1 = _marginal_batch(law, 1, v.reshape(-1, 1))
    return v, w, pi1


def entropy_per_particle(law: SphereLaw) -> float:
    """Entropy per particle of the sphere-conditioned law relative to the
    uniform sphere measure: ``int Pi_1 log f - (1/N) log Z_N``.

    Identically zero for the unit gaussian, whose product law is constant
    on the sphere.
    """
    _check_law(law)
    v, w, pi1 = _marginal_quad(law)
    with np.errstate(divide="ignore"):
        log_f = np.log(
            np.maximum(np.asarray(law.model.eval(v), dtype=float), 0.0)
        )
    integrand = np.where(pi1 > 0.0, pi1 * log_f, 0.0)
    return float(integrand @ w) - _log_norm_from_law(law) / law.n


def _flogf_core(model: DensityModel) -> float:
    """``int f log f`` over the core window, split at the f = 1 level set."""
    x0 = _core_window(model)
    edges = linear_edges(-x0, x0, 512)
    crossings = _level_crossings(model, x0)
    if crossings:
        edges = np.unique(np.concatenate([edges, np.asarray(crossings)]))
    nodes, weights = panel_nodes(edges, 24)
    f = np.asarray(model.eval(nodes), dtype=float)
    with np.errstate(divide="ignore"):
        vals = np.where(f > 0.0, f * np.log(np.maximum(f, 1e-300)), 0.0)
    return float(vals @ weights)


def _level_crossings(model: DensityModel, x0: float) -> list[float]:
    xs = np.linspace(-x0, x0, 8193)
    vals = np.asarray(model.eval(xs), dtype=float) - 1.0
    idx = np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)
    roots: list[float] = []
    for i in idx:
        a, b = float(xs[i]), float(xs[i + 1])
        fa = float(model.eval(np.array([a]))[0]) - 1.0
        for _ in range(60):
            m = 0.5 * (a + b)
            fm = float(model.eval(np.array([m]))[0]) - 1.0
            if fa * fm <= 0.0:
                b = m
            else:
                a, fa = m, fm
        roots.append(0.5 * (a + b))
    return roots


def _flogf_tail(model: DensityModel, x0: float) -> float:
    """``int_{|x|>x0} f log f`` by doubling blocks (fast-decaying integrand)."""

    def fn(x: np.ndarray) -> np.ndarray:
        fp = np.asarray(model.eval(x), dtype=float)
        fm = np.asarray(model.eval(-x), dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(
                fp > 0.0, fp * np.log(np.maximum(fp, 1e-300)), 0.0
            ) + np.where(fm > 0.0, fm * np.log(np.maximum(fm, 1e-300)), 0.0)

    total, converged = _tail_blocks(fn, x0)
    if not converged:
        raise QuadratureError(
            "the f log f tail integral did not converge within the block "
            "budget"
        )
    return total


def entropy_target(model: DensityModel) -> float:
    """Limit of the entropy per particle: ``int f log f + (log 2pi + 1)/2``.

    Equals the relative entropy of the generator with respect to the unit
    gaussian whenever the generator has unit energy; zero exactly for the
    gaussian itself.
    """
    _check_model(model)
    x0 = _core_window(model)
    return (
        _flogf_core(model)
        + _flogf_tail(model, x0)
        + 0.5 * (_LOG_2PI + 1.0)
    )


def relative_entropy(gen: DensityModel, base: DensityModel) -> float:
    """``int g log(g/f)``: relative entropy of ``gen`` with respect to
    ``base``, with doubling-block tail handling for heavy generators.

    Certifiable whenever the generator's mass dies out before the base
    density leaves double-precision range (any light generator qualifies).
    Raises :class:`InfiniteRelativeEntropyError` when the base vanishes
    numerically where the generator still carries mass — the integral may
    diverge there, and double precision cannot tell; use
    :func:`entropy_target` for the gaussian-base case, which handles the
    gaussian log-density analytically.
    """
    _check_model(gen)
    _check_model(base)
    x0 = max(_core_window(gen), _core_window(base))

    def ratio_sum(x: np.ndarray) -> np.ndarray:
        out = np.zeros(x.size)
        for sign in (1.0, -1.0):
            g = np.asarray(gen.eval(sign * x), dtype=float)
            f = np.asarray(base.eval(sign * x), dtype=float)
            if np.any((g > 0.0) & (f <= 0.0)):
                raise InfiniteRelativeEntropyError(
                    f"base model {base.name!r} leaves double-precision "
                    f"range where {gen.name!r} still carries mass; the "
                    "log-ratio integral cannot be certified (and may "
                    "diverge)"
                )
            with np.errstate(divide="ignore"):
                out += np.where(
                    g > 0.0,
                    g
                    * (
                        np.log(np.maximum(g, 1e-300))
                        - np.log(np.maximum(f, 1e-300))
                    ),
                    0.0,
                )
        return out

    nodes, weights = panel_nodes(linear_edges(0.0, x0, 256), 24)
    core = float(ratio_sum(nodes) @ weights)
    tail, converged = _tail_blocks(ratio_sum, x0)
    if not converged:
        raise InfiniteRelativeEntropyError(
            f"the relative-entropy tail of {gen.name!r} against "
            f"{base.name!r} did not converge; the divergence indicates an "
            "infinite relative entropy"
        )
    return core + tail


def cross_entropy_per_particle(
    gen: DensityModel, base: DensityModel, n: int, *, force_cutoff: bool = False
) -> float:
    """Relative entropy per particle of the ``gen`` sphere law with respect
    to the ``base`` sphere law at the same particle count:
    ``int Pi_1(G_N) log(g/f) + (1/N)(log Z_N(f) - log Z_N(g))``.

    Converges to ``relative_entropy(gen, base)`` as ``n`` grows; exactly
    zero when both models coincide.
    """
    _check_model(gen)
    _check_model(base)
    glaw = sphere_law(gen, n, force_cutoff=force_cutoff)
    v, w, pi1 = _marginal_quad(glaw)
    g_vals = np.asarray(gen.eval(v), dtype=float)
    f_vals = np.asarray(base.eval(v), dtype=float)
    live = pi1 > 0.0
    if np.any(live & (f_vals <= 0.0)):
        raise InfiniteRelativeEntropyError(
            f"base model {base.name!r} vanishes inside the sphere support "
            f"of {gen.name!r}"
        )
    with np.errstate(divide="ignore"):
        log_ratio = np.log(np.maximum(g_vals, 1e-300)) - np.log(
            np.maximum(f_vals, 1e-300)
        )
    core = float(np.where(live, pi1 * log_ratio, 0.0) @ w)
    log_z_f = log_normalisation(
        base, glaw.n, float(glaw.n), force_cutoff=force_cutoff
    )
    log_z_g = _log_norm_from_law(glaw)
    return core + (log_z_f - log_z_g) / glaw.n


# ----------------------------------------------------------------------
# Fisher functionals
# ----------------------------------------------------------------------


def _require_deriv(model: DensityModel) -> None:
    if model.deriv is None:
        raise InputValidationError(
            f"model {model.name!r} has no derivative hook; supply `deriv` "
            "explicitly to evaluate Fisher functionals (the package never "
            "substitutes silent finite differences)"
        )


def _fisher_core(model: DensityModel, relative: bool) -> float:
    x0 = _core_window(model)
    nodes, weights = panel_nodes(linear_edges(-x0, x0, 512), 24)
    f = np.asarray(model.eval(nodes), dtype=float)
    d = np.asarray(model.deriv(nodes), dtype=float)
    live = f > 1e-300
    score = np.where(live, d / np.where(live, f, 1.0), 0.0)
    if relative:
        score = score + np.where(live, nodes, 0.0)
    core = float(np.where(live, score * score * f, 0.0) @ weights)
    return core + _fisher_tail(model, x0, relative)


def _fisher_tail(model: DensityModel, x0: float, relative: bool) -> float:
    tail = model.analytic_tail
    if tail is None:
        return 0.0  # the core window already extends past underflow
    slope = 1.0 + 2.0 * tail.alpha  # f'/f -> -slope/x on a power tail
    out = slope * slope * float(model.tail_moment(x0, math.inf, -2.0))
    if relative:
        s0 = float(model.tail_moment(x0, math.inf, 0.0))
        s2 = float(model.tail_moment(x0, math.inf, 2.0))
        f_edge = 0.5 * float(
            np.asarray(model.eval(np.array([x0])), dtype=float)[0]
            + np.asarray(model.eval(np.array([-x0])), dtype=float)[0]
        )
        # int_{|x|>X} 2 x f' = -4 X fbar(X) - 2 S0 by parts, plus the x^2 f
        # piece from expanding the squared relative score
        out += -4.0 * x0 * f_edge - 2.0 * s0 + s2
    return out


def fisher_relative(model: DensityModel) -> float:
    """Relative Fisher information with respect to the unit gaussian:
    ``int (f'/f + x)^2 f``, evaluated where ``f > 1e-300`` with exact
    power-tail corrections beyond the quadrature window."""
    _check_model(model)
    _require_deriv(model)
    return _fisher_core(model, relative=True)


def fisher_information(model: DensityModel) -> float:
    """Plain Fisher information ``int (f')^2 / f`` of the generator.

    Satisfies ``fisher_information = fisher_relative + 2 - int x^2 f``
    (integration by parts), which consumers use as a consistency check.
    """
    _check_model(model)
    _require_deriv(model)
    return _fisher_core(model, relative=False)


# ----------------------------------------------------------------------
# Grid-density inequalities and transport
# ----------------------------------------------------------------------


def pinsker_margin(p: GridDensity, q: GridDensity) -> float:
    """``sqrt(2 H(p|q)) - TV(p, q)`` with ``TV = (1/2) int |p-q|``.

    Non-negative for true probability densities by the Csiszar-Kullback-
    Pinsker inequality; both inputs must live on one grid and integrate to
    one within 1e-6.
    """
    _check_grid_pair(p, q)
    for gd, name in ((p, "first"), (q, "second")):
        if abs(gd.mass - 1.0) > 1e-6:
            raise InputValidationError(
                f"the {name} grid density integrates to {gd.mass:.8f}, "
                "not 1 within 1e-6"
            )
    if np.any((p.values > 0.0) & (q.values <= 0.0)):
        raise InputValidationError(
            "the supports are incompatible: q vanishes where p is positive"
        )
    with np.errstate(divide="ignore"):
        rel = np.where(
            p.values > 0.0,
            p.values
            * (
                np.log(np.maximum(p.values, 1e-300))
                - np.log(np.maximum(q.values, 1e-300))
            ),
            0.0,
        )
    entropy = max(float(np.trapezoid(rel, p.grid)), 0.0)
    tv = 0.5 * float(np.trapezoid(np.abs(p.values - q.values), p.grid))
    return math.sqrt(2.0 * entropy) - tv


def duality_lower_bound(mu: GridDensity, nu: GridDensity, phi) -> float:
    """Variational lower bound ``int phi dmu - log int e^phi dnu`` for the
    relative entropy ``H(mu|nu)``.

    ``phi`` is either a vectorized callable evaluated on the shared grid or
    an array of values on it, finite everywhere.
    """
    _check_grid_pair(mu, nu)
    if np.any((mu.values > 0.0) & (nu.values <= 0.0)):
        raise InputValidationError(
            "nu must be positive wherever mu carries mass"
        )
    vals = (
        np.asarray(phi(mu.grid), dtype=float)
        if callable(phi)
        else np.asarray(phi, dtype=float)
    )
    if vals.shape != mu.grid.shape:
        raise InputValidationError(
            "the test function must produce one value per grid point"
        )
    if not np.all(np.isfinite(vals)):
        raise InputValidationError(
            "the test function must be bounded (finite) on the grid"
        )
    mean_mu = float(np.trapezoid(vals * mu.values, mu.grid))
    exp_nu = float(np.trapezoid(np.exp(vals) * nu.values, nu.grid))
    return mean_mu - math.log(exp_nu)


def _w1_from(law: SphereLaw, grid: np.ndarray, pi1: np.ndarray) -> float:
    model = law.model
    rad = law.radius
    f1 = np.asarray(model.eval(grid), dtype=float)
    diff_cdf = cumulative_trapezoid(pi1 - f1, grid, initial=0.0)
    # the generator carries mass outside the sphere window while the
    # marginal does not: shift by the left-tail mass so both distribution
    # functions are compared on the same footing
    if model.log_survival_pair is not None:
        left = math.exp(float(model.log_survival_pair(rad)[1]))
    else:
        left = 0.5 * _tail_mass(model, rad)
    core = float(np.trapezoid(np.abs(diff_cdf - left), grid))
    outside = _tail_integral(model, rad, 1.0) - rad * _tail_mass(model, rad)
    return core + outside


def w1_first_marginal(law: SphereLaw) -> float:
    """Kantorovich (W1) distance between the first marginal and the
    generator, via the distribution-function form ``int |F_{Pi_1} - F_f|``
    with an exact correction for the generator mass outside the sphere."""
    _check_law(law)
    grid = _k1_grid(law)
    pi1 = _marginal_batch(law, 1, grid.reshape(-1, 1))
    return _w1_from(law, grid, pi1)


# ----------------------------------------------------------------------
# Composite report
# ----------------------------------------------------------------------


def _wing_extent(model: DensityModel) -> float:
    for x in (40.0, 80.0, 160.0, 320.0, 640.0):
        if _tail_mass(model, x) < 5e-8:
            return x
    return 1280.0


def _pinsker_pair(
    law: SphereLaw, grid: np.ndarray, pi1: np.ndarray
) -> tuple[GridDensity, GridDensity]:
    """First marginal (zero-extended) vs generator on one graded grid.

    The grid keeps the dense core on the sphere window and adds geometric
    wings wide enough that the generator's omitted tail mass is far below
    the 1e-6 normalisation tolerance; both samplings are renormalized by
    their trapezoid mass to erase pure discretization defects.
    """
    model = law.model
    wing_hi = _wing_extent(model)
    right = np.geomspace(law.radius * 1.0005, wing_hi, 257)
    full = np.concatenate([-right[::-1], grid, right])
    p = np.concatenate([np.zeros(right.size), pi1, np.zeros(right.size)])
    q = np.asarray(model.eval(full), dtype=float)
    p = p / max(float(np.trapezoid(p, full)), 1e-300)
    q = q / max(float(np.trapezoid(q, full)), 1e-300)
    return GridDensity(full, p), GridDensity(full, q)


def chaos_report(
    model: DensityModel, n: int, *, force_cutoff: bool = False
) -> ChaosReport:
    """One-stop chaoticity diagnostics of the sphere-conditioned law.

    Shares a single first-marginal evaluation across the L1, transport, and
    Pinsker diagnostics, so the convolution engine runs once per marginal
    order rather than once per statistic.
    """
    law = sphere_law(model, n, force_cutoff=force_cutoff)
    grid = _k1_grid(law)
    pi1 = _marginal_batch(law, 1, grid.reshape(-1, 1))
    margin = pinsker_margin(*_pinsker_pair(law, grid, pi1))
    return ChaosReport(
        n=law.n,
        l1_gap_k1=_l1_k1_from(law, grid, pi1),
        l1_gap_k2=l1_marginal_gap(law, 2),
        entropy_per_particle=entropy_per_particle(law),
        entropy_target=entropy_target(model),
        w1_first_marginal=_w1_from(law, grid, pi1),
        pinsker_margin=margin,
        fisher_relative=fisher_relative(model),
    )
