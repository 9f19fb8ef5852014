"""Sphere-conditioned product laws: normalisation, marginals, diagnostics."""

import math

import numpy as np
import pytest
from scipy.special import gammaln
from scipy.stats import chi2

from levy_kac import (
    GridDensity,
    InfiniteRelativeEntropyError,
    InputValidationError,
    chaos_report,
    cross_entropy_per_particle,
    duality_lower_bound,
    entropy_per_particle,
    entropy_target,
    fisher_information,
    fisher_relative,
    l1_marginal_gap,
    log_normalisation,
    make_model,
    marginal_k,
    moments,
    pinsker_margin,
    relative_entropy,
    sphere_law,
    w1_first_marginal,
)
from levy_kac._quadrature import linear_edges, panel_nodes

GAUSS = make_model("gauss")
QUARTIC = make_model("quartic")

# high-precision references computed by 40-digit quadrature of the closed
# densities: int f log f + (log 2pi + 1)/2 and int g log(g/f)
ENTROPY_TARGET_QUARTIC = 0.11213702275030591
REL_ENT_GAUSS_QUARTIC = 0.044049093629547803


def _marginal_mass(law) -> float:
    nodes, weights = panel_nodes(linear_edges(-math.pi / 2, math.pi / 2, 96), 24)
    v = law.radius * np.sin(nodes)
    density = marginal_k(law, 1, v)
    return float(np.sum(weights * law.radius * np.cos(nodes) * density))


# ----------------------------------------------------------------------
# Normalisation
# ----------------------------------------------------------------------


def test_gauss_log_normalisation_closed_form():
    # the gaussian product law is uniform on the sphere, so the
    # normalisation is the gaussian maximum on it: -(N/2) log(2 pi) - N/2
    for n in (4, 16, 64):
        got = log_normalisation(GAUSS, n, float(n))
        want = -0.5 * n * math.log(2.0 * math.pi) - 0.5 * n
        assert abs(got - want) < 1e-12 * n, n


def test_quartic_log_normalisation_approaches_gaussian_value():
    per = log_normalisation(QUARTIC, 1024, 1024.0) / 1024.0
    assert abs(per - (-0.5 * (math.log(2.0 * math.pi) + 1.0))) < 1e-2


def test_sphere_law_record():
    law = sphere_law(QUARTIC, 64)
    assert law.n == 64
    assert law.radius == 8.0
    assert law.h_accuracy == "certified"
    assert law.stable is not None
    assert abs(law.stable.sigma - 4.0 / (3.0 * math.sqrt(math.pi))) < 1e-12
    assert law.stable.alpha == 1.5
    light = sphere_law(GAUSS, 16)
    assert light.stable is None


def test_sphere_law_validation():
    with pytest.raises(InputValidationError):
        sphere_law(QUARTIC, 2)
    with pytest.raises(InputValidationError):
        sphere_law(QUARTIC, True)


# ----------------------------------------------------------------------
# Marginals
# ----------------------------------------------------------------------


def test_gauss_first_marginal_closed_form():
    # conditioning N(0,1)^N on the sphere of radius sqrt(N) gives the
    # projected beta law pi_1(v) = c_N (1 - v^2/N)^((N-3)/2)
    n = 64
    law = sphere_law(GAUSS, n)
    v = np.linspace(-7.0, 7.0, 29)
    log_c = (
        gammaln(0.5 * n)
        - gammaln(0.5 * (n - 1))
        - 0.5 * math.log(math.pi * n)
    )
    inside = 1.0 - v * v / n
    want = np.exp(log_c) * np.where(inside > 0.0, inside, 0.0) ** (0.5 * (n - 3))
    got = marginal_k(law, 1, v)
    assert np.max(np.abs(got - want)) < 1e-10


def test_first_marginal_mass_is_one():
    law = sphere_law(QUARTIC, 256)
    assert abs(_marginal_mass(law) - 1.0) < 1e-6


def test_marginal_batch_shapes():
    law = sphere_law(QUARTIC, 64)
    single = marginal_k(law, 1, 0.5)
    assert isinstance(single, float)
    batch = marginal_k(law, 1, np.array([0.0, 0.5, 20.0]))
    assert batch.shape == (3,)
    assert batch[2] == 0.0  # outside the sphere radius
    pair = marginal_k(law, 2, np.array([0.3, -0.4]))
    assert isinstance(pair, float) and pair > 0.0
    grid = marginal_k(law, 2, np.array([[0.3, -0.4], [1.0, 1.0]]))
    assert grid.shape == (2,)


def test_pair_marginal_integrates_to_first_marginal():
    law = sphere_law(QUARTIC, 64)
    nodes, weights = panel_nodes(linear_edges(-math.pi / 2, math.pi / 2, 64), 24)
    for v1 in (0.0, 0.7, 2.0):
        r2 = math.sqrt(64.0 - v1 * v1)
        v2 = r2 * np.sin(nodes)
        points = np.column_stack([np.full(v2.size, v1), v2])
        integrated = float(
            np.sum(weights * r2 * np.cos(nodes) * marginal_k(law, 2, points))
        )
        assert abs(integrated - marginal_k(law, 1, v1)) < 1e-5


def test_marginal_order_validation():
    law = sphere_law(QUARTIC, 8)
    with pytest.raises(InputValidationError):
        marginal_k(law, 0, 0.5)
    with pytest.raises(InputValidationError):
        marginal_k(law, 6, 0.5)  # k must stay <= N - 3
    with pytest.raises(InputValidationError):
        marginal_k(law, 3, 0.5)  # scalar point only meaningful for k = 1
    with pytest.raises(InputValidationError):
        l1_marginal_gap(law, 3)


# ----------------------------------------------------------------------
# Entropy functionals
# ----------------------------------------------------------------------


def test_gauss_entropy_per_particle_is_zero():
    for n in (16, 64, 256):
        law = sphere_law(GAUSS, n)
        assert abs(entropy_per_particle(law)) < 1e-6, n


def test_entropy_target_reference_values():
    assert abs(entropy_target(GAUSS)) < 1e-12
    assert abs(entropy_target(QUARTIC) - ENTROPY_TARGET_QUARTIC) < 1e-9


def test_relative_entropy_light_over_heavy():
    got = relative_entropy(GAUSS, QUARTIC)
    assert abs(got - REL_ENT_GAUSS_QUARTIC) < 1e-9
    assert abs(relative_entropy(GAUSS, GAUSS)) < 1e-12


def test_relative_entropy_heavy_over_light_is_not_certifiable():
    # the gaussian base underflows doubles while the quartic integrand
    # still carries mass; the helper must refuse rather than truncate
    with pytest.raises(InfiniteRelativeEntropyError):
        relative_entropy(QUARTIC, GAUSS)


def test_quartic_entropy_gap_shrinks():
    target = entropy_target(QUARTIC)
    gaps = []
    for n in (64, 256):
        law = sphere_law(QUARTIC, n)
        gaps.append(abs(entropy_per_particle(law) - target))
    assert gaps[1] < gaps[0]


def test_cross_entropy_per_particle():
    assert cross_entropy_per_particle(GAUSS, GAUSS, 32) == 0.0
    value = cross_entropy_per_particle(GAUSS, QUARTIC, 64)
    assert abs(value - REL_ENT_GAUSS_QUARTIC) < 0.02


# ----------------------------------------------------------------------
# Fisher information
# ----------------------------------------------------------------------


def test_fisher_reference_values():
    # 40-digit quadrature gives exactly 3/2 and 1/2 for the quartic law
    assert abs(fisher_information(QUARTIC) - 1.5) < 1e-9
    assert abs(fisher_relative(QUARTIC) - 0.5) < 1e-9
    assert abs(fisher_information(GAUSS) - 1.0) < 1e-9
    assert abs(fisher_relative(GAUSS)) < 1e-9


def test_fisher_identity_links_absolute_and_relative():
    for name in ("gauss", "quartic", "power-tail:1.5", "mixture:0.25"):
        model = make_model(name)
        second = moments(model).second_moment
        lhs = fisher_information(model)
        rhs = fisher_relative(model) + 2.0 - second
        assert abs(lhs - rhs) < 1e-6, name


# ----------------------------------------------------------------------
# Inequality helpers
# ----------------------------------------------------------------------


def _perturbed_pair(rng) -> tuple[GridDensity, GridDensity]:
    x = np.linspace(-8.0, 8.0, 1601)
    base = np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    amp = rng.uniform(0.02, 0.3)
    freq = rng.uniform(0.3, 2.0)
    phase = rng.uniform(0.0, 2.0 * math.pi)
    bumped = base * (1.0 + amp * np.sin(freq * x + phase))
    bumped /= np.trapezoid(bumped, x)
    shift = rng.uniform(-0.3, 0.3)
    scale = rng.uniform(0.9, 1.15)
    other = np.exp(-0.5 * ((x - shift) / scale) ** 2) / (
        scale * math.sqrt(2.0 * math.pi)
    )
    other /= np.trapezoid(other, x)
    return GridDensity(x, bumped), GridDensity(x, other)


def test_pinsker_margin_on_random_pairs():
    rng = np.random.default_rng(2024)
    for _ in range(25):
        p, q = _perturbed_pair(rng)
        assert pinsker_margin(p, q) >= -1e-9


def test_pinsker_margin_zero_for_identical_laws():
    x = np.linspace(-6.0, 6.0, 801)
    p = np.exp(-0.5 * x * x)
    p /= np.trapezoid(p, x)
    g = GridDensity(x, p)
    assert abs(pinsker_margin(g, g)) < 1e-12


def test_duality_bound_never_exceeds_entropy():
    rng = np.random.default_rng(77)
    for _ in range(10):
        p, q = _perturbed_pair(rng)
        x = p.grid
        entropy = float(
            np.trapezoid(
                np.where(p.values > 0.0, p.values * np.log(
                    np.maximum(p.values, 1e-300) / np.maximum(q.values, 1e-300)
                ), 0.0),
                x,
            )
        )
        for _ in range(5):
            a = rng.uniform(-1.0, 1.0)
            b = rng.uniform(0.2, 3.0)
            c = rng.uniform(0.0, 2.0 * math.pi)
            phi = a * np.sin(b * x + c)
            bound = duality_lower_bound(p, q, phi)
            assert bound <= entropy + 1e-9
        # the log ratio itself attains the supremum
        sharp = np.log(np.maximum(p.values, 1e-300) / np.maximum(q.values, 1e-300))
        attained = duality_lower_bound(p, q, np.clip(sharp, -40.0, 40.0))
        assert attained >= 0.9 * entropy - 1e-9


def test_grid_density_validation():
    x = np.linspace(0.0, 1.0, 11)
    with pytest.raises(InputValidationError):
        GridDensity(x, -np.ones(11))
    with pytest.raises(InputValidationError):
        GridDensity(x[::-1], np.ones(11))
    with pytest.raises(InputValidationError):
        GridDensity(x, np.ones(10))
    with pytest.raises(InputValidationError):
        pinsker_margin(
            GridDensity(x, np.ones(11)),
            GridDensity(x + 5.0, np.ones(11)),
        )


# ----------------------------------------------------------------------
# Composite report
# ----------------------------------------------------------------------


def test_chaos_report_consistency():
    n = 64
    rep = chaos_report(QUARTIC, n)
    law = sphere_law(QUARTIC, n)
    assert rep.n == n
    assert abs(rep.l1_gap_k1 - l1_marginal_gap(law, 1)) < 1e-9
    assert abs(rep.entropy_target - entropy_target(QUARTIC)) < 1e-12
    assert abs(rep.entropy_per_particle - entropy_per_particle(law)) < 1e-9
    assert abs(rep.w1_first_marginal - w1_first_marginal(law)) < 1e-9
    assert rep.pinsker_margin >= -1e-9
    assert abs(rep.fisher_relative - 0.5) < 1e-9
    assert rep.l1_gap_k2 > 0.0
