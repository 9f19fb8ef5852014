"""Stable laws: density evaluation, transforms, tail-to-exponent mapping."""

import cmath
import math

import numpy as np
import pytest
from scipy.stats import levy_stable

from levy_kac import (
    InvalidStableParameterError,
    SourceLaw,
    StableParams,
    charfn_stable,
    exponent_from_tail,
    stable_density,
    stable_density_at_zero,
)

SYM = StableParams(sigma=1.0, alpha=1.5, beta=0.0)
SKEW = StableParams(sigma=1.0, alpha=1.5, beta=1.0)


def test_symmetric_density_at_zero_closed_form():
    # (1/pi) int_0^inf exp(-xi^alpha) dxi = Gamma(1 + 1/alpha) / pi
    oracle = math.gamma(1.0 + 1.0 / 1.5) / math.pi
    assert abs(stable_density(SYM, 0.0) - oracle) < 1e-9
    assert abs(stable_density_at_zero(SYM) - oracle) < 1e-9


def test_skewed_density_reference_values():
    assert abs(stable_density(SKEW, 0.0) - 0.19751617184719186) < 1e-9
    assert abs(stable_density(SKEW, 3.0) - 0.027997317862926) < 1e-9
    assert abs(stable_density(SKEW, -3.0) - 0.063071442319811) < 1e-9


def test_density_matches_scipy_levy_stable():
    # scale convention: exponent sigma |xi|^alpha corresponds to the S1
    # parameterization with scale sigma^(1/alpha)
    rng = np.random.default_rng(42)
    x = np.sort(rng.uniform(-15.0, 15.0, size=21))
    for sigma, alpha, beta in ((1.0, 1.5, 1.0), (0.8, 1.3, 0.0), (2.0, 1.7, -0.5)):
        params = StableParams(sigma=sigma, alpha=alpha, beta=beta)
        mine = stable_density(params, x)
        ref = levy_stable.pdf(x, alpha, beta, scale=sigma ** (1.0 / alpha))
        assert np.max(np.abs(mine - ref)) < 5e-7, (sigma, alpha, beta)


def test_symmetric_density_is_even_and_positive():
    x = np.linspace(0.0, 30.0, 121)
    plus = stable_density(SYM, x)
    minus = stable_density(SYM, -x)
    assert np.max(np.abs(plus - minus)) < 1e-12
    assert np.all(plus > 0.0)


def test_density_mass_is_one():
    x = np.linspace(-400.0, 400.0, 40001)
    mass = float(np.trapezoid(stable_density(SYM, x), x))
    # the |x|^(-1-alpha) tails beyond the window carry ~4e-5
    assert abs(mass - 1.0) < 1e-3


def test_charfn_modulus_and_conjugacy():
    rng = np.random.default_rng(5)
    xi = rng.uniform(0.1, 8.0, size=16)
    vals = np.asarray(charfn_stable(SKEW, xi), dtype=complex)
    assert np.max(np.abs(np.abs(vals) - np.exp(-np.abs(xi) ** 1.5))) < 1e-12
    flipped = np.asarray(charfn_stable(SKEW, -xi), dtype=complex)
    assert np.max(np.abs(flipped - np.conj(vals))) < 1e-12
    assert cmath.isclose(complex(charfn_stable(SKEW, 0.0)), 1.0 + 0.0j)


def test_exponent_from_tail_quartic_closed_form():
    # c_s Gamma(3 - alpha) / (alpha (alpha - 1)) |cos(pi alpha / 2)| at
    # alpha = 3/2 and c_s = 2 sqrt2 / pi telescopes to exactly 4/(3 sqrt pi)
    src = SourceLaw(c_s=2.0 * math.sqrt(2.0) / math.pi, alpha=1.5, p=1.0, q=0.0)
    params = exponent_from_tail(src)
    assert abs(params.sigma - 4.0 / (3.0 * math.sqrt(math.pi))) < 1e-13
    assert params.alpha == 1.5
    assert abs(params.beta - 1.0) < 1e-12  # fully one-sided source law


def test_literal_cosine_convention_is_rejected():
    # cos(pi alpha / 2) < 0 on alpha in (1, 2): taking it literally flips the
    # scale negative, which is not a stable exponent
    src = SourceLaw(c_s=2.0 * math.sqrt(2.0) / math.pi, alpha=1.5, p=1.0, q=0.0)
    with pytest.raises(InvalidStableParameterError):
        exponent_from_tail(src, literal_cosine=True)


def test_invalid_parameters_are_rejected():
    with pytest.raises(InvalidStableParameterError):
        StableParams(sigma=0.0, alpha=1.5, beta=0.0)
    with pytest.raises(InvalidStableParameterError):
        StableParams(sigma=1.0, alpha=2.5, beta=0.0)
    with pytest.raises(InvalidStableParameterError):
        StableParams(sigma=1.0, alpha=1.5, beta=2.0)
    with pytest.raises(InvalidStableParameterError):
        StableParams(sigma=1.0, alpha=1.0, beta=0.0)
