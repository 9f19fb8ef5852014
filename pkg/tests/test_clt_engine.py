"""Spectral engine: transforms, convolution powers, certificates, probes."""

import math

import numpy as np
import pytest
from scipy.stats import chi2

import levy_kac.clt_engine as engine
from levy_kac import (
    CertificationError,
    InputValidationError,
    SourceLaw,
    StableParams,
    TailFitError,
    charfn_h,
    clt_sup_error,
    estimate_tail_law,
    exponent_from_tail,
    fda_order_check,
    h_of,
    highfreq_gap,
    lowfreq_envelope,
    make_model,
    nfold_density,
    nfold_log_density,
    omega,
    remainder,
    sample_charfn,
)

GAUSS = make_model("gauss")
QUARTIC = make_model("quartic")


@pytest.fixture(scope="module")
def fitted_params() -> StableParams:
    law = estimate_tail_law(QUARTIC, 1e4, 1e8)
    return exponent_from_tail(SourceLaw(law.c_s, law.alpha, law.p, law.q))


# ----------------------------------------------------------------------
# Characteristic function of the squared-variable law
# ----------------------------------------------------------------------


def test_charfn_gauss_closed_form():
    # int exp(-v^2/2)/sqrt(2 pi) e^{i xi v^2} dv = (1 - 2 i xi)^(-1/2)
    rng = np.random.default_rng(101)
    xi = rng.uniform(-50.0, 50.0, size=24)
    vals = np.asarray(charfn_h(GAUSS, xi), dtype=complex)
    oracle = (1.0 - 2.0j * xi) ** (-0.5)
    assert np.max(np.abs(vals - oracle)) < 1e-10


def test_charfn_quartic_reference_value():
    val = complex(charfn_h(QUARTIC, 0.5))
    assert abs(val - (0.853988392943560 + 0.247457733230926j)) < 1e-9


def test_charfn_basic_structure():
    assert complex(charfn_h(QUARTIC, 0.0)) == 1.0 + 0.0j
    xi = np.array([-2.0, 2.0])
    pair = np.asarray(charfn_h(QUARTIC, xi), dtype=complex)
    assert abs(pair[0] - np.conj(pair[1])) < 1e-12
    # squared-variable laws sit on (0, inf): modulus strictly below 1 off 0
    assert abs(pair[1]) < 1.0


def test_sample_charfn_record():
    freqs = [0.25, 0.5, 4.0]
    sample = sample_charfn(QUARTIC, freqs, abs_tol=1e-11)
    assert sample.abs_tol == 1e-11
    assert np.allclose(sample.freqs, freqs)
    direct = np.asarray(charfn_h(QUARTIC, np.asarray(freqs)), dtype=complex)
    assert np.max(np.abs(sample.values - direct)) < 1e-11


# ----------------------------------------------------------------------
# Convolution powers
# ----------------------------------------------------------------------


def test_nfold_gauss_matches_chi_square():
    u = np.linspace(1.0, 16.0, 31)
    vals = nfold_density(GAUSS, 4, u)
    ref = chi2.pdf(u, 4)
    assert np.max(np.abs(vals / ref - 1.0)) < 1e-8


def test_nfold_log_matches_far_tail_chi_square():
    # exponential tilting keeps the log density exact even where the linear
    # value underflows
    val = nfold_log_density(GAUSS, 63, 0.5)
    assert abs(val - chi2.logpdf(0.5, 63)) < 1e-7
    deep = nfold_log_density(GAUSS, 64, 500.0)
    assert abs(deep - chi2.logpdf(500.0, 64)) < 1e-6


def test_nfold_scalar_and_support():
    out = nfold_density(QUARTIC, 8, 8.0)
    assert isinstance(out, float) and out > 0.0
    assert nfold_density(QUARTIC, 8, -1.0) == 0.0
    assert nfold_density(QUARTIC, 8, 0.0) == 0.0
    assert nfold_log_density(QUARTIC, 8, -1.0) == -math.inf
    arr = nfold_density(QUARTIC, 8, np.array([-1.0, 4.0, 8.0]))
    assert arr.shape == (3,)
    assert arr[0] == 0.0 and arr[1] > 0.0


def test_nfold_rejects_bad_counts():
    with pytest.raises(InputValidationError):
        nfold_density(QUARTIC, 1, 1.0)
    with pytest.raises(InputValidationError):
        nfold_density(QUARTIC, True, 1.0)
    with pytest.raises(InputValidationError):
        nfold_density(QUARTIC, 2.5, 1.0)
    with pytest.raises(InputValidationError):
        nfold_density(QUARTIC, 4, [[1.0, 2.0]])


def test_nfold_semigroup_against_direct_convolution():
    # h^{*8} convolved with itself must reproduce h^{*16}; the discrete
    # convolution on a truncated grid is the independent reference
    du = 0.05
    grid = np.arange(du, 60.0, du)
    h8 = nfold_density(QUARTIC, 8, grid)
    conv = np.convolve(h8, h8)[: grid.size] * du
    h16 = nfold_density(QUARTIC, 16, grid)
    window = (grid > 10.0) & (grid < 30.0)
    rel = np.max(np.abs(conv[window] - h16[window]) / h16[window])
    assert rel < 0.03  # grid truncation + step discretization dominate


def test_untrusted_cutoff_raises_unless_forced(monkeypatch):
    monkeypatch.setattr(engine, "_TRUST", 1e-30)
    with pytest.raises(CertificationError, match="untrusted cutoff"):
        nfold_density(QUARTIC, 8, 8.0)
    forced = nfold_density(QUARTIC, 8, 8.0, force_cutoff=True)
    assert forced > 0.0
    reference = 0.0
    monkeypatch.setattr(engine, "_TRUST", 1e-12)
    reference = nfold_density(QUARTIC, 8, 8.0)
    assert abs(forced / reference - 1.0) < 1e-9


# ----------------------------------------------------------------------
# Windowed sup distance to the limit law
# ----------------------------------------------------------------------


def test_clt_sup_error_record_fields(fitted_params):
    rec = clt_sup_error(QUARTIC, 16, fitted_params)
    assert rec.N == 16
    assert rec.tau == 0.1
    assert abs(rec.beta_N - 16.0 ** (-1.0 / 2.2)) < 1e-14
    assert rec.trusted
    assert rec.highfreq_bound < 1e-12
    assert abs(rec.sup_err - 0.1819875700909856) < 1e-6
    assert abs(rec.gamma0_ratio - 0.98855483243399855) < 1e-6


def test_clt_sup_error_validation(fitted_params):
    with pytest.raises(InputValidationError):
        clt_sup_error(QUARTIC, 1, fitted_params)
    with pytest.raises(InputValidationError):
        clt_sup_error(QUARTIC, 16, fitted_params, tau=0.0)
    with pytest.raises(TailFitError):
        clt_sup_error(GAUSS, 16, fitted_params)


# ----------------------------------------------------------------------
# Frequency-split certificates
# ----------------------------------------------------------------------


def test_highfreq_gap_gauss_closed_form():
    # |charfn| = (1 + 4 xi^2)^(-1/4) is decreasing, so the sup over
    # |xi| >= 1 is attained at 1: gap = 1 - 5^(-1/4)
    gap = highfreq_gap(GAUSS, 1.0)
    assert abs(gap - (1.0 - 5.0 ** (-0.25))) < 1e-6


def test_highfreq_gap_quartic_positive_and_monotone():
    half = highfreq_gap(QUARTIC, 0.5)
    one = highfreq_gap(QUARTIC, 1.0)
    assert half > 0.0
    assert abs(half - 0.11088161360923843) < 1e-6
    assert one > half
    # the squared-variable wrapper resolves to the same generator
    assert abs(highfreq_gap(h_of(QUARTIC), 0.5) - half) < 1e-12


def test_lowfreq_envelope(fitted_params):
    beta0 = lowfreq_envelope(QUARTIC, fitted_params)
    assert abs(beta0 - 0.35694843546207561) < 1e-6
    inflated = StableParams(
        sigma=1e3, alpha=fitted_params.alpha, beta=fitted_params.beta
    )
    with pytest.raises(CertificationError):
        lowfreq_envelope(QUARTIC, inflated)


# ----------------------------------------------------------------------
# Remainder order probes
# ----------------------------------------------------------------------


def test_remainder_vanishes_at_low_frequency(fitted_params):
    eta = complex(remainder(QUARTIC, fitted_params, 1e-3))
    assert abs(eta) < 1e-3
    pair = np.asarray(
        remainder(QUARTIC, fitted_params, np.array([-0.5, 0.5])), dtype=complex
    )
    assert abs(pair[0] - np.conj(pair[1])) < 1e-12


def test_omega_probe_record(fitted_params):
    probe = omega(QUARTIC, fitted_params, 0.3)
    assert probe.beta == 0.3
    assert probe.n_samples == 256
    assert abs(probe.omega - 0.356467) < 1e-3
    with pytest.raises(InputValidationError):
        omega(QUARTIC, fitted_params, 0.0)


# ----------------------------------------------------------------------
# Weighted-distance order check
# ----------------------------------------------------------------------


def test_fda_order_check_report(fitted_params):
    rep = fda_order_check(QUARTIC, fitted_params, 0.25, 1e4)
    assert abs(rep.value - 0.06737283141652539) < 1e-4
    assert abs(rep.decay_exponent - (-0.8694417573387193)) < 0.05
    assert rep.assessed_finite is False


def test_fda_order_check_validation(fitted_params):
    with pytest.raises(InputValidationError):
        fda_order_check(QUARTIC, fitted_params, 0.75, 1e4)  # >= 2 - alpha
    with pytest.raises(InputValidationError):
        fda_order_check(QUARTIC, fitted_params, 0.25, 2.0)  # window too small
