import itertools
import math

import numpy as np
import pytest
from scipy import integrate, stats as sps

from fasris.bler import sinr_set
from fasris.channel import (
    RHO0,
    BcaModel,
    CltStats,
    PortCorrelation,
    cdf_opt_gain,
    cdf_sinr_cc,
    cdf_sq_gain,
    clt_stats,
    fit_bca,
    pdf_opt_gain,
    pdf_sinr_ec,
    pdf_sq_gain,
    port_correlation,
    sq_gain_support,
    user_stats,
)
from fasris.montecarlo import sample_opt_gain
from fasris.numerics import DomainError


# ---------------------------------------------------------------- correlation

def test_port_correlation_entries():
    corr = port_correlation(5, 5.0)
    S = corr.matrix
    assert np.allclose(np.diag(S), 1.0)
    assert np.allclose(S, S.T)
    x = 2 * math.pi * 5 / 4
    assert S[0, 1] == pytest.approx(math.sin(x) / x)
    assert S[0, 1] == pytest.approx(0.1273, abs=1e-4)
    for k in range(5):
        assert np.allclose(np.diag(S, k), S[0, k])
    assert corr.min_eigenvalue >= -1e-10


def test_port_correlation_factor_reproduces_matrix():
    corr = port_correlation(12, 1.0)
    F = np.asarray(corr.factor)
    assert np.allclose(F @ F.T, corr.matrix, atol=1e-8)


def test_port_correlation_rejects_bad_input():
    with pytest.raises(DomainError):
        port_correlation(1, 5.0)
    with pytest.raises(DomainError):
        port_correlation(4, 0.0)


def _frobenius(S, sizes, mu):
    return np.linalg.norm(S - BcaModel(len(sizes), tuple(sizes), mu).matrix())


def _brute_force_partition(S, B, mu):
    L = S.shape[0]
    best = None
    for cuts in itertools.combinations(range(1, L), B - 1):
        edges = (0,) + cuts + (L,)
        sizes = [b - a for a, b in zip(edges, edges[1:])]
        d = _frobenius(S, sizes, mu)
        if best is None or d < best[0] - 1e-15:
            best = (d, tuple(sizes))
    return best


def test_bca_defaults_match_exhaustive_search():
    corr = port_correlation(5, 5.0)
    bca = fit_bca(corr)
    assert bca.B == 5 and bca.block_sizes == (1, 1, 1, 1, 1)
    d, sizes = _brute_force_partition(corr.matrix, bca.B, bca.mu)
    assert bca.block_sizes == sizes
    assert bca.distance == pytest.approx(d)


@pytest.mark.parametrize("L, W", [(6, 1.0), (8, 0.5), (10, 2.0), (7, 0.3)])
def test_bca_partition_is_optimal(L, W):
    corr = port_correlation(L, W)
    bca = fit_bca(corr)
    assert sum(bca.block_sizes) == L and bca.B <= L
    assert all(isinstance(s, int) and s >= 1 for s in bca.block_sizes)
    d, _ = _brute_force_partition(corr.matrix, bca.B, bca.mu)
    assert bca.distance == pytest.approx(d, abs=1e-12)


def test_bca_identity_and_all_ones():
    assert fit_bca(PortCorrelation.from_matrix(np.eye(6))).block_sizes == (1,) * 6
    full = fit_bca(PortCorrelation.from_matrix(np.ones((6, 6))))
    assert full.B == 1 and full.block_sizes == (6,)


# ---------------------------------------------------------------- CLT statistics

def test_clt_moments(params):
    s = user_stats(params, "C")
    assert s.mean == pytest.approx(2.5 * math.pi)
    assert s.variance == pytest.approx(20 * 0.25 * (1 - math.pi ** 2 / 16))
    assert s.variance == pytest.approx(1.9158, abs=1e-4)
    assert s.rho0 == pytest.approx(0.43990, abs=1e-5)
    ratio = (math.pi ** 2 / 16) / (1 - math.pi ** 2 / 16) * params.M
    assert s.mean ** 2 / s.variance == pytest.approx(ratio)
    with pytest.raises(DomainError):
        clt_stats(params, "X", fit_bca(port_correlation(5, 5.0)))


def test_rho0_is_shared_channel_correlation(rng):
    # two ports that share |h| but have independent |v| are correlated by exactly rho0
    n = 400_000
    h = np.abs(rng.standard_normal(n) + 1j * rng.standard_normal(n))
    v1 = np.abs(rng.standard_normal(n) + 1j * rng.standard_normal(n))
    v2 = np.abs(rng.standard_normal(n) + 1j * rng.standard_normal(n))
    assert np.corrcoef(h * v1, h * v2)[0, 1] == pytest.approx(RHO0, abs=5e-3)


# ---------------------------------------------------------------- amplitude law

def test_cdf_tails(params):
    s = user_stats(params, "C")
    assert cdf_opt_gain(s.mean - 20 * s.std, s) < 1e-6
    assert cdf_opt_gain(s.mean + 20 * s.std, s) == pytest.approx(1.0, abs=1e-4)


def _mixture_cdf_oracle(y, s):
    sd_r = math.sqrt((1 - s.rho0) * s.variance)

    def body(d0):
        return sps.norm.cdf((y - s.mean - math.sqrt(s.rho0) * d0) / sd_r) ** s.B * sps.norm.pdf(d0, scale=s.std)

    return integrate.quad(body, -12 * s.std, 12 * s.std, epsabs=1e-12, limit=200)[0]


@pytest.mark.parametrize("B", [1, 3, 5])
def test_cdf_matches_mixture_oracle(B):
    s = CltStats(7.854, 1.9158, RHO0, B)
    for y in s.mean + s.std * np.array([-3.0, -1.0, 0.0, 1.5, 3.0]):
        assert cdf_opt_gain(y, s) == pytest.approx(_mixture_cdf_oracle(y, s), abs=1e-4)
    # a single block collapses to the plain Gaussian
    if B == 1:
        y = s.mean + 0.7 * s.std
        assert cdf_opt_gain(y, s) == pytest.approx(sps.norm.cdf(0.7), abs=1e-6)


def test_more_blocks_is_stochastically_larger():
    y = 7.854 + np.linspace(0, 4, 9) * 1.38
    one = cdf_opt_gain(y, CltStats(7.854, 1.9158, RHO0, 1))
    four = cdf_opt_gain(y, CltStats(7.854, 1.9158, RHO0, 4))
    assert np.all(one >= four)


def test_pdf_normalisation_and_derivative(params):
    s = user_stats(params, "C")
    y = np.linspace(s.mean - 10 * s.std, s.mean + 10 * s.std, 200_001)
    assert np.sum(pdf_opt_gain(y, s)) * (y[1] - y[0]) == pytest.approx(1.0, abs=1e-3)
    h = 1e-4
    fd = (cdf_opt_gain(s.mean + h, s) - cdf_opt_gain(s.mean - h, s)) / (2 * h)
    assert pdf_opt_gain(s.mean, s) == pytest.approx(fd, rel=1e-4)
    assert pdf_opt_gain(s.mean - 15 * s.std, s) < 1e-10


def test_cdf_is_monotone_and_bounded(params):
    s = user_stats(params, "E")
    F = cdf_opt_gain(np.linspace(-5, 10, 3001), s)
    assert np.all(np.diff(F) >= 0) and F.min() >= 0 and F.max() <= 1


def test_squared_gain_law(params):
    s = user_stats(params, "C")
    assert cdf_sq_gain(s.mean ** 2, s) == pytest.approx(cdf_opt_gain(s.mean, s))
    lo, hi = sq_gain_support(s)
    z = np.linspace(lo, hi, 400_001)
    assert np.sum(pdf_sq_gain(z, s)) * (z[1] - z[0]) == pytest.approx(1.0, abs=1e-3)
    assert pdf_sq_gain(0.0, s) == 0.0
    with pytest.raises(DomainError):
        pdf_sq_gain(-1.0, s)
    with pytest.raises(DomainError):
        cdf_sq_gain(-1.0, s)


@pytest.mark.slow
def test_gain_law_matches_simulation(params):
    s = user_stats(params, "C")
    draws = sample_opt_gain(params, "C", 200_000, seed=11)
    ks = sps.kstest(draws, lambda y: cdf_opt_gain(y, s)).statistic
    assert ks < 0.03
    ks_sq = sps.kstest(draws ** 2, lambda t: cdf_sq_gain(t, s)).statistic
    assert ks_sq < 0.03

    gcc = sinr_set(draws ** 2, 0.0, params).gamma_CC
    assert cdf_sinr_cc(2.0, params, s) == pytest.approx(np.mean(gcc < 2.0), abs=0.01)


# ---------------------------------------------------------------- SINR laws

def test_cdf_sinr_cc_limits(params):
    s = user_stats(params, "C")
    assert cdf_sinr_cc(0.0, params, s) < 1e-12
    assert cdf_sinr_cc(4.001, params, s) == 1.0
    t = np.linspace(0, 5, 501)
    F = cdf_sinr_cc(t, params, s)
    assert np.all(np.diff(F) >= 0) and np.all(F[t > 4] == 1.0)


def test_pdf_sinr_ec_support_and_mass(params):
    s = user_stats(params, "E")
    assert pdf_sinr_ec(4.0, params, s) == 0.0
    assert pdf_sinr_ec(5.0, params, s) == 0.0
    assert pdf_sinr_ec(-0.1, params, s) == 0.0
    y = np.linspace(0, 4, 400_001)[:-1]
    f = pdf_sinr_ec(y, params, s)
    assert f.max() > 0
    assert np.sum(f) * (y[1] - y[0]) == pytest.approx(1.0, abs=1e-3)


def _model_draws(stats, n, rng):
    d0 = rng.standard_normal(n) * stats.std
    dk = rng.standard_normal((n, stats.B)) * stats.std
    return (stats.mean + math.sqrt(stats.rho0) * d0[:, None] + math.sqrt(1 - stats.rho0) * dk).max(axis=1)


def test_pdf_sinr_ec_matches_model_histogram(params, rng):
    s = user_stats(params, "E")
    gec = sinr_set(0.0, _model_draws(s, 1_000_000, rng) ** 2, params).gamma_EC
    lo, hi = np.quantile(gec, [0.05, 0.95])
    hist, edges = np.histogram(gec, bins=40, range=(lo, hi))
    dens = hist / (len(gec) * (edges[1] - edges[0]))
    ref = pdf_sinr_ec(0.5 * (edges[1:] + edges[:-1]), params, s)
    assert np.allclose(dens, ref, rtol=0.03)


@pytest.mark.slow
def test_pdf_sinr_ec_matches_histogram(params):
    s = user_stats(params, "E")
    draws = sample_opt_gain(params, "E", 200_000, seed=5)
    gec = sinr_set(0.0, draws ** 2, params).gamma_EC
    lo, hi = np.quantile(gec, [0.1, 0.9])
    hist, edges = np.histogram(gec, bins=200, range=(lo, hi))
    dens = hist / (len(gec) * (edges[1] - edges[0]))
    mids = 0.5 * (edges[1:] + edges[:-1])
    ref = pdf_sinr_ec(mids, params, s)
    # compare on 10-bin groups to tame histogram noise
    assert np.allclose(dens.reshape(20, 10).mean(1), ref.reshape(20, 10).mean(1), rtol=0.05)
