"""
Monte Carlo channel simulator
=============================

Draws the RIS-cascaded port amplitudes gamma_l = sum_m |h_m| |v_{m,l}| with
correlated ports, selects the strongest port per user and averages the exact
secure BLER. Also runs the CLT goodness-of-fit study.

Random streams come from a Philox generator keyed by ``SeedSequence.spawn``
per fixed-size chunk, so results depend only on the seed and sample count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from .bler import secure_bler_instantaneous
from .channel import PortCorrelation, port_correlation
from .numerics import DomainError
from .params import SystemParams

__all__ = [
    "CHUNK_SIZE",
    "ChannelRealization",
    "McResult",
    "KsResult",
    "user_correlation",
    "sample_port_gains",
    "sample_realization",
    "mc_average_secure_bler",
    "sample_opt_gain",
    "ks_clt",
]

CHUNK_SIZE = 8192


@dataclass(frozen=True)
class ChannelRealization:
    """Port amplitudes of both users for a batch of independent draws (rows)."""

    gains_C: np.ndarray
    gains_E: np.ndarray
    selected_C: np.ndarray
    selected_E: np.ndarray

    @property
    def gain_sq_C(self) -> np.ndarray:
        return np.take_along_axis(self.gains_C, self.selected_C[:, None], axis=1)[:, 0] ** 2

    @property
    def gain_sq_E(self) -> np.ndarray:
        return np.take_along_axis(self.gains_E, self.selected_E[:, None], axis=1)[:, 0] ** 2


@dataclass(frozen=True)
class McResult:
    mean: float
    stderr: float
    n_samples: int
    seed: int


@dataclass(frozen=True)
class KsResult:
    M: int
    statistic: float
    n_samples: int


def user_correlation(params: SystemParams) -> PortCorrelation:
    """Port correlation for ``params``; a 1x1 identity when L == 1."""
    if params.L == 1:
        return PortCorrelation.from_matrix(np.ones((1, 1)))
    return port_correlation(params.L, params.W)


def _complex_normal(rng: np.random.Generator, shape, variance: float) -> np.ndarray:
    scale = math.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def sample_port_gains(
    params: SystemParams,
    user: str,
    corr: PortCorrelation,
    n: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """(n, L) array of co-phased cascaded amplitudes for ``user`` ('C' or 'E')."""
    if user == "C":
        e1, e2 = params.eps1_C, params.eps2_C
    elif user == "E":
        e1, e2 = params.eps1_E, params.eps2_E
    else:
        raise DomainError(f"user must be 'C' or 'E', got {user!r}")
    M, L = params.M, corr.L
    if params.rician_K is None:
        h = _complex_normal(rng, (n, M), e1)
    else:
        K = params.rician_K
        # LoS phase is irrelevant once the scatter is circular, so fix it at 0
        h = math.sqrt(K * e1 / (K + 1.0)) + _complex_normal(rng, (n, M), e1 / (K + 1.0))
    z = _complex_normal(rng, (n, M, L), 1.0)
    v = math.sqrt(e2) * (z @ np.asarray(corr.factor).T)
    return np.einsum("nm,nml->nl", np.abs(h), np.abs(v))


def sample_realization(
    params: SystemParams,
    corr_C: PortCorrelation,
    corr_E: PortCorrelation,
    rng: np.random.Generator,
    n: int = 1,
) -> ChannelRealization:
    gains_C = sample_port_gains(params, "C", corr_C, n, rng)
    gains_E = sample_port_gains(params, "E", corr_E, n, rng)
    # argmax returns the first maximum, i.e. the lowest port index on ties
    return ChannelRealization(gains_C, gains_E, np.argmax(gains_C, axis=1), np.argmax(gains_E, axis=1))


def _chunks(n_samples: int, seed: int):
    counts = [CHUNK_SIZE] * (n_samples // CHUNK_SIZE)
    if n_samples % CHUNK_SIZE:
        counts.append(n_samples % CHUNK_SIZE)
    streams = np.random.SeedSequence(seed).spawn(len(counts))
    for count, ss in zip(counts, streams):
        yield count, np.random.Generator(np.random.Philox(ss))


def mc_average_secure_bler(params: SystemParams, n_samples: int = 100_000, seed: int = 0) -> McResult:
    """Sample mean and standard error of the exact secure BLER."""
    if int(n_samples) != n_samples or n_samples < 1000:
        raise DomainError(f"n_samples must be an integer >= 1000, got {n_samples!r}")
    corr = user_correlation(params)
    sums, sq_sums = [], []
    for count, rng in _chunks(int(n_samples), seed):
        r = sample_realization(params, corr, corr, rng, count)
        eps = np.asarray(secure_bler_instantaneous(r.gain_sq_C, r.gain_sq_E, params), dtype=float)
        sums.append(float(np.sum(eps)))
        sq_sums.append(float(np.sum(eps * eps)))
    n = int(n_samples)
    mean = math.fsum(sums) / n
    var = max(math.fsum(sq_sums) / n - mean * mean, 0.0) * n / (n - 1)
    return McResult(min(max(mean, 0.0), 1.0), math.sqrt(var / n), n, seed)


def sample_opt_gain(params: SystemParams, user: str, n_samples: int, seed: int = 0) -> np.ndarray:
    """Selected-port amplitudes gamma_O for one user."""
    corr = user_correlation(params)
    out = [sample_port_gains(params, user, corr, count, rng).max(axis=1) for count, rng in _chunks(n_samples, seed)]
    return np.concatenate(out)


def ks_clt(
    params: SystemParams,
    M_values=(4, 8, 16, 20, 32),
    n_samples: int = 200_000,
    seed: int = 0,
    user: str = "C",
) -> list[KsResult]:
    """K-S distance between one port's amplitude and its CLT Gaussian, per M."""
    results = []
    single = params.replace(L=1)
    for M in M_values:
        p = single.replace(M=int(M))
        e1, e2 = (p.eps1_C, p.eps2_C) if user == "C" else (p.eps1_E, p.eps2_E)
        mean = M * math.pi * math.sqrt(e1 * e2) / 4.0
        std = math.sqrt(M * e1 * e2 * (1.0 - math.pi ** 2 / 16.0))
        draws = sample_opt_gain(p, user, n_samples, seed)
        stat = float(sps.kstest(draws, "norm", args=(mean, std)).statistic)
        results.append(KsResult(int(M), stat, n_samples))
    return results
