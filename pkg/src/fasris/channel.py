"""
Channel statistics
==================

Fluid-antenna port correlation (3-D Clarke sinc model), the block-correlation
approximation (BCA) of that correlation, CLT moments of the RIS-cascaded
amplitude, and the distributions built on them:

  - CDF / PDF of the selected-port amplitude gamma_O
  - CDF / PDF of the squared amplitude |gamma_O|^2
  - CDF of the post-SIC CU SINR and PDF of the eavesdropper SINR on x_C

The max-of-ports law treats the B blocks as exchangeable Gaussians that share
a common component with weight rho0 and is evaluated with a fixed-order
Gauss-Chebyshev rule over the common component.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal

import numpy as np
from scipy.special import ndtr

from .numerics import DomainError, bisect_monotone, chebyshev_rule, sinc
from .params import SystemParams

__all__ = [
    "RHO0",
    "DEFAULT_BCA_MU",
    "DEFAULT_CDF_ORDER",
    "PortCorrelation",
    "BcaModel",
    "CltStats",
    "port_correlation",
    "fit_bca",
    "clt_stats",
    "user_stats",
    "cdf_opt_gain",
    "pdf_opt_gain",
    "cdf_sq_gain",
    "pdf_sq_gain",
    "sq_gain_support",
    "cdf_sinr_cc",
    "pdf_sinr_ec",
]

RHO0 = math.pi * (4.0 - math.pi) / (16.0 - math.pi ** 2)
DEFAULT_BCA_MU = 0.97
DEFAULT_CDF_ORDER = 30
EIG_CLIP = 1e-10
ENERGY_FRACTION = 0.999

User = Literal["C", "E"]


# ============================================================================
#  Port correlation and BCA
# ============================================================================

@dataclass(frozen=True, eq=False)
class PortCorrelation:
    """Symmetric Toeplitz port-correlation matrix plus a PSD square-root factor.

    ``factor @ factor.T`` reproduces the matrix with eigenvalues clipped at
    1e-10; ``clipped`` records whether clipping changed anything.
    """

    L: int
    matrix: np.ndarray
    factor: np.ndarray
    min_eigenvalue: float
    clipped: bool

    @classmethod
    def from_matrix(cls, matrix) -> "PortCorrelation":
        matrix = np.array(matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DomainError("correlation matrix must be square")
        if not np.allclose(matrix, matrix.T):
            raise DomainError("correlation matrix must be symmetric")
        eigval, eigvec = np.linalg.eigh(matrix)
        min_eig = float(eigval.min())
        clipped = bool(np.any(eigval < EIG_CLIP))
        factor = eigvec * np.sqrt(np.clip(eigval, EIG_CLIP, None))
        matrix.setflags(write=False)
        factor.setflags(write=False)
        return cls(matrix.shape[0], matrix, factor, min_eig, clipped)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


def port_correlation(L: int, W: float) -> PortCorrelation:
    """Entry (psi, omega) = sinc(2 pi (psi - omega) W / (L - 1))."""
    if int(L) != L or L < 2:
        raise DomainError(f"port correlation needs L >= 2, got {L!r}")
    if not W > 0:
        raise DomainError(f"W must be > 0, got {W!r}")
    lag = np.arange(L)
    matrix = sinc(2.0 * math.pi * (lag[:, None] - lag[None, :]) * W / (L - 1))
    return PortCorrelation.from_matrix(matrix)


@dataclass(frozen=True)
class BcaModel:
    """Block-diagonal constant-correlation approximation of a port correlation."""

    B: int
    block_sizes: tuple[int, ...]
    mu: float
    distance: float = field(default=0.0, compare=False)

    def __post_init__(self):
        if self.B < 1 or len(self.block_sizes) != self.B or min(self.block_sizes) < 1:
            raise DomainError(f"invalid block layout {self.block_sizes} for B={self.B}")

    @property
    def L(self) -> int:
        return sum(self.block_sizes)

    def matrix(self) -> np.ndarray:
        out = np.zeros((self.L, self.L))
        start = 0
        for size in self.block_sizes:
            out[start:start + size, start:start + size] = self.mu
            start += size
        np.fill_diagonal(out, 1.0)
        return out


def _block_count(eigenvalues: np.ndarray, fraction: float = ENERGY_FRACTION) -> int:
    lam = np.sort(np.clip(eigenvalues, 0.0, None))[::-1]
    cum = np.cumsum(lam)
    return int(np.searchsorted(cum, fraction * cum[-1] * (1 - 1e-12)) + 1)


def fit_bca(corr: PortCorrelation, mu: float = DEFAULT_BCA_MU) -> BcaModel:
    """Fit a BCA model: block count from eigen-energy, sizes by exact partition search.

    B is the smallest number of leading eigenvalues holding 99.9% of the trace.
    The contiguous partition into B blocks minimising the Frobenius distance to
    the block-diagonal model is found by dynamic programming, which is exact
    because the squared distance is a sum of per-block terms.
    """
    S = np.asarray(corr.matrix)
    L = S.shape[0]
    B = min(_block_count(corr.eigenvalues), L)

    off = S - np.diag(np.diag(S))
    base = float(np.sum(off ** 2))
    # block_gain[i, j]: change in squared distance if ports i..j-1 form one block
    block_gain = np.zeros((L + 1, L + 1))
    for i in range(L):
        for j in range(i + 1, L + 1):
            sub = off[i:j, i:j]
            mask = ~np.eye(j - i, dtype=bool)
            block_gain[i, j] = float(np.sum((sub[mask] - mu) ** 2 - sub[mask] ** 2))

    inf = math.inf
    cost = np.full((B + 1, L + 1), inf)
    split = np.zeros((B + 1, L + 1), dtype=int)
    cost[0, 0] = 0.0
    for b in range(1, B + 1):
        for j in range(b, L + 1):
            for i in range(b - 1, j):
                c = cost[b - 1, i] + block_gain[i, j]
                if c < cost[b, j] - 1e-15:
                    cost[b, j] = c
                    split[b, j] = i
    sizes = []
    j = L
    for b in range(B, 0, -1):
        i = int(split[b, j])
        sizes.append(int(j - i))
        j = i
    sizes.reverse()
    distance = math.sqrt(max(base + cost[B, L], 0.0))
    return BcaModel(B, tuple(sizes), mu, distance)


# ============================================================================
#  CLT statistics
# ============================================================================

@dataclass(frozen=True)
class CltStats:
    """Gaussian law of the cascaded amplitude at one port, and the block count.

    The B block maxima are modelled as E + sqrt(1-rho0) d_k + sqrt(rho0) d_0
    with d's i.i.d. N(0, variance).
    """

    mean: float
    variance: float
    rho0: float
    B: int
    user: str = "C"

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


def clt_stats(params: SystemParams, user: User, bca: BcaModel) -> CltStats:
    if user == "C":
        e1, e2 = params.eps1_C, params.eps2_C
    elif user == "E":
        e1, e2 = params.eps1_E, params.eps2_E
    else:
        raise DomainError(f"user must be 'C' or 'E', got {user!r}")
    mean = params.M * math.pi * math.sqrt(e1 * e2) / 4.0
    variance = params.M * e1 * e2 * (1.0 - math.pi ** 2 / 16.0)
    return CltStats(mean, variance, RHO0, bca.B, user)


def user_stats(params: SystemParams, user: User, mu: float = DEFAULT_BCA_MU) -> CltStats:
    """CLT statistics with the BCA fitted to the sinc correlation of ``params``."""
    if params.L == 1:
        bca = BcaModel(1, (1,), mu)
    else:
        bca = fit_bca(port_correlation(params.L, params.W), mu)
    return clt_stats(params, user, bca)


# ============================================================================
#  Selected-port amplitude distribution
# ============================================================================

@lru_cache(maxsize=64)
def _rule(order: int):
    return chebyshev_rule(order)


def _mixture_terms(y, stats: CltStats, rule_order: int, H: float | None):
    if int(rule_order) != rule_order or rule_order < 1:
        raise DomainError(f"rule_order must be a positive integer, got {rule_order!r}")
    rule = _rule(int(rule_order))
    H = 8.0 * stats.std if H is None else float(H)
    s = H * rule.nodes  # common component d_0 on [-H, H]
    w = H * rule.weights * np.exp(-0.5 * s * s / stats.variance) / math.sqrt(2 * math.pi * stats.variance)
    sd_r = math.sqrt((1.0 - stats.rho0) * stats.variance)
    y = np.asarray(y, dtype=float)
    z = (y[..., None] - stats.mean - math.sqrt(stats.rho0) * s) / sd_r
    return z, w, sd_r


def cdf_opt_gain(y, stats: CltStats, rule_order: int = DEFAULT_CDF_ORDER, H: float | None = None):
    """P(gamma_O < y) for the best of B blocks; vectorised in ``y``."""
    z, w, _ = _mixture_terms(y, stats, rule_order, H)
    out = np.clip((ndtr(z) ** stats.B) @ w, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def pdf_opt_gain(y, stats: CltStats, rule_order: int = DEFAULT_CDF_ORDER, H: float | None = None):
    z, w, sd_r = _mixture_terms(y, stats, rule_order, H)
    B = stats.B
    phi = np.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
    body = B * phi / sd_r if B == 1 else B * ndtr(z) ** (B - 1) * phi / sd_r
    out = np.clip(body @ w, 0.0, None)
    return float(out) if out.ndim == 0 else out


def cdf_sq_gain(t, stats: CltStats, rule_order: int = DEFAULT_CDF_ORDER, H: float | None = None):
    """P(|gamma_O|^2 < t) = F(sqrt t)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("squared gain must be >= 0")
    return cdf_opt_gain(np.sqrt(t), stats, rule_order, H)


def pdf_sq_gain(z, stats: CltStats, rule_order: int = DEFAULT_CDF_ORDER, H: float | None = None):
    """Density of |gamma_O|^2: f(sqrt z) / (2 sqrt z), defined as 0 at z = 0."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise DomainError("squared gain must be >= 0")
    root = np.sqrt(z)
    safe = np.where(root > 0, root, 1.0)
    out = np.where(root > 0, pdf_opt_gain(safe, stats, rule_order, H) / (2.0 * safe), 0.0)
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=256)
def sq_gain_support(stats: CltStats, rule_order: int = DEFAULT_CDF_ORDER, tail: float = 1e-12) -> tuple[float, float]:
    """Interval [lo, hi] of |gamma_O|^2 outside of which each tail holds < ``tail``."""
    sd = stats.std
    F = lambda y: float(cdf_opt_gain(y, stats, rule_order))
    lo_a, hi_a = stats.mean - 12.0 * sd, stats.mean + 12.0 * sd
    y_lo = bisect_monotone(F, tail, lo_a, stats.mean, tol=1e-10) if F(lo_a) < tail else lo_a
    y_hi = bisect_monotone(F, 1.0 - tail, stats.mean, hi_a, tol=1e-10) if F(hi_a) > 1.0 - tail else hi_a
    y_lo = max(y_lo, 0.0)
    return y_lo * y_lo, y_hi * y_hi


# ============================================================================
#  SINR distributions
# ============================================================================

def cdf_sinr_cc(t, params: SystemParams, stats_C: CltStats, rule_order: int = DEFAULT_CDF_ORDER):
    """CDF of the post-SIC CU SINR; exactly 1 above the ceiling a_C / (zeta a_E + rho_C^2)."""
    t = np.asarray(t, dtype=float)
    c = params.c_cc
    ceiling = params.a_C / c if c > 0 else math.inf
    below = t < ceiling
    tt = np.where(below, np.clip(t, 0.0, None), 0.0)
    gain = params.sigma2 * tt / ((params.a_C - c * tt) * params.gain_scale_C)
    out = np.where(below, cdf_opt_gain(np.sqrt(gain), stats_C, rule_order), 1.0)
    out = np.where(t < 0, 0.0, out)
    return float(out) if out.ndim == 0 else out


def pdf_sinr_ec(y, params: SystemParams, stats_E: CltStats, rule_order: int = DEFAULT_CDF_ORDER):
    """Density of the eavesdropper SINR on x_C, supported on [0, a_C / rho_E^2)."""
    y = np.asarray(y, dtype=float)
    r2 = params.rho2_E
    ceiling = params.a_C / r2 if r2 > 0 else math.inf
    inside = (y >= 0) & (y < ceiling)
    yy = np.where(inside, y, 0.0)
    denom = params.a_C - r2 * yy
    gain = params.sigma2 * yy / (denom * params.gain_scale_E)
    jac = params.a_C * params.sigma2 / (denom ** 2 * params.gain_scale_E)
    out = np.where(inside, jac * pdf_sq_gain(gain, stats_E, rule_order), 0.0)
    return float(out) if out.ndim == 0 else out
