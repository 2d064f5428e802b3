"""Achievable information rates under a Gaussian decoding metric.

Rates are for a uniformly distributed 4D constellation received in additive
Gaussian noise, decoded with an anisotropic diagonal Gaussian metric whose
per-polarization variances come from a NoiseProfile. The quadrature path
(`gh_air`) is deterministic and differentiable; the Monte-Carlo path
(`mc_air`) scores externally supplied channel samples and is the validation
backend for split-step simulations.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .constellations import Constellation4D
from .errors import ConfigError
from .linkmodel import NoiseProfile

# broadcast-block budget for the (block, M, nodes) exponent tensor
_BLOCK_ELEMENTS = 12_000_000


@dataclass(frozen=True)
class AirEstimate:
    """One rate evaluation in bit per 4D symbol.

    `std_error` is populated only by the Monte-Carlo backend; the quadrature
    backend is deterministic.
    """

    rate_bit_per_4d: float
    backend: str  # "gauss-hermite" or "monte-carlo"
    nodes_or_samples: int
    noise: NoiseProfile
    std_error: Optional[float] = None


@lru_cache(maxsize=8)
def _gh_nodes(order: int):
    # Physicists' Hermite nodes/weights; cached since the optimizer asks for
    # the same order thousands of times.
    t, w = np.polynomial.hermite.hermgauss(order)
    return t, w


@lru_cache(maxsize=8)
def _tensor_grid(order: int, ndim: int):
    """Tensor-product standard-normal nodes (K, ndim) and weights (K,).

    Weights are normalized so they sum to one: the Gauss-Hermite weights
    carry the 1/sqrt(pi) factor of the standard-normal change of variables.
    """
    t, w = _gh_nodes(order)
    axes = np.meshgrid(*([t] * ndim), indexing="ij")
    nodes = np.stack([a.ravel() for a in axes], axis=1)
    weights = np.ones(order**ndim)
    for a in np.meshgrid(*([w] * ndim), indexing="ij"):
        weights *= a.ravel()
    weights /= math.pi ** (ndim / 2.0)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def _evaluate(points: np.ndarray, sigma2: np.ndarray, order: int,
              want_grad: bool):
    """Quadrature rate (bits/symbol) of an (M, ndim) point set.

    Works in noise-centered coordinates y = x_i + z so a single node grid
    serves every symbol. With d_ij = x_i - x_j and Q = diag(1/sigma2), the
    log-metric ratio at node z is

        w_ij(z) = -d_ij^T Q d_ij / 2 - d_ij^T Q z,

    which is exactly 0 at j = i, so the inner log-sum-exp is nonnegative and
    the rate never exceeds log2(M). Returns (rate, grad) where grad is the
    (M, ndim) derivative of the rate with respect to the point coordinates
    at fixed metric, or None.
    """
    M, ndim = points.shape
    nodes, weights = _tensor_grid(order, ndim)
    Z_all = math.sqrt(2.0) * np.sqrt(sigma2)[None, :] * nodes  # noise samples
    K = Z_all.shape[0]
    Q = 1.0 / sigma2
    Xq = points * Q[None, :]
    G = Xq @ points.T
    E = np.sum(points * Xq, axis=1)

    acc = 0.0
    R1 = np.zeros((M, M)) if want_grad else None
    cz = np.zeros((M, ndim)) if want_grad else None
    # both axes are chunked so the (B, M, Kb) work block stays within the
    # element budget regardless of quadrature order
    kb = int(min(K, max(1, _BLOCK_ELEMENTS // M)))
    for klo in range(0, K, kb):
        Z = Z_all[klo:klo + kb]
        W = weights[klo:klo + kb]
        P = Xq @ Z.T  # (M, Kb) inner products <x_i, z_k>_Q
        block = max(1, _BLOCK_ELEMENTS // (M * Z.shape[0]))
        for lo in range(0, M, block):
            hi = min(M, lo + block)
            base = G[lo:hi, :] - 0.5 * E[None, :] - 0.5 * E[lo:hi, None]
            w = base[:, :, None] + P[None, :, :] - P[lo:hi, None, :]
            mx = w.max(axis=1)
            np.subtract(w, mx[:, None, :], out=w)
            np.exp(w, out=w)
            sw = w.sum(axis=1)  # (B, Kb)
            L = mx + np.log(sw)
            acc += float((L @ W).sum())
            if want_grad:
                np.divide(w, sw[:, None, :], out=w)  # responsibilities
                R1[lo:hi, :] += np.einsum("bjk,k->bj", w, W)
                cz += (w.sum(axis=0) * W[None, :]) @ Z

    rate = math.log2(M) - acc / (M * math.log(2.0))
    if not want_grad:
        return rate, None

    # Differentiating the double sum collects, per point p, its row and
    # column responsibilities: S = R1 + R1^T, deg_p = sum_j S_pj, plus the
    # node-weighted column flow cz. The zbar term vanishes by node symmetry
    # but is kept so finite differences match to roundoff.
    S = R1 + R1.T
    deg = S.sum(axis=1)
    zbar = weights @ Z_all
    grad = (deg[:, None] * points - S @ points + zbar[None, :] - cz)
    grad *= Q[None, :] / (M * math.log(2.0))
    return rate, grad


def gauss_hermite_rate(points, sigma2_per_dim, points_per_dim: int = 8) -> float:
    """Rate of an arbitrary-dimension point set; used for factorization checks.

    `points` is (M, ndim) real, `sigma2_per_dim` the per-dimension noise
    variances of the matched diagonal Gaussian metric.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise ConfigError("points must be an (M, ndim) array with M >= 2")
    s2 = np.asarray(sigma2_per_dim, dtype=float)
    if s2.shape != (pts.shape[1],):
        raise ConfigError("sigma2_per_dim length must match point dimension")
    if np.any(s2 <= 0):
        raise ConfigError("metric variances must be positive")
    if points_per_dim < 2:
        raise ConfigError("points_per_dim must be at least 2")
    rate, _ = _evaluate(pts, s2, points_per_dim, want_grad=False)
    return rate


def _scaled_points(C: Constellation4D, noise: NoiseProfile) -> np.ndarray:
    if noise.var_x <= 0 or noise.var_y <= 0:
        raise ConfigError("noise variances must be positive")
    if noise.launch_power_w <= 0:
        raise ConfigError("launch power must be positive")
    return C.points * math.sqrt(noise.launch_power_w)


def gh_air(C: Constellation4D, noise: NoiseProfile,
           points_per_dim: int = 8) -> AirEstimate:
    """Quadrature rate of C at the operating point described by `noise`.

    The constellation is taken unit-energy and scaled internally by the
    square root of the launch power, so `noise` variances are in physical
    (watt) units.
    """
    if points_per_dim < 2:
        raise ConfigError("points_per_dim must be at least 2")
    pts = _scaled_points(C, noise)
    rate, _ = _evaluate(pts, noise.sigma2_per_dim, points_per_dim,
                        want_grad=False)
    return AirEstimate(
        rate_bit_per_4d=rate,
        backend="gauss-hermite",
        nodes_or_samples=points_per_dim**4,
        noise=noise,
    )


def gh_air_gradient(C: Constellation4D, noise: NoiseProfile,
                    points_per_dim: int = 8) -> np.ndarray:
    """(M, 4) derivative of gh_air with respect to C's coordinates.

    The metric (NoiseProfile) is held fixed; any dependence of the noise on
    the constellation is the caller's business. Gradient is with respect to
    the unit-energy coordinates, so the internal power scaling contributes a
    sqrt(P) factor by the chain rule.
    """
    if points_per_dim < 2:
        raise ConfigError("points_per_dim must be at least 2")
    pts = _scaled_points(C, noise)
    _, grad = _evaluate(pts, noise.sigma2_per_dim, points_per_dim,
                        want_grad=True)
    return grad * math.sqrt(noise.launch_power_w)


def _as_real_points(rx_points) -> np.ndarray:
    rx = np.asarray(rx_points)
    if np.iscomplexobj(rx):
        if rx.ndim != 2 or rx.shape[1] != 2:
            raise ConfigError("complex samples must be (K, 2) pairs (sx, sy)")
        out = np.empty((rx.shape[0], 4))
        out[:, 0], out[:, 1] = rx[:, 0].real, rx[:, 0].imag
        out[:, 2], out[:, 3] = rx[:, 1].real, rx[:, 1].imag
        return out
    rx = rx.astype(float)
    if rx.ndim != 2 or rx.shape[1] != 4:
        raise ConfigError("samples must be a (K, 4) real array")
    return rx


def mc_air(C: Constellation4D, tx_indices, rx_points,
           noise: Optional[NoiseProfile] = None) -> AirEstimate:
    """Monte-Carlo rate from (transmitted index, received point) pairs.

    When `noise` is given, transmitted points are C scaled by the launch
    power and `rx_points` must be in the same physical frame. When it is
    None, points are used as-is and the per-polarization metric variances
    are estimated from the residuals, which is the usual situation for
    split-step output where the true decomposition is unknown.
    """
    tx_idx = np.asarray(tx_indices)
    rx = _as_real_points(rx_points)
    if tx_idx.ndim != 1 or tx_idx.shape[0] == 0:
        raise ConfigError("need at least one sample")
    if tx_idx.shape[0] != rx.shape[0]:
        raise ConfigError("tx_indices and rx_points lengths differ")
    if not np.issubdtype(tx_idx.dtype, np.integer):
        raise ConfigError("tx_indices must be integers")
    if tx_idx.min() < 0 or tx_idx.max() >= C.M:
        raise ConfigError("tx index out of range")

    if noise is None:
        resid = rx - C.points[tx_idx]
        vx = float(np.mean(resid[:, 0] ** 2 + resid[:, 1] ** 2))
        vy = float(np.mean(resid[:, 2] ** 2 + resid[:, 3] ** 2))
        if vx <= 0 or vy <= 0:
            raise ConfigError(
                "zero residual variance; supply a NoiseProfile explicitly")
        noise = NoiseProfile(var_x=vx, var_y=vy, p_ase=0.0,
                             p_nli_x=vx, p_nli_y=vy, launch_power_w=1.0)
        pts = C.points
    else:
        pts = _scaled_points(C, noise)

    sigma2 = noise.sigma2_per_dim
    Q = 1.0 / sigma2
    Xq = pts * Q[None, :]
    E = np.sum(pts * Xq, axis=1)
    K = rx.shape[0]
    M = C.M

    values = np.empty(K)
    block = max(1, _BLOCK_ELEMENTS // M)
    log2M = math.log2(M)
    for lo in range(0, K, block):
        hi = min(K, lo + block)
        A = rx[lo:hi] @ Xq.T - 0.5 * E[None, :]  # log q(y|x_j) + const
        anchor = A[np.arange(hi - lo), tx_idx[lo:hi]]
        mx = A.max(axis=1)
        L = mx + np.log(np.exp(A - mx[:, None]).sum(axis=1)) - anchor
        values[lo:hi] = log2M - L / math.log(2.0)

    rate = float(np.mean(values))
    se = float(np.std(values, ddof=1) / math.sqrt(K)) if K > 1 else 0.0
    return AirEstimate(
        rate_bit_per_4d=rate,
        backend="monte-carlo",
        nodes_or_samples=K,
        noise=noise,
        std_error=se,
    )
