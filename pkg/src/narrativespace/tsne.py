"""Exact dense t-SNE machinery.

Pairwise Euclidean distances, Gaussian conditionals with per-point bandwidths
bisected to a target perplexity, symmetrized high-dimensional affinities,
Student-t low-dimensional affinities, and the KL loss with its analytic
gradient. Everything is O(N^2) and exact; hot paths are numba-compiled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.spatial.distance import cdist

ENTROPY_TOL = 1e-5
MAX_BISECT_ITERS = 200
SIGMA_LO = 1e-20
SIGMA_HI = 1e20
LOG_FLOOR = 1e-12


class BisectionError(RuntimeError):
    pass


@dataclass(frozen=True)
class Bandwidths:
    """Per-point Gaussian bandwidths and the perplexity they were bisected to.

    ``clamped[i]`` marks rows where the target perplexity was unreachable and
    the bisection exited at a bracket bound (or at the degenerate-row default).
    """

    sigma: np.ndarray
    perplexity: float
    clamped: np.ndarray


def pairwise_distances(embeddings: np.ndarray) -> np.ndarray:
    """Exact Euclidean distance matrix: symmetric, zero diagonal."""
    x = np.asarray(embeddings, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("need at least 2 embedding rows")
    k = cdist(x, x, metric="euclidean")
    k = 0.5 * (k + k.T)
    np.fill_diagonal(k, 0.0)
    return k


@njit(cache=True)
def _row_entropy_bits(d2row, i, sigma):
    """Entropy (bits) of the Gaussian conditional p_{.|i} at bandwidth sigma."""
    n = d2row.shape[0]
    denom = 2.0 * sigma * sigma
    m = -np.inf
    for j in range(n):
        if j == i:
            continue
        v = -d2row[j] / denom
        if v > m:
            m = v
    s = 0.0
    t = 0.0
    for j in range(n):
        if j == i:
            continue
        e = np.exp(-d2row[j] / denom - m)
        s += e
        t += e * (-d2row[j] / denom - m)
    # H = log(s) - (sum e*(l-m))/s, in nats; convert to bits
    h = np.log(s) - t / s
    return h / np.log(2.0)


@njit(cache=True)
def _bisect_rows(d2, target_bits, sigma_out, clamped_out):
    n = d2.shape[0]
    fail_row = -1
    for i in range(n):
        degenerate = True
        for j in range(n):
            if j != i and d2[i, j] > 0.0:
                degenerate = False
                break
        if degenerate:
            sigma_out[i] = 1.0
            clamped_out[i] = True
            continue
        lo = SIGMA_LO
        hi = SIGMA_HI
        sigma = 1.0
        h = _row_entropy_bits(d2[i], i, sigma)
        it = 0
        while abs(h - target_bits) > ENTROPY_TOL and it < MAX_BISECT_ITERS:
            if h < target_bits:
                lo = sigma
            else:
                hi = sigma
            sigma = 0.5 * (lo + hi)
            h = _row_entropy_bits(d2[i], i, sigma)
            it += 1
        sigma_out[i] = sigma
        if abs(h - target_bits) > ENTROPY_TOL:
            if hi >= SIGMA_HI * 0.5 or lo <= SIGMA_LO * 2.0:
                clamped_out[i] = True
            else:
                fail_row = i
                break
    return fail_row


def bisect_bandwidths(K: np.ndarray, u: float) -> Bandwidths:
    """Binary-search each sigma_i so the conditional's perplexity equals u.

    Rows whose entropy cannot reach log2(u) (too few distinct neighbors) exit
    at the bracket bound and are flagged; rows with all-zero off-diagonal
    distances get sigma=1 and are flagged.
    """
    if u <= 1.0:
        raise ValueError("perplexity must be > 1")
    k = np.asarray(K, dtype=np.float64)
    n = k.shape[0]
    d2 = k * k
    sigma = np.empty(n)
    clamped = np.zeros(n, dtype=np.bool_)
    fail = _bisect_rows(d2, np.log2(u), sigma, clamped)
    if fail >= 0:
        raise BisectionError(f"bandwidth bisection did not converge for row {fail}")
    return Bandwidths(sigma=sigma, perplexity=float(u), clamped=clamped)


@njit(cache=True)
def _conditionals(d2, sigma, out):
    n = d2.shape[0]
    for i in range(n):
        denom = 2.0 * sigma[i] * sigma[i]
        m = -np.inf
        for j in range(n):
            if j == i:
                continue
            v = -d2[i, j] / denom
            if v > m:
                m = v
        s = 0.0
        for j in range(n):
            if j == i:
                out[i, j] = np.exp(-d2[i, j] / denom - m)
                s += out[i, j]
            else:
                out[i, j] = 0.0
        for j in range(n):
            out[i, j] /= s


def conditional_affinities(K: np.ndarray, bw: Bandwidths) -> np.ndarray:
    """Row-stochastic Gaussian conditionals p_{j|i} (zero diagonal)."""
    k = np.asarray(K, dtype=np.float64)
    d2 = k * k
    out = np.empty_like(d2)
    _conditionals(d2, bw.sigma, out)
    return out


def high_dim_affinities(K: np.ndarray, bw: Bandwidths) -> np.ndarray:
    """Symmetrized affinities P = (p_{j|i} + p_{i|j}) / (2N); global sum 1."""
    c = conditional_affinities(K, bw)
    n = c.shape[0]
    return (c + c.T) / (2.0 * n)


def low_dim_affinities(Y: np.ndarray) -> np.ndarray:
    """Student-t (1 dof) affinities q_ij, normalized over all ordered pairs."""
    y = np.asarray(Y, dtype=np.float64)
    if y.shape[0] < 2:
        raise ValueError("need at least 2 points")
    d2 = cdist(y, y, metric="sqeuclidean")
    w = 1.0 / (1.0 + d2)
    np.fill_diagonal(w, 0.0)
    w = 0.5 * (w + w.T)
    return w / w.sum()


@njit(cache=True)
def _tsne_grad_core(Y, P, pscale, grad, W):
    """Fill grad with d/dY of sum_{i!=j} pscale*P_ij log(.../q_ij); return Z.

    W receives the Student-t numerators (zero diagonal). The gradient is
    4 * sum_j (pscale*P_ij - S_P*q_ij) w_ij (y_i - y_j) with S_P the total
    mass of the (scaled) P, which makes it exact also for exaggerated P.
    """
    n, d = Y.shape
    z = 0.0
    sp = 0.0
    for i in range(n):
        W[i, i] = 0.0
        for j in range(i + 1, n):
            s = 0.0
            for t in range(d):
                diff = Y[i, t] - Y[j, t]
                s += diff * diff
            w = 1.0 / (1.0 + s)
            W[i, j] = w
            W[j, i] = w
            z += 2.0 * w
            sp += 2.0 * pscale * P[i, j]
    inv = sp / z
    for i in range(n):
        for t in range(d):
            grad[i, t] = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            w = W[i, j]
            m = (pscale * P[i, j] - w * inv) * w
            for t in range(d):
                f = 4.0 * m * (Y[i, t] - Y[j, t])
                grad[i, t] += f
                grad[j, t] -= f
    return z


@njit(cache=True)
def _kl_loss_core(P, pscale, W, z):
    n = P.shape[0]
    loss = 0.0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            p = pscale * P[i, j]
            if p > 0.0:
                q = W[i, j] / z
                if q < LOG_FLOOR:
                    q = LOG_FLOOR
                loss += p * (np.log(p) - np.log(q))
    return loss


def tsne_loss_grad(P: np.ndarray, Y: np.ndarray) -> tuple[float, np.ndarray]:
    """KL(P || Q(Y)) and its analytic gradient (0*log0 treated as 0)."""
    p = np.ascontiguousarray(P, dtype=np.float64)
    y = np.ascontiguousarray(Y, dtype=np.float64)
    grad = np.empty_like(y)
    w = np.empty_like(p)
    z = _tsne_grad_core(y, p, 1.0, grad, w)
    loss = _kl_loss_core(p, 1.0, w, z)
    return float(loss), grad
