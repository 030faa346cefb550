"""Triplet probabilities and log-likelihood for Student-t stochastic triplet embedding.

A triplet (i, j, k) asserts "i is closer to j than to k". Its probability under
the embedding uses a Student-t kernel with alpha degrees of freedom; the
triplet-set loss is the summed log probability (a log-likelihood to be
maximized — the optimizer minimizes its negation).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit

PROB_FLOOR = 1e-12
TRIPLET_SOURCES = ("human", "synthetic", "oracle")


@dataclass(frozen=True)
class Triplet:
    anchor: int
    positive: int
    negative: int
    source: str = "synthetic"

    def __post_init__(self):
        if len({self.anchor, self.positive, self.negative}) != 3:
            raise ValueError(f"triplet indices must be pairwise distinct: {self}")
        if self.source not in TRIPLET_SOURCES:
            raise ValueError(f"unknown triplet source {self.source!r}")


@dataclass(frozen=True)
class TsteConfig:
    alpha: float = 1.0

    def __post_init__(self):
        if not (self.alpha > 0 and np.isfinite(self.alpha)):
            raise ValueError("alpha must be positive and finite")


def default_alpha(out_dim: int) -> float:
    return float(max(out_dim - 1, 1))


def triplet_array(triplets) -> np.ndarray:
    """(M, 3) int64 index array from a list of Triplet (or raw index triples)."""
    rows = []
    for t in triplets:
        if isinstance(t, Triplet):
            rows.append((t.anchor, t.positive, t.negative))
        else:
            rows.append(tuple(t[:3]))
    return np.array(rows, dtype=np.int64).reshape(-1, 3)


def triplet_prob(Y: np.ndarray, t: Triplet, cfg: TsteConfig) -> float:
    """p = f(d_ij) / (f(d_ij) + f(d_ik)), f(d) = (1 + d^2/alpha)^(-(1+alpha)/2)."""
    y = np.asarray(Y, dtype=np.float64)
    a = cfg.alpha
    ex = -(1.0 + a) / 2.0
    fij = (1.0 + float(np.sum((y[t.anchor] - y[t.positive]) ** 2)) / a) ** ex
    fik = (1.0 + float(np.sum((y[t.anchor] - y[t.negative]) ** 2)) / a) ** ex
    return fij / (fij + fik)


@njit(cache=True)
def _tste_core(Y, trip, alpha, grad):
    """Accumulate the log-likelihood and its gradient over all triplets.

    Returns sum_T log max(p_T, floor). grad receives d(loglik)/dY.
    """
    m = trip.shape[0]
    d = Y.shape[1]
    beta = (1.0 + alpha) / 2.0
    const = (1.0 + alpha) / alpha
    loglik = 0.0
    for r in range(m):
        i = trip[r, 0]
        j = trip[r, 1]
        k = trip[r, 2]
        d2ij = 0.0
        d2ik = 0.0
        for t in range(d):
            dij = Y[i, t] - Y[j, t]
            dik = Y[i, t] - Y[k, t]
            d2ij += dij * dij
            d2ik += dik * dik
        wij = 1.0 / (1.0 + d2ij / alpha)
        wik = 1.0 / (1.0 + d2ik / alpha)
        u = wij ** beta
        v = wik ** beta
        p = u / (u + v)
        pc = p if p > PROB_FLOOR else PROB_FLOOR
        loglik += np.log(pc)
        c = const * (1.0 - p)
        for t in range(d):
            dij = Y[i, t] - Y[j, t]
            dik = Y[i, t] - Y[k, t]
            grad[i, t] += c * (wik * dik - wij * dij)
            grad[j, t] += c * wij * dij
            grad[k, t] -= c * wik * dik
    return loglik


def tste_loss_grad(Y: np.ndarray, triplets, cfg: TsteConfig) -> tuple[float, np.ndarray]:
    """Summed log-probability of the triplet set and its analytic gradient."""
    y = np.ascontiguousarray(Y, dtype=np.float64)
    grad = np.zeros_like(y)
    trip = triplet_array(triplets)
    if trip.shape[0] == 0:
        return 0.0, grad
    if trip.min() < 0 or trip.max() >= y.shape[0]:
        raise ValueError("triplet index out of range")
    loglik = _tste_core(y, trip, cfg.alpha, grad)
    return float(loglik), grad


def save_triplets(triplets, path: str | Path) -> None:
    """CSV lines ``anchor,positive,negative,source`` (with header)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["anchor", "positive", "negative", "source"])
        for t in triplets:
            writer.writerow([t.anchor, t.positive, t.negative, t.source])


def load_triplets(path: str | Path) -> list[Triplet]:
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            if row[0] == "anchor":  # header
                continue
            source = row[3] if len(row) > 3 else "human"
            out.append(Triplet(int(row[0]), int(row[1]), int(row[2]), source))
    return out
