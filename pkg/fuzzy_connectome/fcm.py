"""Fuzzy c-means clustering and the Gaussian membership functions derived from it."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_CLUSTERS = 3
DEFAULT_FUZZIFIER = 2.0
DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 300
DEFAULT_FOU_DELTA = 0.2
SIGMA_FLOOR = 1e-6


# ── Membership functions ────────────────────────────────────────────────────

def log_gaussian(x, mean, sigma):
    """log exp(−½((x−m)/σ)²), elementwise."""
    z = (np.asarray(x, dtype=float) - mean) / sigma
    return -0.5 * z * z


@dataclass(frozen=True)
class GaussianMF:
    mean: float
    sigma: float

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    def __call__(self, x: float) -> float:
        return float(np.exp(log_gaussian(x, self.mean, self.sigma)))


@dataclass(frozen=True)
class IT2GaussianMF:
    """Fixed mean, uncertain width: lower MF uses sigma1, upper uses sigma2."""

    mean: float
    sigma1: float
    sigma2: float

    def __post_init__(self) -> None:
        if not 0 < self.sigma1 <= self.sigma2:
            raise ValueError(f"need 0 < sigma1 <= sigma2, got {self.sigma1}, {self.sigma2}")

    def __call__(self, x: float) -> Tuple[float, float]:
        return mf_eval(self, x)


def mf_eval(mf: IT2GaussianMF, x: float) -> Tuple[float, float]:
    lower = float(np.exp(log_gaussian(x, mf.mean, mf.sigma1)))
    upper = float(np.exp(log_gaussian(x, mf.mean, mf.sigma2)))
    return lower, upper


# ── Clustering ──────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class FcmResult:
    centers: np.ndarray
    memberships: np.ndarray
    fuzzifier: float
    iterations: int
    final_objective: float
    objective_history: Tuple[float, ...] = ()

    @property
    def n_clusters(self) -> int:
        return self.centers.shape[0]


def _squared_distances(data: np.ndarray, centers: np.ndarray) -> np.ndarray:
    diff = data[:, None, :] - centers[None, :, :]
    return np.einsum("nmd,nmd->nm", diff, diff)


def fcm_memberships(data: np.ndarray, centers: np.ndarray, fuzzifier: float) -> np.ndarray:
    """
    u_ik ∝ d_ik^(−2/(m−1)); a point sitting on a center gets membership 1 there,
    shared equally when several centers coincide at that point.
    """
    d2 = _squared_distances(data, centers)
    u = np.zeros_like(d2)
    coincident = (d2 == 0.0).any(axis=1)
    if coincident.any():
        hits = (d2[coincident] == 0.0).astype(float)
        u[coincident] = hits / hits.sum(axis=1, keepdims=True)
    rest = ~coincident
    if rest.any():
        d = d2[rest]
        ratio = d / d.min(axis=1, keepdims=True)
        w = ratio ** (-1.0 / (fuzzifier - 1.0))
        u[rest] = w / w.sum(axis=1, keepdims=True)
    return u


def fcm_objective(data: np.ndarray, centers: np.ndarray, memberships: np.ndarray, fuzzifier: float) -> float:
    return float((memberships ** fuzzifier * _squared_distances(data, centers)).sum())


def _initial_centers(data: np.ndarray, n_clusters: int, rng: np.random.Generator) -> np.ndarray:
    distinct = np.unique(data, axis=0)
    pool = distinct if distinct.shape[0] >= n_clusters else data
    return pool[rng.choice(pool.shape[0], size=n_clusters, replace=False)].copy()


def fcm_cluster(
    data: np.ndarray,
    n_clusters: int = DEFAULT_CLUSTERS,
    fuzzifier: float = DEFAULT_FUZZIFIER,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = 0,
) -> FcmResult:
    """
    Alternating FCM updates from distinct seeded data points. Stops once the
    largest center coordinate moves less than `tol`, or after `max_iter`.
    """
    x = np.asarray(data, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    if not 1 <= n_clusters <= n:
        raise ValueError(f"need 1 <= clusters <= samples, got clusters={n_clusters}, samples={n}")
    if not fuzzifier > 1.0:
        raise ValueError("fuzzifier must exceed 1")

    rng = np.random.default_rng(seed)
    centers = _initial_centers(x, n_clusters, rng)
    history: List[float] = []
    iterations = 0
    for iterations in range(1, max_iter + 1):
        u = fcm_memberships(x, centers, fuzzifier)
        history.append(fcm_objective(x, centers, u, fuzzifier))
        w = u ** fuzzifier
        mass = w.sum(axis=0)
        new_centers = centers.copy()
        # a cluster with no mass keeps its center
        live = mass > 0
        new_centers[live] = (w.T[live] @ x) / mass[live, None]
        move = float(np.abs(new_centers - centers).max())
        centers = new_centers
        if move < tol:
            break

    u = fcm_memberships(x, centers, fuzzifier)
    final = fcm_objective(x, centers, u, fuzzifier)
    logger.debug("FCM: %d clusters, %d iterations, J=%.6g", n_clusters, iterations, final)
    return FcmResult(centers, u, fuzzifier, iterations, final, tuple(history + [final]))


# ── MF derivation ───────────────────────────────────────────────────────────

@dataclass(frozen=True)
class MembershipBank:
    """Per-rule, per-dimension IT2 Gaussian parameters (arrays of shape M×d)."""

    means: np.ndarray
    sigma1: np.ndarray
    sigma2: np.ndarray

    @property
    def n_rules(self) -> int:
        return self.means.shape[0]

    def rule_mfs(self, rule: int) -> List[IT2GaussianMF]:
        return [
            IT2GaussianMF(float(m), float(s1), float(s2))
            for m, s1, s2 in zip(self.means[rule], self.sigma1[rule], self.sigma2[rule])
        ]

    def type1(self) -> List[List[GaussianMF]]:
        """Type-1 view using the upper sigma (equal to the lower one when delta=0)."""
        return [[GaussianMF(float(m), float(s)) for m, s in zip(mr, sr)] for mr, sr in zip(self.means, self.sigma2)]


def sigma_floor(data: np.ndarray) -> np.ndarray:
    span = np.ptp(np.asarray(data, dtype=float), axis=0)
    return np.where(span > 0, SIGMA_FLOOR * span, SIGMA_FLOOR)


def derive_mfs(result: FcmResult, data: np.ndarray, delta: float = DEFAULT_FOU_DELTA) -> MembershipBank:
    """
    Mean = cluster center; sigma = u^m-weighted standard deviation around it,
    floored at 1e-6 × the data range. sigma1/sigma2 = sigma·(1 ∓ delta).
    """
    if not 0.0 <= delta < 1.0:
        raise ValueError("delta must lie in [0, 1)")
    x = np.asarray(data, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    w = result.memberships ** result.fuzzifier
    means = result.centers.copy()
    sigma = np.empty_like(means)
    for r in range(means.shape[0]):
        wr = w[:, r]
        total = wr.sum()
        var = (wr[:, None] * (x - means[r]) ** 2).sum(axis=0) / total if total > 0 else np.zeros(x.shape[1])
        sigma[r] = np.sqrt(var)

    floor = sigma_floor(x)
    degenerate = sigma < floor
    if degenerate.any():
        logger.warning("%d rule/dimension sigmas below floor; clamped to 1e-6 × range", int(degenerate.sum()))
        sigma = np.maximum(sigma, floor)
    return MembershipBank(means, sigma * (1.0 - delta), sigma * (1.0 + delta))
