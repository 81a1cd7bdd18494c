"""
First-order TSK (ANFIS) with FCM-initialized Gaussian premises.

Hybrid training alternates a global least-squares solve of every consequent
(premises fixed) with a gradient step on the premise means and sigmas. A
step is halved until training RMSE does not increase, so the RMSE history
is non-increasing.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..errors import DivergenceError, SingularSystemError
from ..fcm import DEFAULT_CLUSTERS, FcmResult, GaussianMF, derive_mfs, fcm_cluster, sigma_floor
from ..optimizers import MetaheuristicSpec, ObjectiveSpec, minimize, mse, rmse
from .base import AnfisMode, Method
from .it2fr import (
    coefficient_bounds,
    design_matrix,
    log_memberships,
    mean_bounds,
    normalize_log,
    rule_outputs,
    sigma_bounds,
    solve_ridge,
)
from .one_vs_rest import OneVsRestClassifier

logger = logging.getLogger(__name__)

DEFAULT_ITERATIONS = 20
DEFAULT_PREMISE_LR = 1e-3
MAX_BACKTRACK = 12


@dataclass
class AnfisModel:
    means: np.ndarray  # M×d
    sigmas: np.ndarray  # M×d
    coefficients: np.ndarray  # M×(d+1)

    def __post_init__(self) -> None:
        if self.means.ndim != 2 or self.means.shape[0] < 1:
            raise ValueError("need at least one rule")
        if np.any(self.sigmas <= 0):
            raise ValueError("sigmas must be positive")

    @property
    def n_rules(self) -> int:
        return self.means.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.means.shape[1]

    @property
    def premises(self) -> List[List[GaussianMF]]:
        return [[GaussianMF(float(m), float(s)) for m, s in zip(mr, sr)] for mr, sr in zip(self.means, self.sigmas)]

    def to_dict(self) -> Dict[str, Any]:
        return {"means": self.means.tolist(), "sigmas": self.sigmas.tolist(), "coefficients": self.coefficients.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "AnfisModel":
        return cls(*(np.array(data[k], dtype=float) for k in ("means", "sigmas", "coefficients")))


def normalized_firing(model: AnfisModel, x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != model.feature_dim:
        raise ValueError(f"expected {model.feature_dim} features, got {x.shape[1]}")
    return normalize_log(log_memberships(x, model.means, model.sigmas))


def anfis_predict_batch(model: AnfisModel, x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    h = normalized_firing(model, x)
    return (h * rule_outputs(model.coefficients, x)).sum(axis=1)


def anfis_predict(model: AnfisModel, x: np.ndarray) -> float:
    return float(anfis_predict_batch(model, np.asarray(x, dtype=float).reshape(1, -1))[0])


# ── Least squares ───────────────────────────────────────────────────────────

def lse_consequents(
    means: np.ndarray,
    sigmas: np.ndarray,
    x: np.ndarray,
    targets: np.ndarray,
    ridge: float = 1e-6,
) -> np.ndarray:
    """
    Global least-squares over all consequents at once, premises fixed. The ridge
    covers the bias slots too: rules with identical premises share their bias
    columns.
    """
    n, d = x.shape
    m = means.shape[0]
    h = normalize_log(log_memberships(x, means, sigmas))
    phi = design_matrix(x)
    big = (h[:, :, None] * phi[:, None, :]).reshape(n, m * (d + 1))
    coef = solve_ridge(big.T @ big + ridge * np.eye(m * (d + 1)), big.T @ targets)
    return coef.reshape(m, d + 1)


# ── Premise gradient ────────────────────────────────────────────────────────

def anfis_premise_gradient(model: AnfisModel, x: np.ndarray, targets: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    d(MSE)/d(means), d(MSE)/d(sigmas). With h_r the normalized firing,
    ∂y/∂log w_r = h_r (y_r − y), ∂log w_r/∂m = (x − m)/σ², ∂log w_r/∂σ = (x − m)²/σ³.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    h = normalized_firing(model, x)
    y_rules = rule_outputs(model.coefficients, x)
    y = (h * y_rules).sum(axis=1)
    dl_dy = 2.0 * (y - targets) / x.shape[0]
    dl_dlogw = dl_dy[:, None] * h * (y_rules - y[:, None])  # N×M
    diff = x[:, None, :] - model.means[None, :, :]  # N×M×d
    s2 = model.sigmas ** 2
    g_means = np.einsum("nm,nmd->md", dl_dlogw, diff) / s2
    g_sigmas = np.einsum("nm,nmd->md", dl_dlogw, diff ** 2) / (s2 * model.sigmas)
    return g_means, g_sigmas


# ── Training ────────────────────────────────────────────────────────────────

def _hybrid(
    model: AnfisModel,
    x: np.ndarray,
    t: np.ndarray,
    ridge: float,
    iterations: int,
    lr: float,
) -> Tuple[AnfisModel, List[float]]:
    floor = sigma_floor(x)
    current = rmse(t, anfis_predict_batch(model, x))
    history = [current]
    for it in range(iterations):
        g_m, g_s = anfis_premise_gradient(model, x, t)
        step = lr
        accepted = False
        for _ in range(MAX_BACKTRACK):
            means = model.means - step * g_m
            sigmas = np.maximum(model.sigmas - step * g_s, floor)
            try:
                coef = lse_consequents(means, sigmas, x, t, ridge)
            except SingularSystemError:
                step /= 2.0
                continue
            candidate = AnfisModel(means, sigmas, coef)
            score = rmse(t, anfis_predict_batch(candidate, x))
            if score <= current:
                model, current, accepted = candidate, score, True
                break
            step /= 2.0
        history.append(current)
        if not accepted:
            logger.debug("hybrid: no improving premise step at iteration %d; stopping", it + 1)
            break
    return model, history


def _metaheuristic(model: AnfisModel, x: np.ndarray, t: np.ndarray, spec: MetaheuristicSpec) -> AnfisModel:
    m, d = model.means.shape
    k = m * d

    def decode(theta: np.ndarray) -> AnfisModel:
        return AnfisModel(theta[:k].reshape(m, d).copy(), theta[k:2 * k].reshape(m, d).copy(), theta[2 * k:].reshape(m, d + 1).copy())

    mlo, mhi = mean_bounds(x, m)
    slo, shi = sigma_bounds(x, m)
    clo, chi = coefficient_bounds(model.coefficients)
    objective = ObjectiveSpec(
        lambda th: mse(t, anfis_predict_batch(decode(th), x)),
        np.concatenate([mlo, slo, clo]),
        np.concatenate([mhi, shi, chi]),
    )
    theta0 = np.concatenate([model.means.ravel(), model.sigmas.ravel(), model.coefficients.ravel()])
    init_score = mse(t, anfis_predict_batch(model, x))
    try:
        result = minimize(objective, spec, seeds=theta0[None, :])
    except DivergenceError as e:
        logger.warning("%s training diverged (%s); keeping the hybrid initialization", spec.kind.value, e)
        return model
    return decode(result.best_theta) if result.best_score <= init_score else model


def anfis_fit(
    features: np.ndarray,
    targets: np.ndarray,
    n_rules: int = DEFAULT_CLUSTERS,
    mode: AnfisMode = AnfisMode.HYBRID,
    optimizer: Optional[MetaheuristicSpec] = None,
    seed: int = 0,
    ridge: float = 1e-6,
    iterations: int = DEFAULT_ITERATIONS,
    lr: float = DEFAULT_PREMISE_LR,
    fcm: Optional[FcmResult] = None,
) -> Tuple[AnfisModel, List[float]]:
    """
    FCM init + one least-squares pass, then either hybrid iterations or a
    metaheuristic over (means, sigmas, coefficients). Returns the model and the
    training RMSE history (initial value first).
    """
    x = np.asarray(features, dtype=float)
    t = np.asarray(targets, dtype=float).ravel()
    if x.ndim != 2 or t.size != x.shape[0]:
        raise ValueError("features must be N×d with one target per row")
    if x.shape[0] < n_rules:
        raise ValueError(f"need at least {n_rules} samples for {n_rules} rules")
    if fcm is None:
        fcm = fcm_cluster(x, n_rules, seed=seed)
    bank = derive_mfs(fcm, x, 0.0)
    model = AnfisModel(bank.means, bank.sigma1, lse_consequents(bank.means, bank.sigma1, x, t, ridge))

    mode = AnfisMode(mode)
    if mode is AnfisMode.METAHEURISTIC:
        if optimizer is None:
            raise ValueError("metaheuristic mode needs an optimizer spec")
        model = _metaheuristic(model, x, t, optimizer)
        return model, [rmse(t, anfis_predict_batch(model, x))]
    return _hybrid(model, x, t, ridge, iterations, lr)


class AnfisClassifier(OneVsRestClassifier):
    method = Method.ANFIS

    def _fit_one(self, features: np.ndarray, targets: np.ndarray, fcm: FcmResult) -> AnfisModel:
        cfg = self.config
        mode = AnfisMode.METAHEURISTIC if cfg.optimizer is not None else cfg.anfis_mode
        model, _ = anfis_fit(
            features, targets, cfg.clusters, mode, cfg.optimizer, cfg.seed,
            cfg.ridge, cfg.hybrid_iterations, cfg.premise_lr, fcm,
        )
        return model

    def _score_one(self, model: AnfisModel, features: np.ndarray) -> np.ndarray:
        return anfis_predict_batch(model, features)

    def _model_to_dict(self, model: AnfisModel) -> Dict[str, Any]:
        return model.to_dict()

    def _model_from_dict(self, data: Dict[str, Any]) -> AnfisModel:
        return AnfisModel.from_dict(data)
