"""
Interval type-2 fuzzy regression.

One first-order rule per FCM cluster. A rule's antecedents are IT2 Gaussian
MFs (fixed mean, lower/upper sigma); its consequent is linear in x. For an
input x the product t-norm gives a firing interval per rule; normalizing the
lower and the upper firings separately gives two weight vectors, whose
weighted sums of rule outputs bracket the prediction [y_left, y_right]. The
crisp output is the midpoint.

Firing products over hundreds of features underflow, so everything is done
with log firings and log-sum-exp normalization.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from ..data_model import ClassLabel
from ..errors import DivergenceError, SingularSystemError
from ..fcm import DEFAULT_CLUSTERS, DEFAULT_FOU_DELTA, FcmResult, IT2GaussianMF, derive_mfs, fcm_cluster, sigma_floor
from ..optimizers import MetaheuristicSpec, ObjectiveSpec, minimize, mse
from .base import ClassifierConfig, Method
from .one_vs_rest import OneVsRestClassifier

logger = logging.getLogger(__name__)

COEFFICIENT_BOUND_SCALE = 10.0


# ── Model types ─────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class FuzzyRule:
    antecedents: List[IT2GaussianMF]
    coefficients: np.ndarray  # bias first, then one per feature


@dataclass
class IT2FRModel:
    means: np.ndarray  # M×d
    sigma1: np.ndarray  # M×d, lower MF widths
    sigma2: np.ndarray  # M×d, upper MF widths
    coefficients: np.ndarray  # M×(d+1)
    fou_delta: float = DEFAULT_FOU_DELTA
    use_bias: bool = True

    def __post_init__(self) -> None:
        if self.means.ndim != 2 or self.means.shape[0] < 1:
            raise ValueError("need at least one rule")
        m, d = self.means.shape
        if self.sigma1.shape != (m, d) or self.sigma2.shape != (m, d) or self.coefficients.shape != (m, d + 1):
            raise ValueError("rule parameter shapes disagree")

    @property
    def n_rules(self) -> int:
        return self.means.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.means.shape[1]

    @property
    def rules(self) -> List[FuzzyRule]:
        return [
            FuzzyRule(
                [IT2GaussianMF(float(m), float(a), float(b)) for m, a, b in zip(self.means[r], self.sigma1[r], self.sigma2[r])],
                self.coefficients[r].copy(),
            )
            for r in range(self.n_rules)
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rules": self.n_rules,
            "feature_dim": self.feature_dim,
            "fou_delta": self.fou_delta,
            "use_bias": self.use_bias,
            "means": self.means.tolist(),
            "sigma1": self.sigma1.tolist(),
            "sigma2": self.sigma2.tolist(),
            "coefficients": self.coefficients.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "IT2FRModel":
        return cls(
            np.array(data["means"], dtype=float),
            np.array(data["sigma1"], dtype=float),
            np.array(data["sigma2"], dtype=float),
            np.array(data["coefficients"], dtype=float),
            float(data["fou_delta"]),
            bool(data["use_bias"]),
        )


class TypeReducedOutput(NamedTuple):
    y_left: float
    y_right: float
    y_star: float


# ── Inference ───────────────────────────────────────────────────────────────

def log_memberships(x: np.ndarray, means: np.ndarray, sigmas: np.ndarray) -> np.ndarray:
    """Σ_j log μ_j(x_j) per sample and rule: N×d inputs, M×d params → N×M."""
    z = (x[:, None, :] - means[None, :, :]) / sigmas[None, :, :]
    return -0.5 * np.einsum("nmd,nmd->nm", z, z)


def log_firing(model: IT2FRModel, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != model.feature_dim:
        raise ValueError(f"expected {model.feature_dim} features, got {x.shape[1]}")
    return log_memberships(x, model.means, model.sigma1), log_memberships(x, model.means, model.sigma2)


def firing_interval(rule: FuzzyRule, x: np.ndarray) -> Tuple[float, float]:
    x = np.asarray(x, dtype=float).ravel()
    if x.size != len(rule.antecedents):
        raise ValueError(f"expected {len(rule.antecedents)} features, got {x.size}")
    lo = sum(-0.5 * ((xi - mf.mean) / mf.sigma1) ** 2 for xi, mf in zip(x, rule.antecedents))
    hi = sum(-0.5 * ((xi - mf.mean) / mf.sigma2) ** 2 for xi, mf in zip(x, rule.antecedents))
    return float(np.exp(lo)), float(np.exp(hi))


def normalized_strengths(f_lower: Sequence[float], f_upper: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """Normalize each bound vector to sum 1; total underflow falls back to uniform."""
    return _normalize_linear(np.asarray(f_lower, dtype=float)), _normalize_linear(np.asarray(f_upper, dtype=float))


def _normalize_linear(f: np.ndarray) -> np.ndarray:
    total = f.sum()
    if not total > 0 or not np.isfinite(total):
        logger.warning("total firing underflow; using uniform rule weights")
        return np.full(f.size, 1.0 / f.size)
    return f / total


def normalize_log(log_f: np.ndarray) -> np.ndarray:
    """Row-wise softmax of log firings (N×M); rows with no finite entry become uniform."""
    top = log_f.max(axis=1, keepdims=True)
    dead = ~np.isfinite(top[:, 0])
    if dead.any():
        logger.warning("%d sample(s) fire no rule; using uniform rule weights", int(dead.sum()))
        top = np.where(dead[:, None], 0.0, top)
    e = np.exp(log_f - top)
    h = e / e.sum(axis=1, keepdims=True)
    h[dead] = 1.0 / log_f.shape[1]
    return h


def rule_outputs(coefficients: np.ndarray, x: np.ndarray) -> np.ndarray:
    """y_r = a_0 + Σ a_j x_j for every sample and rule (N×M)."""
    return coefficients[:, 0][None, :] + x @ coefficients[:, 1:].T


def type_reduce(h_lower: np.ndarray, h_upper: np.ndarray, y_rules: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Order the two weighted sums into [y_left, y_right] and average them."""
    a = (h_lower * y_rules).sum(axis=-1)
    b = (h_upper * y_rules).sum(axis=-1)
    left = np.minimum(a, b)
    right = np.maximum(a, b)
    return left, right, (left + right) / 2.0


def predict_batch(model: IT2FRModel, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    log_lo, log_hi = log_firing(model, x)
    return type_reduce(normalize_log(log_lo), normalize_log(log_hi), rule_outputs(model.coefficients, x))


def predict(model: IT2FRModel, x: np.ndarray) -> TypeReducedOutput:
    left, right, star = predict_batch(model, np.asarray(x, dtype=float).reshape(1, -1))
    return TypeReducedOutput(float(left[0]), float(right[0]), float(star[0]))


# ── Fitting ─────────────────────────────────────────────────────────────────

def design_matrix(x: np.ndarray, use_bias: bool = True) -> np.ndarray:
    ones = np.ones((x.shape[0], 1)) if use_bias else np.zeros((x.shape[0], 1))
    return np.hstack([ones, x])


def ridge_penalty(n_coefficients: int, use_bias: bool) -> np.ndarray:
    """Identity with the bias slot unpenalized."""
    p = np.ones(n_coefficients)
    if use_bias:
        p[0] = 0.0
    return np.diag(p)


def solve_ridge(gram: np.ndarray, rhs: np.ndarray, rule: Optional[int] = None) -> np.ndarray:
    try:
        sol = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as e:
        raise SingularSystemError(f"singular normal equations: {e}", rule) from e
    if not np.all(np.isfinite(sol)):
        raise SingularSystemError("normal equations gave non-finite coefficients", rule)
    return sol


def weighted_least_squares(
    x: np.ndarray,
    targets: np.ndarray,
    weights: np.ndarray,
    ridge: float,
    use_bias: bool = True,
    rule: Optional[int] = None,
) -> np.ndarray:
    phi = design_matrix(x, use_bias)
    gram = phi.T @ (weights[:, None] * phi)
    if not use_bias:
        # keep the unused bias column solvable; its coefficient stays 0
        gram[0, 0] = 1.0
    gram += ridge * ridge_penalty(phi.shape[1], use_bias)
    return solve_ridge(gram, phi.T @ (weights * targets), rule)


def fit_init(
    features: np.ndarray,
    targets: np.ndarray,
    n_rules: int = DEFAULT_CLUSTERS,
    fou_delta: float = DEFAULT_FOU_DELTA,
    ridge: float = 1e-6,
    seed: int = 0,
    use_bias: bool = True,
    fcm: Optional[FcmResult] = None,
) -> IT2FRModel:
    """
    FCM on the features gives the antecedents; each rule's coefficients solve
    a ridge-regularized least-squares problem weighted by that rule's memberships.
    """
    x = np.asarray(features, dtype=float)
    t = np.asarray(targets, dtype=float).ravel()
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("features must be a nonempty N×d array")
    if t.size != x.shape[0]:
        raise ValueError("features and targets differ in length")
    if x.shape[0] < n_rules:
        raise ValueError(f"need at least {n_rules} samples for {n_rules} rules")
    if fcm is None:
        fcm = fcm_cluster(x, n_rules, seed=seed)
    bank = derive_mfs(fcm, x, fou_delta)
    coefficients = np.vstack([
        weighted_least_squares(x, t, fcm.memberships[:, r], ridge, use_bias, r) for r in range(bank.n_rules)
    ])
    return IT2FRModel(bank.means, bank.sigma1, bank.sigma2, coefficients, fou_delta, use_bias)


# ── Metaheuristic refinement ────────────────────────────────────────────────

def mean_bounds(x: np.ndarray, n_rules: int) -> Tuple[np.ndarray, np.ndarray]:
    lo, hi = x.min(axis=0), x.max(axis=0)
    flat = hi <= lo
    lo = np.where(flat, lo - 1e-6, lo)
    hi = np.where(flat, hi + 1e-6, hi)
    return np.tile(lo, n_rules), np.tile(hi, n_rules)


def sigma_bounds(x: np.ndarray, n_rules: int) -> Tuple[np.ndarray, np.ndarray]:
    floor = sigma_floor(x)
    top = np.maximum(2.0 * np.ptp(x, axis=0), 2.0 * floor)
    return np.tile(floor, n_rules), np.tile(top, n_rules)


def coefficient_bounds(coefficients: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    half = COEFFICIENT_BOUND_SCALE * (np.abs(coefficients.ravel()) + 1.0)
    return -half, half


def encode_theta(model: IT2FRModel) -> np.ndarray:
    return np.concatenate([model.means.ravel(), model.sigma1.ravel(), model.sigma2.ravel(), model.coefficients.ravel()])


def decode_theta(theta: np.ndarray, template: IT2FRModel) -> IT2FRModel:
    m, d = template.means.shape
    k = m * d
    means = theta[:k].reshape(m, d)
    a = theta[k:2 * k].reshape(m, d)
    b = theta[2 * k:3 * k].reshape(m, d)
    coefficients = theta[3 * k:].reshape(m, d + 1).copy()
    if not template.use_bias:
        coefficients[:, 0] = 0.0
    return IT2FRModel(means.copy(), np.minimum(a, b), np.maximum(a, b), coefficients, template.fou_delta, template.use_bias)


def theta_bounds(model: IT2FRModel, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    m = model.n_rules
    mlo, mhi = mean_bounds(x, m)
    slo, shi = sigma_bounds(x, m)
    clo, chi = coefficient_bounds(model.coefficients)
    return np.concatenate([mlo, slo, slo, clo]), np.concatenate([mhi, shi, shi, chi])


def refine(model: IT2FRModel, features: np.ndarray, targets: np.ndarray, spec: MetaheuristicSpec) -> IT2FRModel:
    """
    Minimize training MSE over θ = (means, sigma1s, sigma2s, coefficients),
    seeding the population with the initial θ. Never returns a model worse
    than `model`; falls back to it if the objective diverges.
    """
    x = np.asarray(features, dtype=float)
    t = np.asarray(targets, dtype=float).ravel()
    lo, hi = theta_bounds(model, x)
    objective = ObjectiveSpec(lambda th: mse(t, predict_batch(decode_theta(th, model), x)[2]), lo, hi)
    init_score = mse(t, predict_batch(model, x)[2])
    try:
        result = minimize(objective, spec, seeds=encode_theta(model)[None, :])
    except DivergenceError as e:
        logger.warning("%s refinement diverged (%s); keeping the least-squares model", spec.kind.value, e)
        return model
    if result.best_score > init_score:
        return model
    logger.debug("%s refinement: MSE %.6g → %.6g", spec.kind.value, init_score, result.best_score)
    return decode_theta(result.best_theta, model)


# ── Classifier ──────────────────────────────────────────────────────────────

class IT2FRClassifier(OneVsRestClassifier):
    method = Method.IT2FR

    def _fit_one(self, features: np.ndarray, targets: np.ndarray, fcm: FcmResult) -> IT2FRModel:
        cfg = self.config
        model = fit_init(features, targets, cfg.clusters, cfg.fou_delta, cfg.ridge, cfg.seed, cfg.use_bias, fcm)
        if cfg.optimizer is not None:
            model = refine(model, features, targets, cfg.optimizer)
        return model

    def _score_one(self, model: IT2FRModel, features: np.ndarray) -> np.ndarray:
        return predict_batch(model, features)[2]

    def _model_to_dict(self, model: IT2FRModel) -> Dict[str, Any]:
        return model.to_dict()

    def _model_from_dict(self, data: Dict[str, Any]) -> IT2FRModel:
        return IT2FRModel.from_dict(data)


def fit_classifier(
    features: np.ndarray,
    labels: Sequence[Union[ClassLabel, int]],
    n_rules: int = DEFAULT_CLUSTERS,
    fou_delta: float = DEFAULT_FOU_DELTA,
    optimizer: Optional[MetaheuristicSpec] = None,
    seed: int = 0,
    ridge: float = 1e-6,
    use_bias: bool = True,
) -> IT2FRClassifier:
    config = ClassifierConfig(
        method=Method.IT2FR, clusters=n_rules, fou_delta=fou_delta, optimizer=optimizer,
        seed=seed, ridge=ridge, use_bias=use_bias,
    )
    return IT2FRClassifier(config).fit(features, labels)


def classify(classifier: IT2FRClassifier, x: np.ndarray) -> Tuple[ClassLabel, np.ndarray]:
    """Label by argmax of the three crisp outputs, lowest class index on ties."""
    scores = classifier.predict_scores(np.asarray(x, dtype=float).reshape(1, -1))[0]
    return label_from_scores(scores), scores


def label_from_scores(scores: Sequence[float]) -> ClassLabel:
    return ClassLabel(int(np.argmax(np.asarray(scores, dtype=float))))
