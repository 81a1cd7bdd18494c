"""
One-way ANOVA, per-edge screening and chi-square tests of independence.

p-values come from the regularized incomplete beta and gamma functions,
evaluated with modified-Lentz continued fractions.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, NamedTuple, Sequence, Union

import numpy as np

from .connectivity import ConnectivityMatrix
from .data_model import ClassLabel, SubjectRecord

logger = logging.getLogger(__name__)

CF_TOL = 1e-12
CF_MAX_ITER = 500
_TINY = 1e-300


# ── Special functions ───────────────────────────────────────────────────────

def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > _TINY else _TINY)
    h = d
    for m in range(1, CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _TINY else _TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > _TINY else _TINY
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _TINY else _TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > _TINY else _TINY
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < CF_TOL:
            return h
    logger.warning("incomplete beta continued fraction did not converge (a=%g, b=%g, x=%g)", a, b, x)
    return h


def regularized_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _beta_continued_fraction(a, b, x) / a
    return 1.0 - math.exp(log_front) * _beta_continued_fraction(b, a, 1.0 - x) / b


def _gamma_series(a: float, x: float) -> float:
    ap = a
    term = total = 1.0 / a
    for _ in range(CF_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * CF_TOL:
            break
    else:
        logger.warning("incomplete gamma series did not converge (a=%g, x=%g)", a, x)
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_continued_fraction(a: float, x: float) -> float:
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, CF_MAX_ITER + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        d = 1.0 / (d if abs(d) > _TINY else _TINY)
        c = b + an / c
        c = c if abs(c) > _TINY else _TINY
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < CF_TOL:
            break
    else:
        logger.warning("incomplete gamma continued fraction did not converge (a=%g, x=%g)", a, x)
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def regularized_gamma_p(a: float, x: float) -> float:
    """Lower regularized incomplete gamma P(a, x)."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x <= 0.0:
        return 0.0
    if x < a + 1.0:
        return _gamma_series(a, x)
    return 1.0 - _gamma_continued_fraction(a, x)


def regularized_gamma_q(a: float, x: float) -> float:
    """Upper regularized incomplete gamma Q(a, x) = 1 − P(a, x)."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x <= 0.0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_series(a, x)
    return _gamma_continued_fraction(a, x)


def f_survival(f: float, df1: int, df2: int) -> float:
    """P(F > f) for an F(df1, df2) variable."""
    if f <= 0.0:
        return 1.0
    if math.isinf(f):
        return 0.0
    return regularized_beta(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f))


def chi2_survival(x: float, df: int) -> float:
    """P(X > x) for a chi-square variable with df degrees of freedom."""
    return regularized_gamma_q(df / 2.0, x / 2.0)


# ── ANOVA ───────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class AnovaResult:
    f_stat: float
    df_between: int
    df_within: int
    p_value: float


def _f_from_sums(ss_between: float, ss_within: float, df_between: int, df_within: int) -> float:
    if ss_within == 0.0:
        return 0.0 if ss_between == 0.0 else math.inf
    return (ss_between / df_between) / (ss_within / df_within)


def one_way_anova(groups: Sequence[Sequence[float]]) -> AnovaResult:
    arrays = [np.asarray(g, dtype=float).ravel() for g in groups]
    if len(arrays) < 2:
        raise ValueError("one-way ANOVA needs at least 2 groups")
    for i, g in enumerate(arrays):
        if g.size < 2:
            raise ValueError(f"group {i} has {g.size} samples; need at least 2")

    n_total = sum(g.size for g in arrays)
    grand = sum(g.sum() for g in arrays) / n_total
    ss_between = float(sum(g.size * (g.mean() - grand) ** 2 for g in arrays))
    ss_within = float(sum(((g - g.mean()) ** 2).sum() for g in arrays))
    df_between = len(arrays) - 1
    df_within = n_total - len(arrays)
    f_stat = _f_from_sums(ss_between, ss_within, df_between, df_within)
    return AnovaResult(f_stat, df_between, df_within, f_survival(f_stat, df_between, df_within))


class EdgeResult(NamedTuple):
    i: int
    j: int
    f_stat: float
    p_value: float


def edge_screen(
    matrices: Sequence[ConnectivityMatrix],
    labels: Sequence[Union[ClassLabel, int]],
    alpha: float = 0.0005,
) -> List[EdgeResult]:
    """
    One-way ANOVA per upper-triangle edge across the class groups, uncorrected.
    Returns edges with p ≤ alpha, ascending by p (ties by index pair).
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    if len(matrices) != len(labels):
        raise ValueError("matrices and labels differ in length")
    if not matrices:
        return []
    roi_count = matrices[0].roi_count
    if any(m.roi_count != roi_count for m in matrices):
        raise ValueError("all matrices must share the same ROI count")

    y = np.array([int(l) for l in labels])
    classes = sorted(set(y.tolist()))
    if len(classes) < 2:
        raise ValueError("edge screen needs at least 2 classes")
    for c in classes:
        if (y == c).sum() < 2:
            raise ValueError(f"class {ClassLabel(c).name} has fewer than 2 samples")

    iu = np.triu_indices(roi_count, k=1)
    data = np.stack([m.values[iu] for m in matrices])
    grand = data.mean(axis=0)
    ss_between = np.zeros(data.shape[1])
    ss_within = np.zeros(data.shape[1])
    for c in classes:
        block = data[y == c]
        mean_c = block.mean(axis=0)
        ss_between += block.shape[0] * (mean_c - grand) ** 2
        ss_within += ((block - mean_c) ** 2).sum(axis=0)
    df_between = len(classes) - 1
    df_within = data.shape[0] - len(classes)

    results: List[EdgeResult] = []
    for e, (i, j) in enumerate(zip(*iu)):
        f_stat = _f_from_sums(float(ss_between[e]), float(ss_within[e]), df_between, df_within)
        p = f_survival(f_stat, df_between, df_within)
        if p <= alpha:
            results.append(EdgeResult(int(i), int(j), f_stat, p))
    results.sort(key=lambda r: (r.p_value, r.i, r.j))
    logger.info("edge screen: %d of %d edges at alpha=%g", len(results), len(iu[0]), alpha)
    return results


def read_roi_names(path: Union[str, Path]) -> List[str]:
    """One ROI name per line; blank lines ignored."""
    return [line.strip() for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]


# ── Chi-square ──────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    df: int
    p_value: float


def chi_square_independence(table: Sequence[Sequence[float]]) -> ChiSquareResult:
    obs = np.asarray(table, dtype=float)
    if obs.ndim != 2 or obs.shape[0] < 2 or obs.shape[1] < 2:
        raise ValueError(f"contingency table must be at least 2×2, got shape {obs.shape}")
    if (obs < 0).any():
        raise ValueError("counts must be nonnegative")
    rows = obs.sum(axis=1)
    cols = obs.sum(axis=0)
    if (rows == 0).any() or (cols == 0).any():
        raise ValueError("zero marginal in contingency table")
    expected = np.outer(rows, cols) / obs.sum()
    statistic = float(((obs - expected) ** 2 / expected).sum())
    df = (obs.shape[0] - 1) * (obs.shape[1] - 1)
    return ChiSquareResult(statistic, df, chi2_survival(statistic, df))


# ── Demographic pass-through ────────────────────────────────────────────────

def anova_by_label(records: Sequence[SubjectRecord], column: str) -> AnovaResult:
    """ANOVA of a numeric manifest `extra` column across classes."""
    groups: Dict[int, List[float]] = {}
    for rec in records:
        if column in rec.extra:
            groups.setdefault(int(rec.label), []).append(float(rec.extra[column]))
    return one_way_anova([groups[k] for k in sorted(groups)])


def contingency_by_label(records: Sequence[SubjectRecord], column: str) -> np.ndarray:
    """Class × category counts for a categorical manifest `extra` column."""
    categories = sorted({rec.extra[column] for rec in records if column in rec.extra})
    labels = sorted({int(rec.label) for rec in records if column in rec.extra})
    table = np.zeros((len(labels), len(categories)))
    for rec in records:
        if column in rec.extra:
            table[labels.index(int(rec.label)), categories.index(rec.extra[column])] += 1
    return table
