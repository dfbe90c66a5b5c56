"""Scalar statistics: confusion metrics, ROC AUC, Spearman, and Welch tests.

All rank statistics use midranks for ties. Student-t tail probabilities are
computed through the regularized incomplete beta function, the single routine
:func:`regularized_incomplete_beta`, so every p-value in the package shares
one well-tested code path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy import special
from scipy.stats import rankdata

#: Smallest positive double; p-values clamp here when the tail underflows.
_TINY_P = math.nextafter(0.0, 1.0)


@dataclass(frozen=True, slots=True)
class BinaryMetrics:
    """Confusion counts for one binary classifier on one dataset.

    ``precision`` and ``recall`` are defined as 0 when their denominator is 0.
    """

    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")
        if self.tp + self.fp + self.tn + self.fn == 0:
            raise ValueError("confusion counts must cover at least one example")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.total

    @property
    def precision(self) -> float:
        denom = self.tp + self.fp
        return self.tp / denom if denom else 0.0

    @property
    def recall(self) -> float:
        denom = self.tp + self.fn
        return self.tp / denom if denom else 0.0


def binary_metrics(predicted: Sequence[bool], actual: Sequence[bool]) -> BinaryMetrics:
    """Confusion metrics of ``predicted`` against ``actual`` (positive = True)."""
    pred = np.asarray(predicted, dtype=bool)
    act = np.asarray(actual, dtype=bool)
    if pred.shape != act.shape or pred.ndim != 1:
        raise ValueError("predicted and actual must be 1-d and the same length")
    return BinaryMetrics(
        tp=int(np.sum(pred & act)),
        fp=int(np.sum(pred & ~act)),
        tn=int(np.sum(~pred & ~act)),
        fn=int(np.sum(~pred & act)),
    )


def per_feature_metrics(bits: np.ndarray, labels: Sequence[bool]) -> list[BinaryMetrics]:
    """Score every fingerprint bit as a standalone classifier.

    Bit ``j`` predicts the positive class exactly when it is set.

    Args:
        bits: (n_examples, n_features) 0/1 matrix.
        labels: n_examples booleans, True = positive class.
    """
    X = np.asarray(bits)
    y = np.asarray(labels, dtype=bool)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("bits must be (n_examples, n_features) matching labels")
    return [binary_metrics(X[:, j] == 1, y) for j in range(X.shape[1])]


@dataclass(frozen=True, slots=True)
class MetricSummary:
    """min/max/mean/variance of one metric over a collection of features."""

    minimum: float
    maximum: float
    mean: float
    variance: float


def summarize_feature_metrics(
    metrics: Sequence[BinaryMetrics],
) -> dict[str, MetricSummary]:
    """Distribution summary of accuracy/precision/recall over features.

    Variance is the population variance (ddof=0).
    """
    if not metrics:
        raise ValueError("no feature metrics to summarize")
    out: dict[str, MetricSummary] = {}
    for name in ("accuracy", "precision", "recall"):
        values = np.array([getattr(m, name) for m in metrics], dtype=float)
        out[name] = MetricSummary(
            minimum=float(values.min()),
            maximum=float(values.max()),
            mean=float(values.mean()),
            variance=float(values.var()),
        )
    return out


def format_feature_summary(summaries: dict[str, MetricSummary]) -> str:
    """Render a one-line-per-metric distribution report."""
    lines = []
    for name in ("accuracy", "precision", "recall"):
        s = summaries[name]
        lines.append(
            f"{name} varies from {s.minimum:.2f} to {s.maximum:.2f} "
            f"(mean = {s.mean:.2f}, variance = {s.variance:.2f})"
        )
    return "\n".join(lines)


def format_mean_std(mean: float, std: float, percent: bool = False) -> str:
    """Render ``mean (+/- std)``, optionally as percentages."""
    if percent:
        return f"{100.0 * mean:.2f}% (+/- {100.0 * std:.2f})"
    return f"{mean:.2f} (+/- {std:.2f})"


def roc_auc(scores: Sequence[float], labels: Sequence[bool]) -> float:
    """Area under the ROC curve via the midrank (Mann-Whitney) identity.

    Equals the probability that a random positive outscores a random
    negative, counting ties as half.

    Raises:
        ValueError: If either class is absent.
    """
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=bool)
    if s.shape != y.shape or s.ndim != 1:
        raise ValueError("scores and labels must be 1-d and the same length")
    n_pos = int(y.sum())
    n_neg = int(y.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC AUC requires at least one example of each class")
    ranks = rankdata(s, method="average")
    rank_sum = float(ranks[y].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


class SpearmanResult(NamedTuple):
    rho: float
    t: float
    p_value: float
    n: int


def spearman(x: Sequence[float], y: Sequence[float]) -> SpearmanResult:
    """Spearman rank correlation with a Student-t significance test.

    rho is the Pearson correlation of midranks; the test statistic is
    ``t = rho * sqrt((n - 2) / (1 - rho^2))`` on ``n - 2`` degrees of freedom,
    two-sided. For ``|rho| = 1`` the tail underflows and the p-value clamps to
    the smallest positive double.

    Raises:
        ValueError: If fewer than 3 pairs or either input has zero variance.
    """
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if xa.shape != ya.shape or xa.ndim != 1:
        raise ValueError("inputs must be 1-d and the same length")
    n = int(xa.size)
    if n < 3:
        raise ValueError("Spearman correlation requires at least 3 pairs")
    if np.all(xa == xa[0]) or np.all(ya == ya[0]):
        raise ValueError("Spearman correlation is undefined for constant input")
    rx = rankdata(xa, method="average")
    ry = rankdata(ya, method="average")
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    num = float(np.sum(dx * dy))
    den = math.sqrt(float(np.sum(dx * dx)) * float(np.sum(dy * dy)))
    rho = num / den
    df = n - 2
    one_minus_rho2 = 1.0 - rho * rho
    if one_minus_rho2 <= 0.0:
        t = math.copysign(math.inf, rho)
        p = _TINY_P
    else:
        t = rho * math.sqrt(df / one_minus_rho2)
        p = student_t_two_sided_p(t, df)
    return SpearmanResult(rho=rho, t=t, p_value=p, n=n)


class TTestResult(NamedTuple):
    t: float
    df: float
    p_value: float


def two_sample_t(a: Sequence[float], b: Sequence[float]) -> TTestResult:
    """Welch's unequal-variance two-sample t-test (two-sided).

    Degrees of freedom follow Welch-Satterthwaite. When both samples have
    zero variance but different means, t is infinite, df falls back to
    ``n_a + n_b - 2``, and the p-value clamps to the smallest positive double.

    Raises:
        ValueError: If either sample has fewer than 2 values, or both samples
            are constant with equal means (the statistic is undefined).
    """
    xa = np.asarray(a, dtype=float)
    xb = np.asarray(b, dtype=float)
    if xa.ndim != 1 or xb.ndim != 1:
        raise ValueError("samples must be 1-d")
    na, nb = int(xa.size), int(xb.size)
    if na < 2 or nb < 2:
        raise ValueError("each sample needs at least 2 values")
    ma, mb = float(xa.mean()), float(xb.mean())
    va, vb = float(xa.var(ddof=1)), float(xb.var(ddof=1))
    if va == 0.0 and vb == 0.0:
        if ma == mb:
            raise ValueError("both samples are constant and equal; t is undefined")
        return TTestResult(
            t=math.copysign(math.inf, ma - mb), df=float(na + nb - 2), p_value=_TINY_P
        )
    ea, eb = va / na, vb / nb
    t = (ma - mb) / math.sqrt(ea + eb)
    df = (ea + eb) ** 2 / (ea * ea / (na - 1) + eb * eb / (nb - 1))
    return TTestResult(t=t, df=df, p_value=student_t_two_sided_p(t, df))


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """The regularized incomplete beta function I_x(a, b)."""
    if not (a > 0 and b > 0):
        raise ValueError("beta parameters must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    return float(special.betainc(a, b, x))


def student_t_two_sided_p(t: float, df: float) -> float:
    """Two-sided Student-t tail probability via the incomplete beta identity.

    ``p = I_x(df/2, 1/2)`` with ``x = df / (df + t^2)``; underflowed tails
    clamp to the smallest positive double so p stays in (0, 1].
    """
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if math.isinf(t):
        return _TINY_P
    x = df / (df + t * t)
    p = regularized_incomplete_beta(df / 2.0, 0.5, x)
    return min(max(p, _TINY_P), 1.0)
