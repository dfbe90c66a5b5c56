"""Local linear surrogate explanations of single classifications.

One explanation perturbs a fingerprint by zeroing random subsets of its
active bits, weights each perturbed sample by an exponential kernel in
Hamming distance, fits a weighted ridge surrogate to the model's
probabilities, and keeps the K largest-magnitude feature weights (refit on
that subset). Perturbation is removal-only: absence of a substructure is
chemically realizable, addition is not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy import linalg

from .errors import InputError
from .forest import ForestModel, predict_proba_batch
from .patterns import FingerprintVector, Pattern
from .seeding import child_seed, make_rng
from .stats import BinaryMetrics


@dataclass(frozen=True)
class SurrogateConfig:
    """Settings for one explanation.

    Attributes:
        n_samples: Total perturbed samples, including the instance itself.
        kernel_width: Proximity kernel width; ``None`` means
            ``0.75 * sqrt(n_features)`` resolved at use.
        ridge_lambda: L2 penalty on surrogate weights (never the intercept).
        top_k: Maximum number of features retained in the explanation.
        seed: Master seed for sampling; bootstrap replicates derive theirs
            from it.
    """

    n_samples: int = 1000
    kernel_width: float | None = None
    ridge_lambda: float = 1e-3
    top_k: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_samples < 1:
            raise ValueError("n_samples must be positive")
        if self.kernel_width is not None and not self.kernel_width > 0:
            raise ValueError("kernel_width must be positive")
        if self.ridge_lambda < 0:
            raise ValueError("ridge_lambda must be non-negative")
        if self.top_k < 1:
            raise ValueError("top_k must be at least 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def resolved_kernel_width(self, n_features: int) -> float:
        if self.kernel_width is not None:
            return self.kernel_width
        return 0.75 * math.sqrt(n_features)


@dataclass(frozen=True)
class PerturbedSample:
    """One perturbed fingerprint with its kernel weight.

    ``prediction`` is filled in once the classifier has been evaluated.
    """

    bits: np.ndarray
    proximity: float
    prediction: float | None = None


@dataclass(frozen=True)
class Explanation:
    """The fitted sparse linear surrogate for one instance.

    Attributes:
        instance: The fingerprint being explained.
        weights: Feature index -> signed weight; at most ``top_k`` entries,
            all on active bits of the instance.
        intercept: Surrogate intercept (never penalized).
        loss: Weighted squared error of the returned surrogate over all
            samples.
        config: The configuration that produced this explanation.
    """

    instance: FingerprintVector
    weights: dict[int, float]
    intercept: float
    loss: float
    config: SurrogateConfig


@dataclass(frozen=True)
class MoleculeWeighting:
    """Bootstrap-averaged explanation for one molecule.

    Attributes:
        mean_weight_per_feature: Feature index -> weight averaged over all
            replicates, counting a feature absent from a replicate's
            explanation as 0 there.
        molecule_score: Mean of the averaged weights over the instance's
            active features.
        n_bootstraps: Number of replicates averaged.
    """

    mean_weight_per_feature: dict[int, float]
    molecule_score: float
    n_bootstraps: int


def sample_perturbations(
    x: FingerprintVector, cfg: SurrogateConfig
) -> list[PerturbedSample]:
    """Draw the perturbed neighborhood of ``x`` (predictions left unset).

    Sample 0 is always the unperturbed instance with proximity exactly 1.
    Each other sample draws k uniformly from {1..m} (m = active bit count),
    zeroes k distinct active coordinates chosen uniformly, and gets proximity
    ``exp(-(h / kernel_width)^2)`` with h the Hamming distance (= k).

    Raises:
        InputError: If ``x`` has no active bits (nothing to explain).
    """
    active = x.active_indices()
    m = int(active.size)
    if m == 0:
        raise InputError(
            "the molecule matches no pattern in the set; nothing to explain"
        )
    width = cfg.resolved_kernel_width(len(x))
    rng = make_rng(cfg.seed)
    samples = [PerturbedSample(bits=x.bits.copy(), proximity=1.0)]
    for _ in range(cfg.n_samples - 1):
        k = int(rng.integers(1, m + 1))
        removed = rng.choice(active, size=k, replace=False)
        bits = x.bits.copy()
        bits[removed] = 0
        samples.append(
            PerturbedSample(bits=bits, proximity=math.exp(-((k / width) ** 2)))
        )
    return samples


def _weighted_ridge(
    A: np.ndarray, y: np.ndarray, proximity: np.ndarray, lam: float
) -> tuple[np.ndarray, float]:
    """Solve min_w,b sum(pi*(y - A w - b)^2) + lam*|w|^2 via Cholesky.

    The intercept is unpenalized. Returns (weights, intercept).
    """
    m = A.shape[1]
    pa = A * proximity[:, None]
    gram = A.T @ pa
    cross = pa.sum(axis=0)
    system = np.empty((m + 1, m + 1))
    system[:m, :m] = gram + lam * np.eye(m)
    system[:m, m] = cross
    system[m, :m] = cross
    system[m, m] = proximity.sum()
    rhs = np.empty(m + 1)
    rhs[:m] = A.T @ (proximity * y)
    rhs[m] = float(proximity @ y)
    try:
        solution = linalg.cho_solve(linalg.cho_factor(system), rhs)
    except np.linalg.LinAlgError as exc:
        raise ValueError(
            "surrogate normal equations are singular; use ridge_lambda > 0"
        ) from exc
    return solution[:m], float(solution[m])


def fit_surrogate(
    samples: Sequence[PerturbedSample], x: FingerprintVector, cfg: SurrogateConfig
) -> Explanation:
    """Fit the sparse weighted-ridge surrogate to predicted probabilities.

    Only active coordinates of ``x`` enter the regression (all samples agree
    on the rest). If more than ``top_k`` coordinates are active, the
    ``top_k`` largest-|weight| features (ties to the lower index) are kept
    and the surrogate is refit on that subset. The reported loss is the
    proximity-weighted squared error of the returned surrogate.

    Raises:
        InputError: If all sample vectors are identical (degenerate design)
            or any sample lacks a prediction.
    """
    if any(s.prediction is None for s in samples):
        raise InputError("fit_surrogate needs a prediction on every sample")
    Z = np.stack([s.bits for s in samples]).astype(np.uint8)
    proximity = np.array([s.proximity for s in samples], dtype=float)
    y = np.array([s.prediction for s in samples], dtype=float)
    if np.unique(Z, axis=0).shape[0] < 2:
        raise InputError("degenerate design: all perturbed samples are identical")

    active = x.active_indices()
    A = Z[:, active].astype(float)

    if np.all(y == y[0]):
        # Constant target: zero weights with intercept y[0] reach loss 0 and
        # ridge penalty 0, the exact global minimum.
        return Explanation(
            instance=x, weights={}, intercept=float(y[0]), loss=0.0, config=cfg
        )

    w, intercept = _weighted_ridge(A, y, proximity, cfg.ridge_lambda)
    selected = np.arange(active.size)
    if active.size > cfg.top_k:
        order = sorted(range(active.size), key=lambda j: (-abs(w[j]), j))
        selected = np.array(sorted(order[: cfg.top_k]))
        w, intercept = _weighted_ridge(
            A[:, selected], y, proximity, cfg.ridge_lambda
        )
    residual = y - (A[:, selected] @ w + intercept)
    loss = float(proximity @ (residual * residual))
    weights = {int(active[j]): float(wj) for j, wj in zip(selected, w)}
    return Explanation(
        instance=x, weights=weights, intercept=intercept, loss=loss, config=cfg
    )


def explain(
    model: ForestModel, x: FingerprintVector, cfg: SurrogateConfig
) -> Explanation:
    """Sample around ``x``, evaluate the forest, and fit the surrogate.

    Fully deterministic given ``cfg.seed``.

    Raises:
        InputError: If ``x`` and ``model`` use different pattern sets, or
            ``x`` matches no pattern.
    """
    if x.pattern_set_id != model.pattern_set_id:
        raise InputError(
            "fingerprint was computed over a different pattern set than the model"
        )
    samples = sample_perturbations(x, cfg)
    Z = np.stack([s.bits for s in samples])
    predictions = predict_proba_batch(model, Z)
    evaluated = [
        replace(s, prediction=float(p)) for s, p in zip(samples, predictions)
    ]
    return fit_surrogate(evaluated, x, cfg)


def bootstrap_weighting(
    model: ForestModel,
    x: FingerprintVector,
    cfg: SurrogateConfig,
    n_bootstraps: int = 100,
) -> MoleculeWeighting:
    """Average ``n_bootstraps`` independent explanations of one instance.

    Replicate ``r`` runs :func:`explain` with a seed derived from
    ``(cfg.seed, r)``. A feature missing from a replicate's explanation
    contributes 0 to its average. The molecule score is the mean of the
    averaged weights over the instance's active features.
    """
    if n_bootstraps < 1:
        raise InputError("n_bootstraps must be positive")
    sums: dict[int, float] = {}
    for r in range(n_bootstraps):
        replicate_cfg = replace(cfg, seed=child_seed(cfg.seed, r))
        explanation = explain(model, x, replicate_cfg)
        for feature, weight in explanation.weights.items():
            sums[feature] = sums.get(feature, 0.0) + weight
    means = {feature: total / n_bootstraps for feature, total in sorted(sums.items())}
    active = x.active_indices()
    score = sum(means.get(int(j), 0.0) for j in active) / active.size
    return MoleculeWeighting(
        mean_weight_per_feature=means,
        molecule_score=float(score),
        n_bootstraps=n_bootstraps,
    )


def explanation_payload(
    explanation: Explanation,
    patterns: Sequence[Pattern],
    feature_metrics: Sequence[BinaryMetrics] | None = None,
    importances: Sequence[float] | None = None,
    weighting: MoleculeWeighting | None = None,
) -> dict:
    """Assemble the exportable document for one explanation.

    Per-feature rows combine the surrogate weight with the pattern text and,
    when available, the feature's standalone training metrics and Gini
    importance — everything a weights table or painted figure needs.
    """
    rows = []
    for feature, weight in sorted(
        explanation.weights.items(), key=lambda kv: (-abs(kv[1]), kv[0])
    ):
        row: dict = {
            "feature": feature,
            "pattern_id": patterns[feature].id,
            "pattern": patterns[feature].text,
            "weight": weight,
        }
        if feature_metrics is not None:
            metric = feature_metrics[feature]
            row["accuracy"] = metric.accuracy
            row["precision"] = metric.precision
            row["recall"] = metric.recall
        if importances is not None:
            row["importance"] = float(importances[feature])
        rows.append(row)
    payload: dict = {
        "instance_bits": [int(b) for b in explanation.instance.bits],
        "pattern_set_id": explanation.instance.pattern_set_id,
        "features": rows,
        "intercept": explanation.intercept,
        "loss": explanation.loss,
        "config": {
            "n_samples": explanation.config.n_samples,
            "kernel_width": explanation.config.kernel_width,
            "ridge_lambda": explanation.config.ridge_lambda,
            "top_k": explanation.config.top_k,
            "seed": explanation.config.seed,
        },
    }
    if weighting is not None:
        payload["bootstrap"] = {
            "n_bootstraps": weighting.n_bootstraps,
            "mean_weight_per_feature": {
                str(k): v for k, v in weighting.mean_weight_per_feature.items()
            },
            "molecule_score": weighting.molecule_score,
        }
    return payload
