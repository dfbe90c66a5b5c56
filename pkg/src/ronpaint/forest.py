"""Random forest over binary fingerprints, trained from scratch.

Trees split on single fingerprint bits by Gini impurity. Each tree draws its
own bootstrap sample and its randomness from a generator derived purely from
the forest seed and the tree index, so training is reproducible bit for bit.
Prediction flattens all trees into one arena of arrays and advances every
(tree, sample) state in vectorized steps.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from . import stats
from .errors import InputError
from .molgraph import Molecule
from .patterns import FingerprintVector, Pattern, parse_pattern, pattern_set_id
from .seeding import child_seed, make_rng

#: Research octane number at or above which a compound is labeled high-octane.
RON_THRESHOLD = 94.4

_MODEL_FORMAT = "ronpaint-model"
_SCHEMA_VERSION = 1

# Stream tags keeping derived RNGs collision-free.
_TREE_STREAM = 0
_SPLIT_STREAM = 1
_ROUND_STREAM = 2


def label_from_ron(ron: float) -> bool:
    """True (high-octane) when ``ron >= RON_THRESHOLD``; the boundary is high."""
    return ron >= RON_THRESHOLD


@dataclass(frozen=True)
class DatasetRow:
    """One labeled compound.

    Attributes:
        name: Display name.
        molecule: Parsed structure.
        fingerprint: Presence fingerprint over the active pattern set.
        ron: Measured research octane number, or ``None`` if only a label
            was supplied.
        label: True = high-octane class.
    """

    name: str
    molecule: Molecule
    fingerprint: FingerprintVector
    ron: float | None
    label: bool

    def __post_init__(self) -> None:
        if self.ron is not None and self.label != label_from_ron(self.ron):
            raise ValueError(
                f"row {self.name!r}: label contradicts RON {self.ron} "
                f"(threshold {RON_THRESHOLD})"
            )


@dataclass(frozen=True)
class Dataset:
    """An ordered collection of rows sharing one pattern set."""

    rows: tuple[DatasetRow, ...]

    def __post_init__(self) -> None:
        if not self.rows:
            raise ValueError("dataset is empty")
        set_ids = {row.fingerprint.pattern_set_id for row in self.rows}
        if len(set_ids) != 1:
            raise ValueError("dataset rows mix different pattern sets")
        lengths = {len(row.fingerprint) for row in self.rows}
        if len(lengths) != 1:
            raise ValueError("dataset rows have differing fingerprint lengths")

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def n_features(self) -> int:
        return len(self.rows[0].fingerprint)

    @property
    def pattern_set_id(self) -> str:
        return self.rows[0].fingerprint.pattern_set_id

    def feature_matrix(self) -> np.ndarray:
        """(n_rows, n_features) uint8 matrix of fingerprint bits."""
        return np.stack([row.fingerprint.bits for row in self.rows]).astype(np.uint8)

    def labels(self) -> np.ndarray:
        """(n_rows,) boolean label vector."""
        return np.array([row.label for row in self.rows], dtype=bool)

    def subset(self, indices: Sequence[int]) -> "Dataset":
        return Dataset(tuple(self.rows[int(i)] for i in indices))


@dataclass(frozen=True)
class ForestConfig:
    """Training configuration.

    Attributes:
        n_trees: Number of trees.
        max_features: Features sampled per split; ``None`` means
            ``ceil(sqrt(n_features))`` resolved at training time.
        min_leaf: Minimum samples in each child of a split.
        seed: Master seed; all tree randomness derives from it.
    """

    n_trees: int = 500
    max_features: int | None = None
    min_leaf: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise ValueError("n_trees must be positive")
        if self.max_features is not None and self.max_features < 1:
            raise ValueError("max_features must be positive")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def resolved_max_features(self, n_features: int) -> int:
        if self.max_features is None:
            return min(n_features, math.ceil(math.sqrt(n_features)))
        if self.max_features > n_features:
            raise ValueError(
                f"max_features={self.max_features} exceeds feature count {n_features}"
            )
        return self.max_features


@dataclass(frozen=True)
class Tree:
    """One decision tree as parallel node arrays.

    ``feature[k] == -1`` marks node ``k`` as a leaf; otherwise samples with
    bit ``feature[k]`` clear go to ``left[k]`` and set to ``right[k]``.
    ``n_low``/``n_high`` hold the bootstrap class counts at each node.
    """

    feature: np.ndarray
    left: np.ndarray
    right: np.ndarray
    n_low: np.ndarray
    n_high: np.ndarray

    @cached_property
    def votes(self) -> np.ndarray:
        """Per-node vote: 1.0 high majority, 0.0 low majority, 0.5 tie."""
        return np.where(
            self.n_high > self.n_low, 1.0, np.where(self.n_high < self.n_low, 0.0, 0.5)
        )

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])


@dataclass(frozen=True)
class ForestModel:
    """A trained forest bound to the pattern set it was trained on."""

    trees: tuple[Tree, ...]
    config: ForestConfig
    pattern_set_id: str
    importances: np.ndarray

    @cached_property
    def _arena(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """All trees concatenated: (feature, left, right, votes, roots)."""
        offsets = np.cumsum([0] + [t.n_nodes for t in self.trees[:-1]])
        feature = np.concatenate([t.feature for t in self.trees])
        left = np.concatenate(
            [t.left + off for t, off in zip(self.trees, offsets)]
        ).astype(np.int64)
        right = np.concatenate(
            [t.right + off for t, off in zip(self.trees, offsets)]
        ).astype(np.int64)
        votes = np.concatenate([t.votes for t in self.trees])
        return feature, left, right, votes, offsets.astype(np.int64)

    def predict_proba(self, x: FingerprintVector) -> float:
        """Mean tree vote for one fingerprint (probability of high-octane)."""
        if x.pattern_set_id != self.pattern_set_id:
            raise InputError(
                "fingerprint was computed over a different pattern set than "
                "the model was trained on"
            )
        return float(predict_proba_batch(self, x.bits[np.newaxis, :])[0])


def predict_proba_batch(model: ForestModel, X: np.ndarray) -> np.ndarray:
    """Mean tree vote for each row of a (n, n_features) bit matrix."""
    X = np.asarray(X, dtype=np.uint8)
    if X.ndim != 2:
        raise ValueError("X must be 2-d")
    feature, left, right, votes, roots = model._arena
    n_trees = len(model.trees)
    n = X.shape[0]
    # One state per (tree, sample), tree-major; advance until all hit leaves.
    state = np.repeat(roots, n)
    cols = np.tile(np.arange(n), n_trees)
    active = np.flatnonzero(feature[state] >= 0)
    while active.size:
        st = state[active]
        f = feature[st]
        bits = X[cols[active], f]
        nxt = np.where(bits == 1, right[st], left[st])
        state[active] = nxt
        active = active[feature[nxt] >= 0]
    return votes[state].reshape(n_trees, n).mean(axis=0)


def predict_label(model: ForestModel, x: FingerprintVector, threshold: float = 0.5) -> bool:
    """Classify one fingerprint; probabilities at the threshold count as high."""
    return model.predict_proba(x) >= threshold


class _TreeBuilder:
    """Grows one tree on a bootstrap sample; collects flat node arrays."""

    def __init__(
        self,
        X: np.ndarray,
        y: np.ndarray,
        rng: np.random.Generator,
        max_features: int,
        min_leaf: int,
    ) -> None:
        self.X = X
        self.y = y
        self.rng = rng
        self.max_features = max_features
        self.min_leaf = min_leaf
        self.n_total = X.shape[0]
        self.n_features = X.shape[1]
        self.feature: list[int] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.n_low: list[int] = []
        self.n_high: list[int] = []
        self.importance = np.zeros(self.n_features)

    def build(self, idx: np.ndarray) -> int:
        node = len(self.feature)
        y_node = self.y[idx]
        n_node = int(idx.size)
        n_high = int(y_node.sum())
        n_low = n_node - n_high
        self.feature.append(-1)
        self.left.append(-1)
        self.right.append(-1)
        self.n_low.append(n_low)
        self.n_high.append(n_high)
        if n_high == 0 or n_low == 0 or n_node < 2 * self.min_leaf:
            return node
        perm = self.rng.permutation(self.n_features)
        split = self._choose_split(idx, n_high, perm)
        if split is None:
            return node
        f, decrease = split
        self.importance[f] += (n_node / self.n_total) * decrease
        bits = self.X[idx, f]
        left_idx = idx[bits == 0]
        right_idx = idx[bits == 1]
        self.feature[node] = f
        left_child = self.build(left_idx)
        self.left[node] = left_child
        right_child = self.build(right_idx)
        self.right[node] = right_child
        return node

    def _choose_split(
        self, idx: np.ndarray, n_high: int, perm: np.ndarray
    ) -> tuple[int, float] | None:
        """Best Gini split among the first max_features of ``perm``.

        Gini ties break toward the lowest feature index. When none of the
        sampled features split validly, the remainder of the permutation is
        scanned and the first valid split is taken, so a leaf forms only when
        no feature can split the node at all.
        """
        n_node = int(idx.size)
        gini_node = self._gini(n_high, n_node)
        sampled = perm[: self.max_features]
        scores = self._weighted_child_gini(idx, n_high, sampled)
        valid = ~np.isnan(scores)
        if valid.any():
            best_score = scores[valid].min()
            winners = sampled[valid & (scores == best_score)]
            return int(winners.min()), gini_node - float(best_score)
        for f in perm[self.max_features :]:
            scores = self._weighted_child_gini(idx, n_high, np.array([f]))
            if not np.isnan(scores[0]):
                return int(f), gini_node - float(scores[0])
        return None

    def _weighted_child_gini(
        self, idx: np.ndarray, n_high: int, features: np.ndarray
    ) -> np.ndarray:
        """Weighted child impurity per candidate feature; NaN marks invalid."""
        n_node = idx.size
        sub = self.X[np.ix_(idx, features)]
        n1 = sub.sum(axis=0, dtype=np.int64)
        high1 = self.y[idx].astype(np.int64) @ sub
        n0 = n_node - n1
        high0 = n_high - high1
        with np.errstate(divide="ignore", invalid="ignore"):
            p1 = high1 / n1
            p0 = high0 / n0
            g1 = 1.0 - p1**2 - (1.0 - p1) ** 2
            g0 = 1.0 - p0**2 - (1.0 - p0) ** 2
            weighted = (n1 * g1 + n0 * g0) / n_node
        invalid = (n1 < self.min_leaf) | (n0 < self.min_leaf)
        weighted[invalid] = np.nan
        return weighted

    @staticmethod
    def _gini(n_high: int, n_node: int) -> float:
        p = n_high / n_node
        return 1.0 - p**2 - (1.0 - p) ** 2

    def finish(self) -> Tree:
        return Tree(
            feature=np.asarray(self.feature, dtype=np.int32),
            left=np.asarray(self.left, dtype=np.int32),
            right=np.asarray(self.right, dtype=np.int32),
            n_low=np.asarray(self.n_low, dtype=np.int32),
            n_high=np.asarray(self.n_high, dtype=np.int32),
        )


def train_forest(data: Dataset, config: ForestConfig) -> ForestModel:
    """Train a forest on ``data``.

    Tree ``t`` derives its generator from ``(config.seed, t)`` and consumes
    it in a fixed order (bootstrap draw, then one feature permutation per
    node in preorder), so retraining reproduces the model exactly.

    Raises:
        InputError: If the dataset has fewer than 2 rows or only one class.
    """
    if len(data) < 2:
        raise InputError("training requires at least 2 rows")
    y = data.labels()
    if y.all() or not y.any():
        raise InputError("training requires both classes to be present")
    X = data.feature_matrix()
    max_features = config.resolved_max_features(data.n_features)

    trees: list[Tree] = []
    importance_sum = np.zeros(data.n_features)
    n = len(data)
    for t in range(config.n_trees):
        rng = make_rng(config.seed, _TREE_STREAM, t)
        bootstrap = rng.integers(0, n, size=n)
        builder = _TreeBuilder(X, y, rng, max_features, config.min_leaf)
        builder.build(bootstrap)
        trees.append(builder.finish())
        importance_sum += builder.importance

    importances = importance_sum / config.n_trees
    total = importances.sum()
    if total > 0:
        importances = importances / total
    return ForestModel(
        trees=tuple(trees),
        config=config,
        pattern_set_id=data.pattern_set_id,
        importances=importances,
    )


@dataclass(frozen=True)
class EvaluationResult:
    """Per-round holdout metrics from repeated random splits.

    Standard deviations are population (ddof=0), so a single round reports
    a spread of exactly 0.
    """

    accuracies: tuple[float, ...]
    precisions: tuple[float, ...]
    recalls: tuple[float, ...]
    aucs: tuple[float, ...]
    holdout_fraction: float
    threshold: float

    def _mean_std(self, values: tuple[float, ...]) -> tuple[float, float]:
        arr = np.asarray(values)
        return float(arr.mean()), float(arr.std())

    @property
    def rounds(self) -> int:
        return len(self.accuracies)

    def summary(self) -> dict[str, tuple[float, float]]:
        """Metric name -> (mean, population std)."""
        return {
            "accuracy": self._mean_std(self.accuracies),
            "precision": self._mean_std(self.precisions),
            "recall": self._mean_std(self.recalls),
            "roc_auc": self._mean_std(self.aucs),
        }

    def report(self) -> str:
        parts = self.summary()
        lines = [f"rounds: {self.rounds}  holdout: {self.holdout_fraction}  threshold: {self.threshold}"]
        for name in ("accuracy", "precision", "recall"):
            mean, std = parts[name]
            lines.append(f"{name:<9} {stats.format_mean_std(mean, std, percent=True)}")
        mean, std = parts["roc_auc"]
        lines.append(f"{'roc_auc':<9} {stats.format_mean_std(mean, std)}")
        return "\n".join(lines)


def leave_out_evaluation(
    data: Dataset,
    config: ForestConfig,
    rounds: int = 100,
    holdout_fraction: float = 0.5,
    threshold: float = 0.5,
) -> EvaluationResult:
    """Repeatedly hold out a random fraction, retrain, and score the holdout.

    Each round uses a split generator derived from ``(config.seed, round)``
    and a fresh forest seed derived likewise. Splits that leave either half
    single-class are redrawn from the same stream (up to 100 attempts).

    Raises:
        InputError: On unusable sizes or when no class-balanced split can be
            drawn.
    """
    if rounds < 1:
        raise InputError("rounds must be positive")
    if not 0.0 < holdout_fraction < 1.0:
        raise InputError("holdout fraction must lie strictly between 0 and 1")
    n = len(data)
    n_hold = int(math.floor(n * holdout_fraction))
    if n_hold < 1 or n - n_hold < 2:
        raise InputError(
            f"holdout fraction {holdout_fraction} leaves too few rows "
            f"(holdout {n_hold}, training {n - n_hold})"
        )
    labels = data.labels()
    features = data.feature_matrix()

    accuracies: list[float] = []
    precisions: list[float] = []
    recalls: list[float] = []
    aucs: list[float] = []
    for r in range(rounds):
        rng = make_rng(config.seed, _SPLIT_STREAM, r)
        for _ in range(100):
            perm = rng.permutation(n)
            hold_idx, train_idx = perm[:n_hold], perm[n_hold:]
            hold_y, train_y = labels[hold_idx], labels[train_idx]
            if 0 < hold_y.sum() < hold_y.size and 0 < train_y.sum() < train_y.size:
                break
        else:
            raise InputError(
                "could not draw a split with both classes on both sides; "
                "the dataset is too imbalanced for this holdout fraction"
            )
        round_config = replace(config, seed=child_seed(config.seed, _ROUND_STREAM, r))
        model = train_forest(data.subset(train_idx), round_config)
        proba = predict_proba_batch(model, features[hold_idx])
        predicted = proba >= threshold
        m = stats.binary_metrics(predicted, hold_y)
        accuracies.append(m.accuracy)
        precisions.append(m.precision)
        recalls.append(m.recall)
        aucs.append(stats.roc_auc(proba, hold_y))
    return EvaluationResult(
        accuracies=tuple(accuracies),
        precisions=tuple(precisions),
        recalls=tuple(recalls),
        aucs=tuple(aucs),
        holdout_fraction=holdout_fraction,
        threshold=threshold,
    )


@dataclass(frozen=True)
class ModelArtifact:
    """Everything persisted with a trained model.

    The pattern list and per-feature training metrics ride along so that
    explanation needs only this artifact plus a SMILES string.
    """

    model: ForestModel
    patterns: tuple[Pattern, ...]
    feature_metrics: tuple[stats.BinaryMetrics, ...]
    manifest: dict | None = None


def save_model(path: str | Path, artifact: ModelArtifact) -> None:
    """Write a model artifact as deterministic JSON (sorted keys, no times)."""
    model = artifact.model
    payload = {
        "format": _MODEL_FORMAT,
        "schema_version": _SCHEMA_VERSION,
        "config": {
            "n_trees": model.config.n_trees,
            "max_features": model.config.max_features,
            "min_leaf": model.config.min_leaf,
            "seed": model.config.seed,
        },
        "pattern_set_id": model.pattern_set_id,
        "patterns": [{"id": p.id, "text": p.text} for p in artifact.patterns],
        "feature_metrics": [
            {"tp": m.tp, "fp": m.fp, "tn": m.tn, "fn": m.fn}
            for m in artifact.feature_metrics
        ],
        "importances": [float(v) for v in model.importances],
        "trees": [
            {
                "feature": tree.feature.tolist(),
                "left": tree.left.tolist(),
                "right": tree.right.tolist(),
                "n_low": tree.n_low.tolist(),
                "n_high": tree.n_high.tolist(),
            }
            for tree in model.trees
        ],
        "manifest": artifact.manifest,
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, sort_keys=True, separators=(",", ":"))
        handle.write("\n")


def load_model(path: str | Path) -> ModelArtifact:
    """Load a model artifact, validating format, version, and pattern digest.

    Raises:
        InputError: On wrong format, unsupported schema version, corrupt
            structure, or a pattern list that no longer hashes to the stored
            pattern_set_id.
    """
    try:
        with open(path, encoding="utf-8") as handle:
            payload = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read model file {path}: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format") != _MODEL_FORMAT:
        raise InputError(f"{path} is not a {_MODEL_FORMAT} file")
    if payload.get("schema_version") != _SCHEMA_VERSION:
        raise InputError(
            f"unsupported model schema version {payload.get('schema_version')!r}"
        )
    try:
        cfg = payload["config"]
        config = ForestConfig(
            n_trees=cfg["n_trees"],
            max_features=cfg["max_features"],
            min_leaf=cfg["min_leaf"],
            seed=cfg["seed"],
        )
        patterns = tuple(
            parse_pattern(entry["text"], entry["id"]) for entry in payload["patterns"]
        )
        metrics = tuple(
            stats.BinaryMetrics(tp=m["tp"], fp=m["fp"], tn=m["tn"], fn=m["fn"])
            for m in payload["feature_metrics"]
        )
        trees = []
        for entry in payload["trees"]:
            tree = Tree(
                feature=np.asarray(entry["feature"], dtype=np.int32),
                left=np.asarray(entry["left"], dtype=np.int32),
                right=np.asarray(entry["right"], dtype=np.int32),
                n_low=np.asarray(entry["n_low"], dtype=np.int32),
                n_high=np.asarray(entry["n_high"], dtype=np.int32),
            )
            if not (
                tree.feature.shape
                == tree.left.shape
                == tree.right.shape
                == tree.n_low.shape
                == tree.n_high.shape
            ):
                raise ValueError("tree arrays have inconsistent lengths")
            trees.append(tree)
        importances = np.asarray(payload["importances"], dtype=float)
        stored_set_id = payload["pattern_set_id"]
        manifest = payload.get("manifest")
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"model file {path} is corrupt: {exc}") from exc
    if pattern_set_id(patterns) != stored_set_id:
        raise InputError(
            f"model file {path} is corrupt: pattern list does not hash to the "
            "stored pattern_set_id"
        )
    if importances.shape != (len(patterns),):
        raise InputError(
            f"model file {path} is corrupt: importances do not match pattern count"
        )
    model = ForestModel(
        trees=tuple(trees),
        config=config,
        pattern_set_id=stored_set_id,
        importances=importances,
    )
    return ModelArtifact(
        model=model, patterns=patterns, feature_metrics=metrics, manifest=manifest
    )
