"""Forest training, prediction, evaluation, and persistence."""

import json
import math

import numpy as np
import pytest

from ronpaint import forest
from ronpaint.errors import InputError
from ronpaint.molgraph import parse_smiles
from ronpaint.patterns import FingerprintVector, parse_pattern, pattern_set_id

from oracles import forest_oracle, forest_oracle_proba

PLACEHOLDER = parse_smiles("C")


def make_dataset(X: np.ndarray, y: np.ndarray, set_id: str = "synthetic") -> forest.Dataset:
    rows = tuple(
        forest.DatasetRow(
            name=f"row{i}",
            molecule=PLACEHOLDER,
            fingerprint=FingerprintVector(
                bits=np.asarray(X[i], dtype=np.uint8), pattern_set_id=set_id
            ),
            ron=None,
            label=bool(y[i]),
        )
        for i in range(X.shape[0])
    )
    return forest.Dataset(rows)


def random_dataset(n: int, d: int, seed: int) -> tuple[np.ndarray, np.ndarray, forest.Dataset]:
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 2, size=(n, d)).astype(np.uint8)
    y = rng.integers(0, 2, size=n).astype(bool)
    if y.all() or not y.any():
        y[0] = not y[0]
    return X, y, make_dataset(X, y)


class TestLabeling:
    def test_threshold_is_inclusive(self):
        assert forest.label_from_ron(94.4) is True
        assert forest.label_from_ron(94.39) is False
        assert forest.label_from_ron(120.0) is True

    def test_row_consistency_enforced(self):
        fp = FingerprintVector(bits=np.array([1], dtype=np.uint8), pattern_set_id="s")
        with pytest.raises(ValueError):
            forest.DatasetRow(
                name="x", molecule=PLACEHOLDER, fingerprint=fp, ron=100.0, label=False
            )

    def test_dataset_rejects_mixed_pattern_sets(self):
        fp1 = FingerprintVector(bits=np.array([1], dtype=np.uint8), pattern_set_id="a")
        fp2 = FingerprintVector(bits=np.array([1], dtype=np.uint8), pattern_set_id="b")
        rows = (
            forest.DatasetRow("x", PLACEHOLDER, fp1, None, True),
            forest.DatasetRow("y", PLACEHOLDER, fp2, None, False),
        )
        with pytest.raises(ValueError):
            forest.Dataset(rows)

    def test_feature_matrix_and_labels(self):
        X = np.array([[1, 0], [0, 1], [1, 1]], dtype=np.uint8)
        y = np.array([1, 0, 1], dtype=bool)
        ds = make_dataset(X, y)
        assert np.array_equal(ds.feature_matrix(), X)
        assert np.array_equal(ds.labels(), y)
        sub = ds.subset(np.array([2, 0]))
        assert np.array_equal(sub.feature_matrix(), X[[2, 0]])


class TestConfig:
    def test_default_max_features_is_ceil_sqrt(self):
        cfg = forest.ForestConfig()
        assert cfg.resolved_max_features(24) == 5
        assert cfg.resolved_max_features(16) == 4
        assert cfg.resolved_max_features(2) == 2

    def test_explicit_max_features(self):
        assert forest.ForestConfig(max_features=3).resolved_max_features(10) == 3
        with pytest.raises(ValueError):
            forest.ForestConfig(max_features=11).resolved_max_features(10)

    @pytest.mark.parametrize(
        "kwargs", [{"n_trees": 0}, {"min_leaf": 0}, {"seed": -1}, {"max_features": 0}]
    )
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            forest.ForestConfig(**kwargs)


class TestTraining:
    def test_needs_two_rows_and_both_classes(self):
        X = np.array([[1]], dtype=np.uint8)
        with pytest.raises(InputError):
            forest.train_forest(make_dataset(X, np.array([True])), forest.ForestConfig(n_trees=2))
        X = np.array([[1], [0]], dtype=np.uint8)
        with pytest.raises(InputError):
            forest.train_forest(
                make_dataset(X, np.array([True, True])), forest.ForestConfig(n_trees=2)
            )

    def test_retrain_is_identical(self):
        _, _, ds = random_dataset(40, 6, seed=3)
        cfg = forest.ForestConfig(n_trees=15, seed=11)
        m1 = forest.train_forest(ds, cfg)
        m2 = forest.train_forest(ds, cfg)
        assert len(m1.trees) == len(m2.trees)
        for t1, t2 in zip(m1.trees, m2.trees):
            assert np.array_equal(t1.feature, t2.feature)
            assert np.array_equal(t1.left, t2.left)
            assert np.array_equal(t1.right, t2.right)
            assert np.array_equal(t1.n_low, t2.n_low)
            assert np.array_equal(t1.n_high, t2.n_high)
        assert np.array_equal(m1.importances, m2.importances)

    def test_seed_changes_model(self):
        _, _, ds = random_dataset(40, 6, seed=3)
        m1 = forest.train_forest(ds, forest.ForestConfig(n_trees=10, seed=0))
        m2 = forest.train_forest(ds, forest.ForestConfig(n_trees=10, seed=1))
        different = any(
            not np.array_equal(t1.feature, t2.feature)
            for t1, t2 in zip(m1.trees, m2.trees)
        )
        assert different

    @pytest.mark.parametrize("seed,n,d,trees,max_features,min_leaf", [
        (0, 20, 4, 8, 2, 1),
        (7, 35, 6, 10, 3, 1),
        (13, 25, 5, 6, 5, 2),
        (21, 50, 8, 5, 3, 3),
    ])
    def test_matches_reference_forest(self, seed, n, d, trees, max_features, min_leaf):
        X, y, ds = random_dataset(n, d, seed=seed)
        cfg = forest.ForestConfig(
            n_trees=trees, max_features=max_features, min_leaf=min_leaf, seed=seed
        )
        model = forest.train_forest(ds, cfg)
        ref_trees, ref_imp = forest_oracle(X, y, trees, max_features, min_leaf, seed)
        for tree, ref in zip(model.trees, ref_trees):
            assert tree.feature.tolist() == [nd["feature"] for nd in ref.nodes]
            assert tree.left.tolist() == [nd["left"] for nd in ref.nodes]
            assert tree.right.tolist() == [nd["right"] for nd in ref.nodes]
            assert tree.n_low.tolist() == [nd["n_low"] for nd in ref.nodes]
            assert tree.n_high.tolist() == [nd["n_high"] for nd in ref.nodes]
        assert np.array_equal(model.importances, ref_imp)
        probe = np.random.default_rng(seed + 1).integers(0, 2, size=(30, d)).astype(np.uint8)
        ours = forest.predict_proba_batch(model, probe)
        ref_p = np.array([forest_oracle_proba(ref_trees, row) for row in probe])
        assert np.array_equal(ours, ref_p)

    def test_importances_normalized_and_informative(self):
        rng = np.random.default_rng(5)
        n = 80
        y = rng.integers(0, 2, size=n).astype(bool)
        X = np.column_stack([y.astype(np.uint8), rng.integers(0, 2, size=n)]).astype(np.uint8)
        ds = make_dataset(X, y)
        model = forest.train_forest(ds, forest.ForestConfig(n_trees=30, max_features=2, seed=0))
        assert model.importances.sum() == pytest.approx(1.0, abs=1e-12)
        assert (model.importances >= 0).all()
        assert model.importances[0] > 0.9

    def test_tree_depth_bounded_by_feature_count(self):
        _, _, ds = random_dataset(60, 3, seed=9)
        model = forest.train_forest(ds, forest.ForestConfig(n_trees=10, seed=2))
        for tree in model.trees:
            # walk all root-to-leaf paths; a feature never repeats on a path
            def walk(node, used):
                f = tree.feature[node]
                if f == -1:
                    return
                assert f not in used
                walk(tree.left[node], used | {f})
                walk(tree.right[node], used | {f})

            walk(0, frozenset())


class TestPrediction:
    def test_memorizes_separable_rule(self):
        y = np.array([True] * 10 + [False] * 10)
        X = y.astype(np.uint8).reshape(-1, 1)
        ds = make_dataset(X, y)
        model = forest.train_forest(ds, forest.ForestConfig(n_trees=60, seed=0))
        hi = FingerprintVector(bits=np.array([1], dtype=np.uint8), pattern_set_id="synthetic")
        lo = FingerprintVector(bits=np.array([0], dtype=np.uint8), pattern_set_id="synthetic")
        assert model.predict_proba(hi) > 0.95
        assert model.predict_proba(lo) < 0.05
        assert forest.predict_label(model, hi) is True
        assert forest.predict_label(model, lo) is False

    def test_batch_matches_single(self):
        X, y, ds = random_dataset(30, 5, seed=4)
        model = forest.train_forest(ds, forest.ForestConfig(n_trees=12, seed=4))
        batch = forest.predict_proba_batch(model, X)
        for i in range(X.shape[0]):
            fp = FingerprintVector(bits=X[i], pattern_set_id="synthetic")
            assert model.predict_proba(fp) == batch[i]

    def test_pattern_set_mismatch_rejected(self):
        _, _, ds = random_dataset(20, 3, seed=1)
        model = forest.train_forest(ds, forest.ForestConfig(n_trees=4, seed=0))
        alien = FingerprintVector(bits=np.array([1, 0, 1], dtype=np.uint8), pattern_set_id="other")
        with pytest.raises(InputError):
            model.predict_proba(alien)

    def test_proba_threshold_inclusive(self):
        y = np.array([True, False, True, False])
        X = np.array([[1], [1], [0], [0]], dtype=np.uint8)
        ds = make_dataset(X, y)
        model = forest.train_forest(ds, forest.ForestConfig(n_trees=2, seed=0))
        fp = FingerprintVector(bits=np.array([1], dtype=np.uint8), pattern_set_id="synthetic")
        p = model.predict_proba(fp)
        assert forest.predict_label(model, fp, threshold=p) is True


class TestEvaluation:
    def test_separable_data_scores_perfectly(self):
        y = np.array([True] * 12 + [False] * 12)
        X = y.astype(np.uint8).reshape(-1, 1)
        ds = make_dataset(X, y)
        result = forest.leave_out_evaluation(
            ds, forest.ForestConfig(n_trees=15, seed=0), rounds=20, holdout_fraction=0.5
        )
        summary = result.summary()
        assert summary["accuracy"] == (1.0, 0.0)
        assert summary["roc_auc"] == (1.0, 0.0)

    def test_deterministic(self):
        _, _, ds = random_dataset(30, 4, seed=8)
        cfg = forest.ForestConfig(n_trees=8, seed=5)
        r1 = forest.leave_out_evaluation(ds, cfg, rounds=6)
        r2 = forest.leave_out_evaluation(ds, cfg, rounds=6)
        assert r1 == r2

    def test_round_count_and_validation(self):
        _, _, ds = random_dataset(20, 3, seed=2)
        cfg = forest.ForestConfig(n_trees=4, seed=0)
        assert forest.leave_out_evaluation(ds, cfg, rounds=3).rounds == 3
        with pytest.raises(InputError):
            forest.leave_out_evaluation(ds, cfg, rounds=0)
        with pytest.raises(InputError):
            forest.leave_out_evaluation(ds, cfg, rounds=2, holdout_fraction=1.0)
        with pytest.raises(InputError):
            forest.leave_out_evaluation(ds, cfg, rounds=2, holdout_fraction=0.01)

    def test_impossible_split_rejected(self):
        # 1 positive among 20: a both-sides-balanced split can never be drawn
        y = np.array([True] + [False] * 19)
        X = np.arange(20).reshape(-1, 1) % 2
        ds = make_dataset(X.astype(np.uint8), y)
        with pytest.raises(InputError):
            forest.leave_out_evaluation(
                ds, forest.ForestConfig(n_trees=2, seed=0), rounds=2, holdout_fraction=0.5
            )

    def test_report_format(self):
        result = forest.EvaluationResult(
            accuracies=(1.0, 0.5),
            precisions=(0.75, 0.25),
            recalls=(1.0, 0.0),
            aucs=(0.9, 0.7),
            holdout_fraction=0.25,
            threshold=0.5,
        )
        assert result.report() == (
            "rounds: 2  holdout: 0.25  threshold: 0.5\n"
            "accuracy  75.00% (+/- 25.00)\n"
            "precision 50.00% (+/- 25.00)\n"
            "recall    50.00% (+/- 50.00)\n"
            "roc_auc   0.80 (+/- 0.10)"
        )


class TestPersistence:
    def patterns(self):
        return (
            parse_pattern("C-C", "c2"),
            parse_pattern("C=C", "d2"),
            parse_pattern("c1ccccc1", "ar"),
        )

    def trained_artifact(self):
        pats = self.patterns()
        set_id = pattern_set_id(pats)
        X, y, _ = random_dataset(25, 3, seed=6)
        ds = make_dataset(X, y, set_id=set_id)
        model = forest.train_forest(ds, forest.ForestConfig(n_trees=6, seed=1))
        from ronpaint import stats

        metrics = stats.per_feature_metrics(X, y)
        return forest.ModelArtifact(
            model=model, patterns=pats, feature_metrics=tuple(metrics), manifest={"k": 1}
        )

    def test_roundtrip(self, tmp_path):
        artifact = self.trained_artifact()
        path = tmp_path / "model.json"
        forest.save_model(path, artifact)
        loaded = forest.load_model(path)
        assert loaded.model.pattern_set_id == artifact.model.pattern_set_id
        assert loaded.model.config == artifact.model.config
        assert np.array_equal(loaded.model.importances, artifact.model.importances)
        assert len(loaded.model.trees) == len(artifact.model.trees)
        for a, b in zip(loaded.model.trees, artifact.model.trees):
            assert np.array_equal(a.feature, b.feature)
            assert np.array_equal(a.left, b.left)
            assert np.array_equal(a.right, b.right)
            assert np.array_equal(a.n_low, b.n_low)
            assert np.array_equal(a.n_high, b.n_high)
        assert [p.id for p in loaded.patterns] == ["c2", "d2", "ar"]
        assert loaded.feature_metrics == artifact.feature_metrics
        assert loaded.manifest == {"k": 1}

    def test_predictions_survive_roundtrip(self, tmp_path):
        artifact = self.trained_artifact()
        path = tmp_path / "model.json"
        forest.save_model(path, artifact)
        loaded = forest.load_model(path)
        probe = np.random.default_rng(0).integers(0, 2, size=(10, 3)).astype(np.uint8)
        assert np.array_equal(
            forest.predict_proba_batch(loaded.model, probe),
            forest.predict_proba_batch(artifact.model, probe),
        )

    def test_save_is_byte_deterministic(self, tmp_path):
        artifact = self.trained_artifact()
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        forest.save_model(p1, artifact)
        forest.save_model(p2, artifact)
        assert p1.read_bytes() == p2.read_bytes()

    def test_garbage_rejected(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text("not json at all")
        with pytest.raises(InputError):
            forest.load_model(path)

    def test_wrong_format_rejected(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text(json.dumps({"format": "something-else", "schema_version": 1}))
        with pytest.raises(InputError):
            forest.load_model(path)

    def test_tampered_patterns_rejected(self, tmp_path):
        artifact = self.trained_artifact()
        path = tmp_path / "model.json"
        forest.save_model(path, artifact)
        doc = json.loads(path.read_text())
        doc["patterns"][0]["text"] = "C-C-C"  # no longer hashes to pattern_set_id
        path.write_text(json.dumps(doc))
        with pytest.raises(InputError):
            forest.load_model(path)
