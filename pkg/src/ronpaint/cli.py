"""Command-line interface: train, evaluate, explain, validate.

Every command is deterministic given its flags and seed. JSON outputs embed a
run manifest (command line, config, seeds, input digests, tool version); SVG
outputs get a ``<name>.manifest.json`` sidecar. Exit codes: 0 success, 1
input error, 2 internal failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import traceback
from pathlib import Path
from typing import Sequence

from . import __version__, forest, lime, painting, stats
from .errors import InputError, ParseError, RonpaintError
from .molgraph import Molecule, parse_smiles
from .patterns import (
    Pattern,
    compute_fingerprint,
    default_patterns_path,
    load_patterns,
    match_pattern,
    pattern_set_id,
)

_CSV_HEADER = ["name", "smiles", "ron", "label"]


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as input errors (exit code 1)."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        raise InputError(message)


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _build_manifest(
    command: str, argv: Sequence[str], config: dict, inputs: dict[str, Path]
) -> dict:
    return {
        "tool": "ronpaint",
        "version": __version__,
        "command": command,
        "argv": list(argv),
        "config": config,
        "inputs": {
            name: {"path": str(path), "sha256": _sha256(path)}
            for name, path in sorted(inputs.items())
        },
    }


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, sort_keys=True, indent=2)
        handle.write("\n")


def _load_dataset(
    path: Path, patterns: Sequence[Pattern], require_ron: bool = False
) -> forest.Dataset:
    """Read a ``name,smiles,ron,label`` CSV into a fingerprinted dataset.

    All bad rows are collected and reported together; nothing is skipped
    silently.
    """
    set_id = pattern_set_id(patterns)
    rows: list[forest.DatasetRow] = []
    problems: list[str] = []
    try:
        handle = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise InputError(f"cannot read dataset {path}: {exc}") from exc
    with handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != _CSV_HEADER:
            raise InputError(
                f"{path}: expected header {','.join(_CSV_HEADER)!r}, "
                f"got {reader.fieldnames!r}"
            )
        for record in reader:
            line = reader.line_num
            name = (record.get("name") or "").strip()
            smiles = (record.get("smiles") or "").strip()
            ron_text = (record.get("ron") or "").strip()
            label_text = (record.get("label") or "").strip().lower()
            where = f"row {line} ({name or smiles or '?'})"
            if not name or not smiles:
                problems.append(f"{where}: name and smiles are required")
                continue
            try:
                mol = parse_smiles(smiles)
            except ParseError as exc:
                problems.append(f"{where}: {exc}")
                continue
            ron: float | None = None
            if ron_text:
                try:
                    ron = float(ron_text)
                except ValueError:
                    problems.append(f"{where}: ron {ron_text!r} is not a number")
                    continue
            if require_ron and ron is None:
                problems.append(f"{where}: measured ron is required here")
                continue
            if label_text and label_text not in ("high", "low"):
                problems.append(f"{where}: label must be 'high' or 'low'")
                continue
            if ron is None and not label_text:
                problems.append(f"{where}: at least one of ron or label is required")
                continue
            if ron is not None:
                label = forest.label_from_ron(ron)
                if label_text and (label_text == "high") != label:
                    problems.append(
                        f"{where}: label {label_text!r} contradicts ron {ron} "
                        f"(threshold {forest.RON_THRESHOLD})"
                    )
                    continue
            else:
                label = label_text == "high"
            fingerprint = compute_fingerprint(mol, patterns, set_id)
            rows.append(
                forest.DatasetRow(
                    name=name, molecule=mol, fingerprint=fingerprint, ron=ron, label=label
                )
            )
    if problems:
        raise InputError(
            f"{path}: {len(problems)} bad row(s):\n  " + "\n  ".join(problems)
        )
    if not rows:
        raise InputError(f"{path}: no data rows")
    return forest.Dataset(tuple(rows))


def _load_patterns_arg(path_arg: str | None) -> tuple[list[Pattern], Path]:
    path = Path(path_arg) if path_arg else default_patterns_path()
    return load_patterns(path), path


def _print_importances(model: forest.ForestModel, patterns: Sequence[Pattern]) -> None:
    order = sorted(
        range(len(patterns)), key=lambda j: (-float(model.importances[j]), j)
    )
    print("top features by Gini importance:")
    print(f"  {'rank':<5}{'id':<18}{'pattern':<18}{'importance':>10}")
    for rank, j in enumerate(order[:10], start=1):
        print(
            f"  {rank:<5}{patterns[j].id:<18}{patterns[j].text:<18}"
            f"{float(model.importances[j]):>10.4f}"
        )


def cmd_train(args: argparse.Namespace, argv: Sequence[str]) -> int:
    patterns, patterns_path = _load_patterns_arg(args.patterns)
    dataset = _load_dataset(Path(args.data), patterns)
    config = forest.ForestConfig(n_trees=args.trees, seed=args.seed)
    model = forest.train_forest(dataset, config)
    feature_metrics = stats.per_feature_metrics(dataset.feature_matrix(), dataset.labels())
    manifest = _build_manifest(
        "train",
        argv,
        {"trees": args.trees, "seed": args.seed},
        {"data": Path(args.data), "patterns": patterns_path},
    )
    artifact = forest.ModelArtifact(
        model=model,
        patterns=tuple(patterns),
        feature_metrics=tuple(feature_metrics),
        manifest=manifest,
    )
    out = Path(args.out)
    forest.save_model(out, artifact)
    print(f"trained {args.trees} trees on {len(dataset)} rows "
          f"({int(dataset.labels().sum())} high / {int((~dataset.labels()).sum())} low)")
    _print_importances(model, patterns)
    print("per-feature standalone metrics:")
    print(stats.format_feature_summary(stats.summarize_feature_metrics(feature_metrics)))
    print(f"model written to {out}")
    return 0


def cmd_evaluate(args: argparse.Namespace, argv: Sequence[str]) -> int:
    patterns, patterns_path = _load_patterns_arg(args.patterns)
    dataset = _load_dataset(Path(args.data), patterns)
    config = forest.ForestConfig(n_trees=args.trees, seed=args.seed)
    result = forest.leave_out_evaluation(
        dataset, config, rounds=args.rounds, holdout_fraction=args.holdout
    )
    print(result.report())
    if args.out:
        manifest = _build_manifest(
            "evaluate",
            argv,
            {
                "trees": args.trees,
                "seed": args.seed,
                "rounds": args.rounds,
                "holdout": args.holdout,
            },
            {"data": Path(args.data), "patterns": patterns_path},
        )
        payload = {
            "manifest": manifest,
            "rounds": {
                "accuracy": list(result.accuracies),
                "precision": list(result.precisions),
                "recall": list(result.recalls),
                "roc_auc": list(result.aucs),
            },
            "summary": {
                name: {"mean": mean, "std": std}
                for name, (mean, std) in result.summary().items()
            },
            "report": result.report(),
        }
        _write_json(Path(args.out), payload)
        print(f"report written to {args.out}")
    return 0


def _surrogate_config(args: argparse.Namespace) -> lime.SurrogateConfig:
    return lime.SurrogateConfig(
        n_samples=args.samples,
        kernel_width=args.kernel_width,
        ridge_lambda=args.ridge,
        top_k=args.top_k,
        seed=args.seed,
    )


def _check_patterns_match(
    artifact: forest.ModelArtifact, patterns_arg: str | None
) -> None:
    """With --patterns given, insist it hashes to the model's pattern set."""
    if patterns_arg is None:
        return
    patterns = load_patterns(Path(patterns_arg))
    if pattern_set_id(patterns) != artifact.model.pattern_set_id:
        raise InputError(
            f"{patterns_arg} does not match the pattern set this model was "
            "trained on; refusing to mix them"
        )


def _paint_molecule(
    mol: Molecule,
    weights: dict[int, float],
    artifact: forest.ModelArtifact,
    explanation: lime.Explanation,
    title: str,
) -> str:
    matches = {
        artifact.patterns[j].id: match_pattern(artifact.patterns[j], mol)
        for j in weights
    }
    scores = painting.project_weights(mol, matches, explanation, artifact.patterns)
    layout = painting.compute_layout(mol)
    annotations = [
        painting.LegendEntry(
            label=artifact.patterns[j].id,
            pattern=artifact.patterns[j].text,
            weight=w,
            accuracy=artifact.feature_metrics[j].accuracy,
            precision=artifact.feature_metrics[j].precision,
            recall=artifact.feature_metrics[j].recall,
            importance=float(artifact.model.importances[j]),
        )
        for j, w in sorted(weights.items(), key=lambda kv: (-abs(kv[1]), kv[0]))
    ]
    return painting.render(mol, layout, scores, annotations=annotations, title=title)


def cmd_explain(args: argparse.Namespace, argv: Sequence[str]) -> int:
    if args.paint and not args.out:
        raise InputError("--paint needs --out to derive the SVG path")
    artifact = forest.load_model(Path(args.model))
    _check_patterns_match(artifact, args.patterns)
    model = artifact.model
    mol = parse_smiles(args.smiles)
    fingerprint = compute_fingerprint(mol, artifact.patterns, model.pattern_set_id)
    cfg = _surrogate_config(args)
    explanation = lime.explain(model, fingerprint, cfg)
    weighting = lime.bootstrap_weighting(
        model, fingerprint, cfg, n_bootstraps=args.bootstraps
    )
    proba = model.predict_proba(fingerprint)

    print(f"p(high-octane) = {proba:.4f}")
    print(f"{'id':<18}{'pattern':<18}{'weight':>9}{'acc':>7}{'prec':>7}{'rec':>7}{'gini':>7}")
    for j, w in sorted(explanation.weights.items(), key=lambda kv: (-abs(kv[1]), kv[0])):
        m = artifact.feature_metrics[j]
        print(
            f"{artifact.patterns[j].id:<18}{artifact.patterns[j].text:<18}"
            f"{w:>+9.4f}{m.accuracy:>7.2f}{m.precision:>7.2f}{m.recall:>7.2f}"
            f"{float(model.importances[j]):>7.4f}"
        )
    print(f"intercept = {explanation.intercept:.4f}  loss = {explanation.loss:.6f}")
    print(f"molecule score ({weighting.n_bootstraps} bootstraps) = "
          f"{weighting.molecule_score:+.4f}")

    manifest = _build_manifest(
        "explain",
        argv,
        {
            "smiles": args.smiles,
            "samples": args.samples,
            "bootstraps": args.bootstraps,
            "kernel_width": args.kernel_width,
            "ridge": args.ridge,
            "top_k": args.top_k,
            "seed": args.seed,
        },
        {"model": Path(args.model)},
    )
    if args.out:
        payload = lime.explanation_payload(
            explanation,
            artifact.patterns,
            artifact.feature_metrics,
            model.importances,
            weighting,
        )
        payload["name"] = args.smiles
        payload["probability_high"] = proba
        payload["manifest"] = manifest
        _write_json(Path(args.out), payload)
        print(f"explanation written to {args.out}")
    if args.paint:
        svg_path = Path(args.out).with_suffix(".svg")
        title = f"{args.smiles}  p(high) = {proba:.3f}"
        svg = _paint_molecule(mol, explanation.weights, artifact, explanation, title)
        svg_path.write_text(svg, encoding="utf-8")
        _write_json(svg_path.with_name(svg_path.name + ".manifest.json"), manifest)
        print(f"painting written to {svg_path}")
    return 0


def cmd_validate(args: argparse.Namespace, argv: Sequence[str]) -> int:
    if args.paint and not args.out:
        raise InputError("--paint needs --out to derive the SVG path")
    artifact = forest.load_model(Path(args.model))
    model = artifact.model
    dataset = _load_dataset(Path(args.data), artifact.patterns, require_ron=True)
    if len(dataset) < 3:
        raise InputError("validation needs at least 3 rows for rank correlations")
    cfg = _surrogate_config(args)

    names: list[str] = []
    scores: list[float] = []
    probas: list[float] = []
    rons: list[float] = []
    weightings: list[lime.MoleculeWeighting] = []
    for row in dataset.rows:
        weighting = lime.bootstrap_weighting(
            model, row.fingerprint, cfg, n_bootstraps=args.bootstraps
        )
        names.append(row.name)
        weightings.append(weighting)
        scores.append(weighting.molecule_score)
        probas.append(model.predict_proba(row.fingerprint))
        assert row.ron is not None
        rons.append(row.ron)

    correlations = {
        "score_vs_probability": stats.spearman(scores, probas),
        "probability_vs_ron": stats.spearman(probas, rons),
        "score_vs_ron": stats.spearman(scores, rons),
    }
    print(f"{'molecule':<24}{'ron':>8}{'p(high)':>9}{'score':>9}")
    for name, ron, proba, score in zip(names, rons, probas, scores):
        print(f"{name:<24}{ron:>8.1f}{proba:>9.4f}{score:>+9.4f}")
    for key, result in correlations.items():
        label = key.replace("_vs_", " vs ").replace("_", " ")
        print(
            f"spearman {label}: P = {result.rho:.3f} "
            f"(t = {result.t:.3f}, p = {result.p_value:.3g}, n = {result.n})"
        )

    manifest = _build_manifest(
        "validate",
        argv,
        {
            "samples": args.samples,
            "bootstraps": args.bootstraps,
            "kernel_width": args.kernel_width,
            "ridge": args.ridge,
            "top_k": args.top_k,
            "seed": args.seed,
        },
        {"model": Path(args.model), "data": Path(args.data)},
    )
    if args.out:
        payload = {
            "manifest": manifest,
            "molecules": [
                {
                    "name": name,
                    "ron": ron,
                    "probability_high": proba,
                    "molecule_score": score,
                    "mean_weight_per_feature": {
                        str(k): v for k, v in weighting.mean_weight_per_feature.items()
                    },
                }
                for name, ron, proba, score, weighting in zip(
                    names, rons, probas, scores, weightings
                )
            ],
            "correlations": {
                key: {"rho": r.rho, "t": r.t, "p_value": r.p_value, "n": r.n}
                for key, r in correlations.items()
            },
        }
        _write_json(Path(args.out), payload)
        print(f"report written to {args.out}")
    if args.paint:
        cells = []
        for row, weighting, proba, score in zip(
            dataset.rows, weightings, probas, scores
        ):
            weights = weighting.mean_weight_per_feature
            matches = {
                artifact.patterns[j].id: match_pattern(artifact.patterns[j], row.molecule)
                for j in weights
            }
            painted = painting.project_weights(
                row.molecule, matches, weights, artifact.patterns
            )
            cells.append(
                painting.GridCell(
                    mol=row.molecule,
                    layout=painting.compute_layout(row.molecule),
                    scores=painted,
                    title=f"{row.name}  ron {row.ron:g}  p {proba:.2f}  s {score:+.3f}",
                )
            )
        svg_path = Path(args.out).with_suffix(".svg")
        svg_path.write_text(painting.render_grid(cells), encoding="utf-8")
        _write_json(svg_path.with_name(svg_path.name + ".manifest.json"), manifest)
        print(f"grid painting written to {svg_path}")
    return 0


def _add_surrogate_flags(parser: argparse.ArgumentParser, bootstraps_default: int) -> None:
    parser.add_argument("--samples", type=int, default=1000, help="perturbed samples per explanation")
    parser.add_argument("--bootstraps", type=int, default=bootstraps_default, help="bootstrap replicates to average")
    parser.add_argument("--kernel-width", type=float, default=None, help="proximity kernel width (default 0.75*sqrt(d))")
    parser.add_argument("--ridge", type=float, default=1e-3, help="ridge penalty for the surrogate fit")
    parser.add_argument("--top-k", type=int, default=10, help="max features kept in an explanation")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="ronpaint",
        description="Substructure-fingerprint octane classification with "
        "locally interpretable weight paintings.",
    )
    parser.add_argument("--version", action="version", version=f"ronpaint {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a forest and persist the model")
    p_train.add_argument("--data", required=True, help="training CSV (name,smiles,ron,label)")
    p_train.add_argument("--patterns", default=None, help="pattern set file (default: shipped set)")
    p_train.add_argument("--trees", type=int, default=500)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--out", required=True, help="model file to write")
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("evaluate", help="repeated leave-out evaluation")
    p_eval.add_argument("--data", required=True)
    p_eval.add_argument("--patterns", default=None)
    p_eval.add_argument("--trees", type=int, default=500)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--rounds", type=int, default=100)
    p_eval.add_argument("--holdout", type=float, default=0.5)
    p_eval.add_argument("--out", default=None, help="optional JSON report path")
    p_eval.set_defaults(func=cmd_evaluate)

    p_explain = sub.add_parser("explain", help="explain one molecule's classification")
    p_explain.add_argument("smiles", help="molecule to explain")
    p_explain.add_argument("--model", required=True)
    p_explain.add_argument("--patterns", default=None, help="optional pattern file; must match the model")
    p_explain.add_argument("--seed", type=int, default=0)
    _add_surrogate_flags(p_explain, bootstraps_default=1)
    p_explain.add_argument("--out", default=None, help="explanation JSON path")
    p_explain.add_argument("--paint", action="store_true", help="also write an SVG painting next to --out")
    p_explain.set_defaults(func=cmd_explain)

    p_val = sub.add_parser("validate", help="correlate scores with measured RON")
    p_val.add_argument("--model", required=True)
    p_val.add_argument("--data", required=True, help="validation CSV; every row needs a measured ron")
    p_val.add_argument("--seed", type=int, default=0)
    _add_surrogate_flags(p_val, bootstraps_default=100)
    p_val.add_argument("--out", default=None, help="JSON report path")
    p_val.add_argument("--paint", action="store_true", help="also write a grid SVG next to --out")
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args, argv)
    except RonpaintError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:  # pragma: no cover - internal invariant violations
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
