#!/usr/bin/env python3
"""Explain one molecule's classification and paint the weights onto it.

Fits a local linear surrogate around the forest's prediction for myrcene,
prints the signed per-pattern weights, and writes an SVG in which atoms and
bonds are colored blue (pushes toward low octane) through white to red
(pushes toward high octane), with a legend of the weighted patterns.
"""

from pathlib import Path

from ronpaint.cli import main as ronpaint

OUTPUT = Path(__file__).parent / "output"
DATA = Path(__file__).parent.parent / "src" / "ronpaint" / "data"

MYRCENE = "C=CC(=C)CCC=C(C)C"


def main() -> None:
    OUTPUT.mkdir(exist_ok=True)
    model_path = OUTPUT / "demo_model.json"

    if not model_path.exists():
        print("training a model first...")
        ronpaint([
            "train", "--data", str(DATA / "demo_train.csv"),
            "--seed", "0", "--out", str(model_path),
        ])
        print()

    print(f"=== explain myrcene {MYRCENE} ===")
    ronpaint([
        "explain", MYRCENE,
        "--model", str(model_path),
        "--seed", "0",
        "--bootstraps", "10",
        "--out", str(OUTPUT / "myrcene_explanation.json"),
        "--paint",
    ])
    print("\nopen output/myrcene_explanation.svg: the interior single-bond")
    print("chain shows up blue, the vinyl branch and double bonds red.")


if __name__ == "__main__":
    main()
