#!/usr/bin/env python3
"""Correlate molecule scores with measured octane numbers on held-out data.

Every validation molecule gets a bootstrap-averaged explanation; its score
(mean weight over active features) is rank-correlated against the model's
probability and the measured octane number. A grid SVG paints all molecules
side by side on the shared color scale.

Uses a modest bootstrap count to stay quick; raise --bootstraps for tighter
scores.
"""

from pathlib import Path

from ronpaint.cli import main as ronpaint

OUTPUT = Path(__file__).parent / "output"
DATA = Path(__file__).parent.parent / "src" / "ronpaint" / "data"


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

    print("=== validate against measured octane numbers ===")
    ronpaint([
        "validate",
        "--model", str(model_path),
        "--data", str(DATA / "demo_validate.csv"),
        "--bootstraps", "10",
        "--seed", "0",
        "--out", str(OUTPUT / "validation.json"),
        "--paint",
    ])
    print("\nopen output/validation.svg for the painted grid.")


if __name__ == "__main__":
    main()
