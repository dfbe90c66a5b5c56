#!/usr/bin/env python3
"""Train the forest on the shipped corpus and measure generalization.

Runs a short repeated leave-out evaluation (random half held out each round)
and prints the metric summary plus the most important fingerprint features.
Everything is seeded: rerunning prints identical numbers.
"""

import subprocess
import sys
from pathlib import Path

from ronpaint.cli import main as ronpaint

OUTPUT = Path(__file__).parent / "output"
DATA = Path(__file__).parent.parent / "src" / "ronpaint" / "data"


def main() -> None:
    OUTPUT.mkdir(exist_ok=True)
    model_path = OUTPUT / "demo_model.json"

    print("=== train on the shipped corpus ===")
    ronpaint([
        "train",
        "--data", str(DATA / "demo_train.csv"),
        "--trees", "500",
        "--seed", "0",
        "--out", str(model_path),
    ])

    print("\n=== repeated leave-out evaluation (20 rounds) ===")
    ronpaint([
        "evaluate",
        "--data", str(DATA / "demo_train.csv"),
        "--trees", "200",
        "--rounds", "20",
        "--seed", "0",
        "--out", str(OUTPUT / "evaluation.json"),
    ])

    print("\n=== same command through the console entry point ===")
    subprocess.run(
        [sys.executable, "-m", "ronpaint", "evaluate",
         "--data", str(DATA / "benchmark.csv"),
         "--trees", "60", "--rounds", "5", "--seed", "0"],
        check=True,
    )


if __name__ == "__main__":
    main()
