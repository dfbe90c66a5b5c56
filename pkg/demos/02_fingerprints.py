#!/usr/bin/env python3
"""Match substructure patterns and build binary fingerprints.

Every molecule becomes a bit vector: bit j is 1 when pattern j embeds
somewhere in its graph. The embeddings themselves (atom index tuples) are
also available, which is what painting later relies on.
"""

from ronpaint.molgraph import parse_smiles
from ronpaint.patterns import (
    compute_fingerprint,
    default_patterns_path,
    load_patterns,
    match_pattern,
    parse_pattern,
)

MOLECULES = {
    "n-pentane": "CCCCC",
    "isooctane": "CC(C)CC(C)(C)C",
    "1-hexene": "C=CCCCC",
    "myrcene": "C=CC(=C)CCC=C(C)C",
    "toluene": "Cc1ccccc1",
    "ethanol": "CCO",
}


def main() -> None:
    patterns = load_patterns(default_patterns_path())
    print(f"{len(patterns)} patterns in the shipped set:")
    for p in patterns:
        print(f"  {p.id:<14} {p.text}")

    header = " ".join(f"{p.id[:6]:>6}" for p in patterns)
    print(f"\n{'':<12}{header}")
    for name, smiles in MOLECULES.items():
        fp = compute_fingerprint(parse_smiles(smiles), patterns)
        row = " ".join(f"{int(b):>6}" for b in fp.bits)
        print(f"{name:<12}{row}")

    # one pattern in detail: every embedding of a 5-carbon single-bond chain
    chain5 = parse_pattern("C-C-C-C-C", "chain5")
    myrcene = parse_smiles(MOLECULES["myrcene"])
    match = match_pattern(chain5, myrcene)
    print(f"\nchain5 embeddings in myrcene: {list(match.embeddings)}")
    print(f"atoms covered: {sorted(match.matched_atoms)}")


if __name__ == "__main__":
    main()
