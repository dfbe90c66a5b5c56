#!/usr/bin/env python3
"""Parse SMILES into molecular graphs and draw one as an SVG.

Shows what the parser extracts (atoms, aromaticity, bond orders, rings) and
that layout + rendering work without any model in the loop.
"""

from pathlib import Path

from ronpaint.molgraph import parse_smiles, ring_bonds
from ronpaint.painting import compute_layout, render

OUTPUT = Path(__file__).parent / "output"

EXAMPLES = {
    "myrcene": "C=CC(=C)CCC=C(C)C",
    "toluene": "Cc1ccccc1",
    "2-methylfuran": "Cc1ccco1",
    "mtbe": "COC(C)(C)C",
}


def describe(name: str, smiles: str) -> None:
    mol = parse_smiles(smiles)
    aromatic = sum(1 for atom in mol.atoms if atom.aromatic)
    orders = [bond.order for bond in mol.bonds]
    print(f"{name} ({smiles})")
    print(f"  {mol.n_atoms} atoms ({aromatic} aromatic), {len(mol.bonds)} bonds")
    print(f"  bond orders: {', '.join(orders)}")
    print(f"  ring bonds: {sorted(ring_bonds(mol)) or 'none'}")


def main() -> None:
    OUTPUT.mkdir(exist_ok=True)
    for name, smiles in EXAMPLES.items():
        describe(name, smiles)

    mol = parse_smiles(EXAMPLES["myrcene"])
    svg = render(mol, compute_layout(mol), title="myrcene")
    path = OUTPUT / "myrcene_plain.svg"
    path.write_text(svg, encoding="utf-8")
    print(f"\nwrote {path}")


if __name__ == "__main__":
    main()
