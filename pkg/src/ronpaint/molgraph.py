"""SMILES parsing into immutable molecular graphs.

Supports the organic-subset grammar needed for fuel-component structures:
bare atoms B C N O P S F Cl Br I (aliphatic) and b c n o p s (aromatic),
bracket atoms with an optional explicit hydrogen count and formal charge,
bond symbols ``- = # :``, parenthesized branches, and single-digit ring
closures. Stereochemistry, isotopes, wildcards, and multi-fragment input are
rejected with a :class:`~ronpaint.errors.ParseError` carrying the byte offset
of the offending token.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

from .errors import ParseError

SUPPORTED_ELEMENTS: dict[str, int] = {
    "H": 1,
    "B": 5,
    "C": 6,
    "N": 7,
    "O": 8,
    "F": 9,
    "P": 15,
    "S": 16,
    "Cl": 17,
    "Br": 35,
    "I": 53,
}

#: Elements that may appear bare (unbracketed) as aliphatic atoms,
#: two-letter symbols first so ``Cl``/``Br`` win over ``C``/``B``.
ORGANIC_ALIPHATIC: tuple[str, ...] = ("Cl", "Br", "B", "C", "N", "O", "P", "S", "F", "I")

#: Elements that may appear bare in lowercase as aromatic atoms.
ORGANIC_AROMATIC: dict[str, int] = {"b": 5, "c": 6, "n": 7, "o": 8, "p": 15, "s": 16}

SINGLE = "single"
DOUBLE = "double"
TRIPLE = "triple"
AROMATIC = "aromatic"
BOND_ORDERS: frozenset[str] = frozenset({SINGLE, DOUBLE, TRIPLE, AROMATIC})

_BOND_SYMBOLS = {"-": SINGLE, "=": DOUBLE, "#": TRIPLE, ":": AROMATIC}


@dataclass(frozen=True, slots=True)
class Atom:
    """A single heavy atom (or explicit hydrogen) in a molecular graph.

    Attributes:
        index: Position of the atom in the molecule's atom list.
        atomic_number: Proton count; restricted to :data:`SUPPORTED_ELEMENTS`.
        aromatic: Whether the atom was written in aromatic (lowercase) form.
        explicit_h_count: Hydrogen count from a bracket atom, or ``None`` when
            the input left it unspecified.
        formal_charge: Signed formal charge, ``0`` unless bracketed.
    """

    index: int
    atomic_number: int
    aromatic: bool = False
    explicit_h_count: int | None = None
    formal_charge: int = 0


@dataclass(frozen=True, slots=True)
class Bond:
    """An edge between two atoms.

    Attributes:
        a: Index of the endpoint written first.
        b: Index of the other endpoint.
        order: One of ``single``, ``double``, ``triple``, ``aromatic``.
    """

    a: int
    b: int
    order: str

    def other(self, index: int) -> int:
        """Return the endpoint that is not ``index``."""
        if index == self.a:
            return self.b
        if index == self.b:
            return self.a
        raise ValueError(f"atom {index} is not an endpoint of this bond")


@dataclass(frozen=True)
class Molecule:
    """A connected molecular graph with stable atom and bond numbering.

    Attributes:
        atoms: Atoms in input order.
        bonds: Bonds in input order.
        smiles: The source string the molecule was parsed from.
    """

    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...]
    smiles: str = ""

    def __post_init__(self) -> None:
        n = len(self.atoms)
        if n == 0:
            raise ValueError("a molecule must contain at least one atom")
        for pos, atom in enumerate(self.atoms):
            if atom.index != pos:
                raise ValueError(f"atom at position {pos} carries index {atom.index}")
            if atom.atomic_number not in SUPPORTED_ELEMENTS.values():
                raise ValueError(f"unsupported atomic number {atom.atomic_number}")
        seen: set[tuple[int, int]] = set()
        for bond in self.bonds:
            if not (0 <= bond.a < n and 0 <= bond.b < n) or bond.a == bond.b:
                raise ValueError(f"bond endpoints ({bond.a}, {bond.b}) are invalid")
            if bond.order not in BOND_ORDERS:
                raise ValueError(f"unknown bond order {bond.order!r}")
            pair = (min(bond.a, bond.b), max(bond.a, bond.b))
            if pair in seen:
                raise ValueError(f"duplicate bond between atoms {pair[0]} and {pair[1]}")
            seen.add(pair)
            if bond.order == AROMATIC and not (
                self.atoms[bond.a].aromatic and self.atoms[bond.b].aromatic
            ):
                raise ValueError(
                    f"aromatic bond between non-aromatic atoms {bond.a} and {bond.b}"
                )
        if n > 1:
            reached = {0}
            frontier = [0]
            while frontier:
                v = frontier.pop()
                for w, _ in self.adjacency[v]:
                    if w not in reached:
                        reached.add(w)
                        frontier.append(w)
            if len(reached) != n:
                raise ValueError("molecule graph is not connected")

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    @cached_property
    def adjacency(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        """Per-atom tuple of ``(neighbor_index, bond_index)`` pairs, input order."""
        adj: list[list[tuple[int, int]]] = [[] for _ in self.atoms]
        for bond_idx, bond in enumerate(self.bonds):
            adj[bond.a].append((bond.b, bond_idx))
            adj[bond.b].append((bond.a, bond_idx))
        return tuple(tuple(entries) for entries in adj)

    @cached_property
    def _bond_by_pair(self) -> dict[tuple[int, int], int]:
        return {
            (min(b.a, b.b), max(b.a, b.b)): idx for idx, b in enumerate(self.bonds)
        }

    def bond_index(self, i: int, j: int) -> int | None:
        """Index of the bond joining atoms ``i`` and ``j``, or ``None``."""
        return self._bond_by_pair.get((min(i, j), max(i, j)))

    def neighbors(self, i: int) -> tuple[int, ...]:
        """Indices of atoms bonded to atom ``i``."""
        return tuple(w for w, _ in self.adjacency[i])


def parse_smiles(text: str) -> Molecule:
    """Parse ``text`` into a :class:`Molecule`.

    Args:
        text: A SMILES string restricted to the supported subset.

    Returns:
        The parsed molecule; atom and bond numbering follows input order.

    Raises:
        ParseError: On any syntax error, unsupported feature, or structural
            problem (duplicate bond, unclosed ring, disconnected input), with
            the byte offset of the offending token.
    """
    if not text:
        raise ParseError("empty SMILES string", text, 0)
    atoms: list[Atom] = []
    bonds: list[Bond] = []
    bonded_pairs: set[tuple[int, int]] = set()
    prev: int | None = None
    pending: str | None = None
    pending_at = 0
    branch_stack: list[tuple[int, int]] = []
    ring_open: dict[str, tuple[int, str | None, int]] = {}
    just_opened = False  # a '(' not yet followed by a bond symbol or atom

    def add_bond(a: int, b: int, order: str | None, at: int) -> None:
        if a == b:
            raise ParseError("ring closure bonds an atom to itself", text, at)
        pair = (min(a, b), max(a, b))
        if pair in bonded_pairs:
            raise ParseError(f"duplicate bond between atoms {a} and {b}", text, at)
        if order is None:
            order = AROMATIC if atoms[a].aromatic and atoms[b].aromatic else SINGLE
        elif order == AROMATIC and not (atoms[a].aromatic and atoms[b].aromatic):
            raise ParseError("aromatic bond between non-aromatic atoms", text, at)
        bonded_pairs.add(pair)
        bonds.append(Bond(a, b, order))

    def attach(atom: Atom, at: int) -> None:
        nonlocal prev, pending, just_opened
        atoms.append(atom)
        if prev is not None:
            add_bond(prev, atom.index, pending, at)
        pending = None
        prev = atom.index
        just_opened = False

    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in _BOND_SYMBOLS:
            if prev is None:
                raise ParseError("bond symbol before any atom", text, i)
            if pending is not None:
                raise ParseError("two consecutive bond symbols", text, i)
            pending = _BOND_SYMBOLS[ch]
            pending_at = i
            just_opened = False
            i += 1
        elif ch == "(":
            if prev is None:
                raise ParseError("branch opened before any atom", text, i)
            if pending is not None:
                raise ParseError("bond symbol immediately before '('", text, pending_at)
            if just_opened:
                raise ParseError("'(' directly inside another '('", text, i)
            branch_stack.append((prev, i))
            just_opened = True
            i += 1
        elif ch == ")":
            if pending is not None:
                raise ParseError("dangling bond symbol before ')'", text, pending_at)
            if not branch_stack:
                raise ParseError("unmatched ')'", text, i)
            if just_opened:
                raise ParseError("empty branch", text, i)
            prev = branch_stack.pop()[0]
            i += 1
        elif ch.isdigit():
            if prev is None:
                raise ParseError("ring closure before any atom", text, i)
            if ch == "0":
                raise ParseError("ring-closure digits run from 1 to 9", text, i)
            if ch in ring_open:
                other, opening_bond, _ = ring_open.pop(ch)
                order = pending
                if order is not None and opening_bond is not None and order != opening_bond:
                    raise ParseError(
                        f"conflicting bond symbols on ring closure {ch}", text, i
                    )
                add_bond(other, prev, order or opening_bond, i)
            else:
                ring_open[ch] = (prev, pending, i)
            pending = None
            just_opened = False
            i += 1
        elif ch == "[":
            atom, i = _parse_bracket_atom(text, i, len(atoms))
            attach(atom, i - 1)
        elif ch == "%":
            raise ParseError("two-digit ring closures are not supported", text, i)
        elif ch == ".":
            raise ParseError("multi-fragment input is not supported", text, i)
        elif ch in "/\\":
            raise ParseError("stereo bond symbols are not supported", text, i)
        elif ch == "@":
            raise ParseError("chirality is not supported", text, i)
        elif ch == "*":
            raise ParseError("wildcard atoms are not supported", text, i)
        else:
            matched = False
            for symbol in ORGANIC_ALIPHATIC:
                if text.startswith(symbol, i):
                    attach(Atom(len(atoms), SUPPORTED_ELEMENTS[symbol]), i)
                    i += len(symbol)
                    matched = True
                    break
            if not matched and ch in ORGANIC_AROMATIC:
                attach(Atom(len(atoms), ORGANIC_AROMATIC[ch], aromatic=True), i)
                i += 1
                matched = True
            if not matched:
                raise ParseError(f"unexpected character {ch!r}", text, i)

    if pending is not None:
        raise ParseError("dangling bond symbol at end of input", text, pending_at)
    if branch_stack:
        raise ParseError("unclosed '('", text, branch_stack[-1][1])
    if ring_open:
        digit = sorted(ring_open)[0]
        raise ParseError(f"unclosed ring closure {digit}", text, ring_open[digit][2])
    if not atoms:
        raise ParseError("no atoms in input", text, 0)
    return Molecule(tuple(atoms), tuple(bonds), smiles=text)


def _parse_bracket_atom(text: str, start: int, index: int) -> tuple[Atom, int]:
    """Parse a ``[...]`` atom starting at ``start``; return (atom, next offset)."""
    i = start + 1
    n = len(text)
    if i >= n:
        raise ParseError("unterminated bracket atom", text, start)
    if text[i].isdigit():
        raise ParseError("isotope labels are not supported", text, i)

    aromatic = False
    atomic_number: int | None = None
    if text[i : i + 2] in SUPPORTED_ELEMENTS:
        atomic_number = SUPPORTED_ELEMENTS[text[i : i + 2]]
        i += 2
    elif text[i] in SUPPORTED_ELEMENTS:
        if i + 1 < n and text[i + 1].islower() and text[i + 1] not in "]+-":
            raise ParseError(f"unsupported element {text[i:i + 2]!r}", text, i)
        atomic_number = SUPPORTED_ELEMENTS[text[i]]
        i += 1
    elif text[i] in ORGANIC_AROMATIC:
        atomic_number = ORGANIC_AROMATIC[text[i]]
        aromatic = True
        i += 1
    elif text[i] == "@":
        raise ParseError("chirality is not supported", text, i)
    elif text[i] == "*":
        raise ParseError("wildcard atoms are not supported", text, i)
    else:
        raise ParseError(f"unsupported element {text[i]!r}", text, i)

    h_count: int | None = None
    if i < n and text[i] == "H":
        i += 1
        digits = ""
        while i < n and text[i].isdigit():
            digits += text[i]
            i += 1
        h_count = int(digits) if digits else 1

    charge = 0
    if i < n and text[i] in "+-":
        sign = 1 if text[i] == "+" else -1
        symbol = text[i]
        i += 1
        if i < n and text[i].isdigit():
            digits = ""
            while i < n and text[i].isdigit():
                digits += text[i]
                i += 1
            charge = sign * int(digits)
        else:
            charge = sign
            while i < n and text[i] == symbol:
                charge += sign
                i += 1

    if i >= n:
        raise ParseError("unterminated bracket atom", text, start)
    if text[i] == "@":
        raise ParseError("chirality is not supported", text, i)
    if text[i] != "]":
        raise ParseError(f"unexpected character {text[i]!r} in bracket atom", text, i)
    atom = Atom(index, atomic_number, aromatic, h_count, charge)
    return atom, i + 1


def ring_bonds(mol: Molecule) -> frozenset[int]:
    """Indices of bonds that lie on at least one cycle.

    A bond is cyclic exactly when it is not a bridge of the graph; bridges are
    found with one depth-first pass (Tarjan low-link).
    """
    n = mol.n_atoms
    disc = [-1] * n
    low = [0] * n
    bridges: set[int] = set()
    timer = 0
    for root in range(n):
        if disc[root] != -1:
            continue
        disc[root] = low[root] = timer
        timer += 1
        stack: list[tuple[int, int, int]] = [(root, -1, 0)]
        while stack:
            v, parent_edge, ptr = stack[-1]
            if ptr < len(mol.adjacency[v]):
                stack[-1] = (v, parent_edge, ptr + 1)
                w, edge = mol.adjacency[v][ptr]
                if edge == parent_edge:
                    continue
                if disc[w] == -1:
                    disc[w] = low[w] = timer
                    timer += 1
                    stack.append((w, edge, 0))
                else:
                    low[v] = min(low[v], disc[w])
            else:
                stack.pop()
                if stack:
                    u = stack[-1][0]
                    low[u] = min(low[u], low[v])
                    if low[v] > disc[u]:
                        bridges.add(parent_edge)
    return frozenset(range(len(mol.bonds))) - bridges


def read_smiles_file(path: str | Path) -> list[tuple[int, str]]:
    """Read a text file of SMILES strings, one per line.

    Blank lines and lines starting with ``#`` are skipped.

    Returns:
        ``(line_number, smiles)`` pairs in file order (line numbers are 1-based).
    """
    entries: list[tuple[int, str]] = []
    with open(path, encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            entries.append((line_no, line))
    return entries
