"""Substructure patterns, subgraph matching, and binary fingerprints.

A pattern is a small graph query written in a SMARTS-like notation. Bare
uppercase element symbols match that element in aliphatic form, bare lowercase
symbols match the aromatic form, ``a``/``A`` match any aromatic/aliphatic
atom, and bracket expressions AND together ``;``-separated primitives, each
optionally negated with ``!`` (``[a;!#6]`` = aromatic and not carbon). Bond
symbols ``- = # :`` require single/double/triple/aromatic bonds; an unwritten
bond matches single or aromatic. Branches and single-digit ring closures work
as in SMILES.

Matching is injective on atoms but not induced: molecule bonds with no
counterpart in the pattern never disqualify an embedding.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InputError, ParseError
from .molgraph import (
    AROMATIC,
    ORGANIC_ALIPHATIC,
    ORGANIC_AROMATIC,
    SINGLE,
    SUPPORTED_ELEMENTS,
    Atom,
    Molecule,
)

ELEMENT = "element"
ALIPHATIC_ELEMENT = "aliphatic-element"
AROMATIC_ELEMENT = "aromatic-element"
AROMATIC_ANY = "aromatic-any"
ALIPHATIC_ANY = "aliphatic-any"

SINGLE_OR_AROMATIC = "single-or-aromatic"

_BOND_KINDS = {"-": "single", "=": "double", "#": "triple", ":": "aromatic"}


@dataclass(frozen=True, slots=True)
class AtomTerm:
    """One primitive test on an atom, optionally negated.

    ``element`` tests the atomic number regardless of aromaticity;
    ``aliphatic-element``/``aromatic-element`` additionally constrain the
    aromatic flag; ``aromatic-any``/``aliphatic-any`` test only the flag.
    """

    negated: bool
    kind: str
    atomic_number: int | None = None

    def matches(self, atom: Atom) -> bool:
        if self.kind == ELEMENT:
            ok = atom.atomic_number == self.atomic_number
        elif self.kind == ALIPHATIC_ELEMENT:
            ok = atom.atomic_number == self.atomic_number and not atom.aromatic
        elif self.kind == AROMATIC_ELEMENT:
            ok = atom.atomic_number == self.atomic_number and atom.aromatic
        elif self.kind == AROMATIC_ANY:
            ok = atom.aromatic
        elif self.kind == ALIPHATIC_ANY:
            ok = not atom.aromatic
        else:
            raise ValueError(f"unknown atom term kind {self.kind!r}")
        return ok != self.negated


@dataclass(frozen=True, slots=True)
class AtomPredicate:
    """Conjunction of :class:`AtomTerm` tests for one pattern position."""

    terms: tuple[AtomTerm, ...]

    def matches(self, atom: Atom) -> bool:
        return all(term.matches(atom) for term in self.terms)


@dataclass(frozen=True, slots=True)
class PatternBond:
    """An edge of the pattern graph with its bond requirement.

    ``kind`` is one of ``single``, ``double``, ``triple``, ``aromatic``, or
    ``single-or-aromatic`` (the default for an unwritten bond).
    """

    a: int
    b: int
    kind: str

    def matches(self, order: str) -> bool:
        if self.kind == SINGLE_OR_AROMATIC:
            return order in (SINGLE, AROMATIC)
        return order == self.kind


@dataclass(frozen=True)
class Pattern:
    """A parsed substructure query.

    Attributes:
        id: Stable identifier used as the fingerprint bit name.
        text: Source notation the pattern was parsed from.
        atoms: Atom predicates in input order; every atom after the first is
            bonded to at least one earlier atom, so index order is a
            connected traversal.
        bonds: Pattern edges in input order.
    """

    id: str
    text: str
    atoms: tuple[AtomPredicate, ...]
    bonds: tuple[PatternBond, ...]

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    @cached_property
    def _edges_to_earlier(self) -> tuple[tuple[tuple[int, str], ...], ...]:
        """For each atom, its pattern bonds to lower-indexed atoms."""
        edges: list[list[tuple[int, str]]] = [[] for _ in self.atoms]
        for bond in self.bonds:
            lo, hi = min(bond.a, bond.b), max(bond.a, bond.b)
            edges[hi].append((lo, bond.kind))
        return tuple(tuple(sorted(e)) for e in edges)


@dataclass(frozen=True)
class MatchSet:
    """All embeddings of one pattern in one molecule.

    Attributes:
        pattern_id: Identifier of the matched pattern.
        embeddings: Tuples mapping pattern atom ``i`` to molecule atom
            ``embeddings[k][i]``, sorted lexicographically.
        matched_atoms: Union of molecule atoms covered by any embedding.
        matched_bonds: Union of molecule bond indices onto which some pattern
            bond maps in any embedding.
    """

    pattern_id: str
    embeddings: tuple[tuple[int, ...], ...]
    matched_atoms: frozenset[int]
    matched_bonds: frozenset[int]

    def __bool__(self) -> bool:
        return bool(self.embeddings)


def parse_pattern(text: str, pattern_id: str | None = None) -> Pattern:
    """Parse pattern notation into a :class:`Pattern`.

    Args:
        text: The pattern string.
        pattern_id: Identifier to attach; defaults to ``text`` itself.

    Raises:
        ParseError: On syntax errors or unknown primitives, with byte offset.
    """
    if not text:
        raise ParseError("empty pattern", text, 0)
    atoms: list[AtomPredicate] = []
    bonds: list[PatternBond] = []
    bonded_pairs: set[tuple[int, int]] = set()
    prev: int | None = None
    pending: str | None = None
    pending_at = 0
    branch_stack: list[tuple[int, int]] = []
    ring_open: dict[str, tuple[int, str | None, int]] = {}
    just_opened = False  # a '(' not yet followed by a bond symbol or atom

    def add_bond(a: int, b: int, kind: str | None, at: int) -> None:
        if a == b:
            raise ParseError("ring closure bonds an atom to itself", text, at)
        pair = (min(a, b), max(a, b))
        if pair in bonded_pairs:
            raise ParseError(f"duplicate bond between atoms {a} and {b}", text, at)
        bonded_pairs.add(pair)
        bonds.append(PatternBond(a, b, kind or SINGLE_OR_AROMATIC))

    def attach(predicate: AtomPredicate) -> None:
        nonlocal prev, pending, just_opened
        index = len(atoms)
        atoms.append(predicate)
        if prev is not None:
            add_bond(prev, index, pending, pending_at)
        pending = None
        prev = index
        just_opened = False

    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in _BOND_KINDS:
            if prev is None:
                raise ParseError("bond symbol before any atom", text, i)
            if pending is not None:
                raise ParseError("two consecutive bond symbols", text, i)
            pending = _BOND_KINDS[ch]
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
                kind = pending
                if kind is not None and opening_bond is not None and kind != opening_bond:
                    raise ParseError(
                        f"conflicting bond symbols on ring closure {ch}", text, i
                    )
                add_bond(other, prev, kind or opening_bond, i)
            else:
                ring_open[ch] = (prev, pending, i)
            pending = None
            just_opened = False
            i += 1
        elif ch == "[":
            predicate, i = _parse_bracket_predicate(text, i)
            attach(predicate)
        else:
            predicate, width = _parse_bare_predicate(text, i)
            attach(predicate)
            i += width

    if pending is not None:
        raise ParseError("dangling bond symbol at end of input", text, pending_at)
    if branch_stack:
        raise ParseError("unclosed '('", text, branch_stack[-1][1])
    if ring_open:
        digit = sorted(ring_open)[0]
        raise ParseError(f"unclosed ring closure {digit}", text, ring_open[digit][2])
    if not atoms:
        raise ParseError("no atoms in pattern", text, 0)
    return Pattern(pattern_id if pattern_id is not None else text, text, tuple(atoms), tuple(bonds))


def _parse_bare_predicate(text: str, i: int) -> tuple[AtomPredicate, int]:
    """Parse an unbracketed atom token at offset ``i``; return (predicate, width)."""
    if text[i] == "a":
        return AtomPredicate((AtomTerm(False, AROMATIC_ANY),)), 1
    if text[i] == "A":
        return AtomPredicate((AtomTerm(False, ALIPHATIC_ANY),)), 1
    for symbol in ORGANIC_ALIPHATIC:
        if text.startswith(symbol, i):
            term = AtomTerm(False, ALIPHATIC_ELEMENT, SUPPORTED_ELEMENTS[symbol])
            return AtomPredicate((term,)), len(symbol)
    if text[i] in ORGANIC_AROMATIC:
        term = AtomTerm(False, AROMATIC_ELEMENT, ORGANIC_AROMATIC[text[i]])
        return AtomPredicate((term,)), 1
    raise ParseError(f"unexpected character {text[i]!r}", text, i)


def _parse_bracket_predicate(text: str, start: int) -> tuple[AtomPredicate, int]:
    """Parse a ``[...]`` predicate starting at ``start``; return (predicate, next offset)."""
    i = start + 1
    n = len(text)
    terms: list[AtomTerm] = []
    while True:
        if i >= n:
            raise ParseError("unterminated bracket expression", text, start)
        negated = False
        if text[i] == "!":
            negated = True
            i += 1
            if i >= n:
                raise ParseError("unterminated bracket expression", text, start)
        if text[i] == "#":
            i += 1
            digits = ""
            while i < n and text[i].isdigit():
                digits += text[i]
                i += 1
            if not digits:
                raise ParseError("'#' must be followed by an atomic number", text, i)
            number = int(digits)
            if number < 1:
                raise ParseError("atomic number must be positive", text, i - len(digits))
            terms.append(AtomTerm(negated, ELEMENT, number))
        elif text[i] == "a":
            terms.append(AtomTerm(negated, AROMATIC_ANY))
            i += 1
        elif text[i] == "A":
            terms.append(AtomTerm(negated, ALIPHATIC_ANY))
            i += 1
        elif text[i : i + 2] in SUPPORTED_ELEMENTS:
            terms.append(
                AtomTerm(negated, ALIPHATIC_ELEMENT, SUPPORTED_ELEMENTS[text[i : i + 2]])
            )
            i += 2
        elif text[i] in SUPPORTED_ELEMENTS:
            terms.append(AtomTerm(negated, ALIPHATIC_ELEMENT, SUPPORTED_ELEMENTS[text[i]]))
            i += 1
        elif text[i] in ORGANIC_AROMATIC:
            terms.append(AtomTerm(negated, AROMATIC_ELEMENT, ORGANIC_AROMATIC[text[i]]))
            i += 1
        else:
            raise ParseError(f"unknown primitive {text[i]!r} in bracket expression", text, i)
        if i >= n:
            raise ParseError("unterminated bracket expression", text, start)
        if text[i] == ";":
            i += 1
            continue
        if text[i] == "]":
            return AtomPredicate(tuple(terms)), i + 1
        raise ParseError(
            f"expected ';' or ']' in bracket expression, found {text[i]!r}", text, i
        )


def match_pattern(
    pattern: Pattern, mol: Molecule, max_embeddings: int | None = None
) -> MatchSet:
    """Find every injective embedding of ``pattern`` in ``mol``.

    Embeddings are enumerated depth-first over pattern atoms in index order,
    trying molecule atoms in ascending index order, so the resulting tuple
    list is deterministic and lexicographically sorted.

    Args:
        pattern: The parsed query.
        mol: The target molecule.
        max_embeddings: Stop after this many embeddings (``None`` = all).

    Returns:
        A :class:`MatchSet`; empty ``embeddings`` means no match.
    """
    p = pattern.n_atoms
    predicates = pattern.atoms
    edges_to_earlier = pattern._edges_to_earlier
    sorted_adj = [sorted(entries) for entries in mol.adjacency]
    embeddings: list[tuple[int, ...]] = []
    mapping = [-1] * p
    used = [False] * mol.n_atoms

    def candidates(i: int) -> list[int]:
        if i == 0:
            return list(range(mol.n_atoms))
        anchor, _ = edges_to_earlier[i][0]
        return [w for w, _ in sorted_adj[mapping[anchor]]]

    def feasible(i: int, cand: int) -> bool:
        if used[cand] or not predicates[i].matches(mol.atoms[cand]):
            return False
        for j, kind in edges_to_earlier[i]:
            bond_idx = mol.bond_index(mapping[j], cand)
            if bond_idx is None:
                return False
            order = mol.bonds[bond_idx].order
            if kind == SINGLE_OR_AROMATIC:
                if order != SINGLE and order != AROMATIC:
                    return False
            elif order != kind:
                return False
        return True

    def backtrack(i: int) -> bool:
        """Extend the partial map at position ``i``; True aborts the search."""
        if i == p:
            embeddings.append(tuple(mapping))
            return max_embeddings is not None and len(embeddings) >= max_embeddings
        for cand in candidates(i):
            if feasible(i, cand):
                mapping[i] = cand
                used[cand] = True
                done = backtrack(i + 1)
                used[cand] = False
                mapping[i] = -1
                if done:
                    return True
        return False

    backtrack(0)

    matched_atoms: set[int] = set()
    matched_bonds: set[int] = set()
    for emb in embeddings:
        matched_atoms.update(emb)
        for bond in pattern.bonds:
            idx = mol.bond_index(emb[bond.a], emb[bond.b])
            assert idx is not None
            matched_bonds.add(idx)
    return MatchSet(
        pattern.id, tuple(embeddings), frozenset(matched_atoms), frozenset(matched_bonds)
    )


def has_match(pattern: Pattern, mol: Molecule) -> bool:
    """True when at least one embedding exists (stops at the first)."""
    return bool(match_pattern(pattern, mol, max_embeddings=1).embeddings)


def pattern_set_id(patterns: Sequence[Pattern]) -> str:
    """SHA-256 over the ``id<TAB>text`` lines identifying a pattern set."""
    payload = "\n".join(f"{p.id}\t{p.text}" for p in patterns)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True, eq=False)
class FingerprintVector:
    """Binary presence fingerprint of one molecule over one pattern set.

    Attributes:
        bits: uint8 array, ``bits[k] == 1`` iff pattern ``k`` matches.
        pattern_set_id: Digest of the pattern set the bits are ordered by.
    """

    bits: np.ndarray
    pattern_set_id: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "bits", np.asarray(self.bits, dtype=np.uint8))
        if self.bits.ndim != 1:
            raise ValueError("fingerprint bits must be one-dimensional")
        if not np.all((self.bits == 0) | (self.bits == 1)):
            raise ValueError("fingerprint bits must be 0 or 1")

    def __len__(self) -> int:
        return int(self.bits.shape[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FingerprintVector):
            return NotImplemented
        return self.pattern_set_id == other.pattern_set_id and np.array_equal(
            self.bits, other.bits
        )

    def active_indices(self) -> np.ndarray:
        """Indices of set bits, ascending."""
        return np.flatnonzero(self.bits)


def compute_fingerprint(
    mol: Molecule, patterns: Sequence[Pattern], set_id: str | None = None
) -> FingerprintVector:
    """Compute the presence fingerprint of ``mol`` over ``patterns``.

    Matching short-circuits at the first embedding per pattern.

    Args:
        mol: The molecule to fingerprint.
        patterns: Pattern set; list order defines bit order.
        set_id: Expected :func:`pattern_set_id`, if the caller already knows
            which set these fingerprints must belong to.

    Raises:
        InputError: If ``set_id`` is given and does not hash to ``patterns``.
    """
    actual_id = pattern_set_id(patterns)
    if set_id is not None and set_id != actual_id:
        raise InputError(
            "pattern set does not hash to the expected pattern_set_id; "
            "these patterns are not the set the caller intended"
        )
    bits = np.fromiter(
        (1 if has_match(p, mol) else 0 for p in patterns), dtype=np.uint8, count=len(patterns)
    )
    return FingerprintVector(bits, actual_id)


def load_patterns(path: str | Path) -> list[Pattern]:
    """Load a pattern set from a ``id<TAB>pattern`` file.

    Blank lines and ``#`` comment lines are skipped; file order defines
    fingerprint bit order; ids must be unique.

    Raises:
        InputError: On malformed lines, duplicate ids, or pattern syntax
            errors (with file and line context).
    """
    patterns: list[Pattern] = []
    seen_ids: set[str] = set()
    path = Path(path)
    with open(path, encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            if "\t" not in line:
                raise InputError(
                    f"{path}:{line_no}: expected 'id<TAB>pattern', got {line!r}"
                )
            pid, _, text = line.partition("\t")
            pid = pid.strip()
            text = text.strip()
            if not pid or not text:
                raise InputError(f"{path}:{line_no}: empty id or pattern")
            if pid in seen_ids:
                raise InputError(f"{path}:{line_no}: duplicate pattern id {pid!r}")
            seen_ids.add(pid)
            try:
                patterns.append(parse_pattern(text, pid))
            except ParseError as exc:
                raise InputError(f"{path}:{line_no}: {exc}") from exc
    if not patterns:
        raise InputError(f"{path}: no patterns found")
    return patterns


def default_patterns_path() -> Path:
    """Path of the pattern set shipped with the package."""
    return Path(__file__).resolve().parent / "data" / "default.patterns"
