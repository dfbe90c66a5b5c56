"""Painting explanation weights onto 2-D structure drawings.

Weights are projected from features onto the atoms and bonds their matches
cover, normalized per molecule to [-1, 1], mapped through a diverging
blue-white-red scale, and drawn as colored discs and bond lines in an SVG
document. Layout places rings as regular polygons (fused rings share their
common edge), walks acyclic substituents with 120-degree zigzag angles, and
finishes with a fixed 200-iteration spring relaxation whose forces vanish on
already-clean layouts, so output is a pure function of the molecule.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import InputError
from .lime import Explanation
from .molgraph import AROMATIC, DOUBLE, SINGLE, TRIPLE, Molecule, ring_bonds
from .patterns import MatchSet, Pattern
from .seeding import make_rng

_ELEMENT_SYMBOL = {1: "H", 5: "B", 6: "C", 7: "N", 8: "O", 9: "F", 15: "P", 16: "S", 17: "Cl", 35: "Br", 53: "I"}

#: Layout constants (bond-length units) and relaxation schedule.
_RELAX_ITERATIONS = 200
_SPRING = 0.25
_REPULSION = 0.25
_REPULSION_CUTOFF = 0.9
_MAX_STEP = 0.2
_LAYOUT_JITTER_SEED = 7

#: Drawing constants (pixels).
_BOND_PX = 40.0
_MARGIN_PX = 30.0
_DISC_RADIUS_PX = 11.0
_BOND_WIDTH_PX = 2.4
_PARALLEL_OFFSET_PX = 3.2
_FONT_PX = 12
_LEGEND_WIDTH_PX = 460.0
_LEGEND_ROW_PX = 16.0


@dataclass(frozen=True)
class AtomScores:
    """Raw and normalized weight projections for one molecule.

    ``normalized`` arrays are ``raw / max(|raw|)`` over atoms and bonds
    jointly per kind, or all zeros when every raw score is zero.
    """

    atom_raw: np.ndarray
    atom_normalized: np.ndarray
    bond_raw: np.ndarray
    bond_normalized: np.ndarray


@dataclass(frozen=True)
class Layout:
    """2-D atom coordinates in bond-length units (one row per atom)."""

    coordinates: np.ndarray


@dataclass(frozen=True)
class LegendEntry:
    """One legend row: a pattern with its weight and training statistics."""

    label: str
    pattern: str
    weight: float
    accuracy: float | None = None
    precision: float | None = None
    recall: float | None = None
    importance: float | None = None


@dataclass(frozen=True)
class GridCell:
    """One tile of a grid rendering."""

    mol: Molecule
    layout: Layout
    scores: AtomScores | None
    title: str


def _normalize(raw: np.ndarray) -> np.ndarray:
    if raw.size == 0:
        return raw.copy()
    peak = float(np.max(np.abs(raw)))
    if peak == 0.0:
        return np.zeros_like(raw)
    return raw / peak


def project_weights(
    mol: Molecule,
    matches: Mapping[str, MatchSet],
    explanation: Explanation | Mapping[int, float],
    patterns: Sequence[Pattern],
) -> AtomScores:
    """Project explanation weights onto the atoms and bonds they cover.

    Each weighted feature contributes its weight once to every atom in the
    union of its embeddings and to every molecule bond its pattern bonds map
    onto; overlapping features accumulate.

    Args:
        mol: The molecule being painted.
        matches: Pattern id -> MatchSet on ``mol``.
        explanation: Fitted surrogate whose weights key feature indices, or
            a bare feature-index -> weight mapping (e.g. bootstrap means).
        patterns: The pattern set, mapping feature index to pattern id.

    Raises:
        InputError: If a weighted feature has no (non-empty) MatchSet,
            which signals an explanation/molecule mismatch.
    """
    weights = (
        explanation.weights if isinstance(explanation, Explanation) else explanation
    )
    atom_raw = np.zeros(mol.n_atoms)
    bond_raw = np.zeros(len(mol.bonds))
    for feature, weight in weights.items():
        pattern_id = patterns[feature].id
        match = matches.get(pattern_id)
        if match is None or not match.embeddings:
            raise InputError(
                f"weighted feature {pattern_id!r} has no match on this molecule; "
                "the explanation does not belong to it"
            )
        for atom in match.matched_atoms:
            atom_raw[atom] += weight
        for bond in match.matched_bonds:
            bond_raw[bond] += weight
    return AtomScores(
        atom_raw=atom_raw,
        atom_normalized=_normalize(atom_raw),
        bond_raw=bond_raw,
        bond_normalized=_normalize(bond_raw),
    )


def score_color(score: float) -> str:
    """Map a normalized score in [-1, 1] to a 24-bit hex color.

    -1 is pure blue, 0 white, +1 pure red; channels interpolate linearly.
    """
    s = min(1.0, max(-1.0, float(score)))
    if s < 0:
        level = int(round(255 * (1.0 + s)))
        r, g, b = level, level, 255
    else:
        level = int(round(255 * (1.0 - s)))
        r, g, b = 255, level, level
    return f"#{r:02X}{g:02X}{b:02X}"


def _rotate(v: np.ndarray, angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([v[0] * c - v[1] * s, v[0] * s + v[1] * c])


def _unit(angle: float) -> np.ndarray:
    return np.array([math.cos(angle), math.sin(angle)])


def _smallest_rings(mol: Molecule) -> list[list[int]]:
    """One shortest cycle per ring bond, deduplicated, in deterministic order.

    Each cycle is an ordered atom list; consecutive entries (and last-first)
    are bonded.
    """
    cyclic = sorted(ring_bonds(mol))
    rings: list[list[int]] = []
    seen: set[frozenset[int]] = set()
    cyclic_set = set(cyclic)
    for bond_idx in cyclic:
        bond = mol.bonds[bond_idx]
        start, goal = bond.a, bond.b
        # Shortest path start -> goal through ring bonds, avoiding this bond.
        parents: dict[int, int] = {start: -1}
        queue: deque[int] = deque([start])
        while queue and goal not in parents:
            v = queue.popleft()
            for w, edge in sorted(mol.adjacency[v]):
                if edge == bond_idx or edge not in cyclic_set or w in parents:
                    continue
                parents[w] = v
                queue.append(w)
        if goal not in parents:
            continue
        path = [goal]
        while path[-1] != start:
            path.append(parents[path[-1]])
        cycle = list(reversed(path))
        key = frozenset(cycle)
        if key not in seen:
            seen.add(key)
            rings.append(cycle)
    return rings


class _LayoutBuilder:
    """Incremental deterministic placement of one molecule."""

    def __init__(self, mol: Molecule) -> None:
        self.mol = mol
        self.pos: dict[int, np.ndarray] = {}
        self.zig: dict[int, float] = {}
        self.rings = _smallest_rings(mol)
        self.ring_of_atom: dict[int, list[int]] = {}
        for ring_idx, ring in enumerate(self.rings):
            for atom in ring:
                self.ring_of_atom.setdefault(atom, []).append(ring_idx)
        self.system_of_ring = self._ring_systems()

    def _ring_systems(self) -> list[int]:
        """Union rings sharing atoms into systems; returns ring -> system id."""
        parent = list(range(len(self.rings)))

        def find(i: int) -> int:
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for rings in self.ring_of_atom.values():
            for other in rings[1:]:
                ra, rb = find(rings[0]), find(other)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
        return [find(i) for i in range(len(self.rings))]

    def run(self) -> np.ndarray:
        start = 0
        if start in self.ring_of_atom:
            self._place_ring_system(start, np.zeros(2), _unit(0.0))
        else:
            self.pos[start] = np.zeros(2)
            self.zig[start] = 1.0
        queue = deque(sorted(self.pos))
        while queue:
            atom = queue.popleft()
            pending = sorted(w for w in self.mol.neighbors(atom) if w not in self.pos)
            for child in pending:
                if child in self.pos:
                    continue
                direction = self._child_direction(atom, child)
                if child in self.ring_of_atom:
                    entry_pos = self.pos[atom] + direction
                    placed = self._place_ring_system(child, entry_pos, direction)
                    queue.extend(placed)
                else:
                    self.pos[child] = self.pos[atom] + direction
                    self.zig[child] = -self.zig.get(atom, -1.0)
                    queue.append(child)
        coords = np.zeros((self.mol.n_atoms, 2))
        for atom, p in self.pos.items():
            coords[atom] = p
        return coords

    def _placed_directions(self, atom: int) -> list[np.ndarray]:
        dirs = []
        for w in self.mol.neighbors(atom):
            if w in self.pos:
                delta = self.pos[w] - self.pos[atom]
                norm = np.hypot(*delta)
                if norm > 1e-12:
                    dirs.append(delta / norm)
        return dirs

    def _child_direction(self, atom: int, child: int) -> np.ndarray:
        """Unit direction for the bond atom -> child."""
        placed = self._placed_directions(atom)
        if not placed:
            # Root of an acyclic molecule: pretend the chain arrived from the
            # lower left so the zigzag starts at +30 degrees.
            placed = [_unit(math.radians(150.0))]
        in_ring = atom in self.ring_of_atom
        if len(placed) == 1 and not in_ring:
            v_in = -placed[0]
            return _rotate(v_in, self.zig.get(atom, 1.0) * math.radians(60.0))
        return self._largest_gap_direction(atom, placed)

    def _largest_gap_direction(self, atom: int, placed: list[np.ndarray]) -> np.ndarray:
        angles = sorted(math.atan2(d[1], d[0]) for d in placed)
        if len(angles) == 1:
            return _unit(angles[0] + math.pi)
        best_gap = -1.0
        best_mid = 0.0
        for i, a in enumerate(angles):
            b = angles[(i + 1) % len(angles)] + (2 * math.pi if i + 1 == len(angles) else 0.0)
            gap = b - a
            if gap > best_gap + 1e-12:
                best_gap = gap
                best_mid = (a + b) / 2.0
        return _unit(best_mid)

    def _place_ring_system(
        self, entry_atom: int, entry_pos: np.ndarray, entry_dir: np.ndarray
    ) -> list[int]:
        """Place every ring of the system containing ``entry_atom``.

        Returns the newly placed atoms in ascending order.
        """
        entry_ring = min(self.ring_of_atom[entry_atom])
        system = self.system_of_ring[entry_ring]
        system_rings = [
            i for i, s in enumerate(self.system_of_ring) if s == system
        ]
        before = set(self.pos)
        self._place_polygon_from_entry(self.rings[entry_ring], entry_atom, entry_pos, entry_dir)
        remaining = set(system_rings) - {entry_ring}
        while remaining:
            progress = False
            # Most-anchored ring first; ties to the lowest ring index.
            ranked = sorted(
                remaining,
                key=lambda r: (-sum(a in self.pos for a in self.rings[r]), r),
            )
            ring_idx = ranked[0]
            ring = self.rings[ring_idx]
            placed_count = sum(a in self.pos for a in ring)
            if placed_count == 0:
                break
            if placed_count == len(ring):
                remaining.discard(ring_idx)
                continue
            if placed_count == 1:
                anchor = next(a for a in ring if a in self.pos)
                outward = self._largest_gap_direction(
                    anchor, self._placed_directions(anchor) or [_unit(0.0)]
                )
                self._place_polygon_from_entry(ring, anchor, self.pos[anchor], outward)
                progress = True
            else:
                progress = self._place_ring_arc(ring)
            remaining.discard(ring_idx)
            if not progress:
                break
        placed = sorted(set(self.pos) - before)
        if entry_atom in before:
            placed.append(entry_atom)
        return sorted(set(placed))

    def _place_polygon_from_entry(
        self, ring: list[int], entry_atom: int, entry_pos: np.ndarray, entry_dir: np.ndarray
    ) -> None:
        """Place ``ring`` as a regular polygon with ``entry_atom`` at ``entry_pos``.

        The polygon center sits one circumradius from the entry atom along
        ``entry_dir``.
        """
        k = ring.index(entry_atom)
        cycle = ring[k:] + ring[:k]
        n = len(cycle)
        radius = 0.5 / math.sin(math.pi / n)
        center = entry_pos + radius * entry_dir
        base = math.atan2(*(entry_pos - center)[::-1])
        step = 2.0 * math.pi / n
        for offset, atom in enumerate(cycle):
            if atom not in self.pos:
                self.pos[atom] = center + radius * _unit(base + offset * step)
        self.pos[entry_atom] = entry_pos

    def _place_ring_arc(self, ring: list[int]) -> bool:
        """Place the unplaced run(s) of a partially placed ring on circle arcs.

        For a ring sharing exactly one edge with already-placed atoms this
        reproduces the regular polygon on that edge; for bridged systems it
        bulges the run away from the placed portion.
        """
        n = len(ring)
        progressed = False
        guard = 0
        while any(a not in self.pos for a in ring) and guard < n:
            guard += 1
            run = self._find_unplaced_run(ring)
            if run is None:
                break
            flank_a, segment, flank_b = run
            p, q = self.pos[flank_a], self.pos[flank_b]
            chord = np.hypot(*(q - p))
            if chord < 1e-9:
                break
            steps = len(segment) + 1
            theta = 2.0 * math.pi * steps / n
            radius = chord / (2.0 * math.sin(theta / 2.0))
            mid = (p + q) / 2.0
            u = (q - p) / chord
            perp = np.array([-u[1], u[0]])
            reference = self._placed_ring_reference(ring)
            if np.dot(perp, mid - reference) < 0:
                perp = -perp
            h = (chord / 2.0) / math.tan(theta / 2.0)
            center = mid - perp * h
            start_angle = math.atan2(*(p - center)[::-1])
            goal_angle = math.atan2(*(q - center)[::-1])
            placed_run = self._sweep_arc(
                center, radius, start_angle, goal_angle, theta, steps, segment, perp
            )
            progressed = progressed or placed_run
            if not placed_run:
                break
        return progressed

    def _sweep_arc(
        self,
        center: np.ndarray,
        radius: float,
        start_angle: float,
        goal_angle: float,
        theta: float,
        steps: int,
        segment: list[int],
        away: np.ndarray,
    ) -> bool:
        """Place ``segment`` along the arc from start to goal; True on success."""
        delta = theta / steps
        for sign in (1.0, -1.0):
            end = start_angle + sign * theta
            if not _angles_close(end, goal_angle):
                continue
            first = center + radius * _unit(start_angle + sign * delta)
            if len(segment) and np.dot(first - center, away) < -radius:
                continue
            candidate = {
                atom: center + radius * _unit(start_angle + sign * delta * (i + 1))
                for i, atom in enumerate(segment)
            }
            if self._arc_on_away_side(candidate, center, away):
                for atom, p in candidate.items():
                    self.pos[atom] = p
                return True
        # Neither sweep matched cleanly; fall back to the first consistent one.
        for sign in (1.0, -1.0):
            end = start_angle + sign * theta
            if _angles_close(end, goal_angle):
                for i, atom in enumerate(segment):
                    self.pos[atom] = center + radius * _unit(
                        start_angle + sign * delta * (i + 1)
                    )
                return True
        return False

    def _arc_on_away_side(
        self, candidate: dict[int, np.ndarray], center: np.ndarray, away: np.ndarray
    ) -> bool:
        if not candidate:
            return True
        mean = np.mean(list(candidate.values()), axis=0)
        return bool(np.dot(mean - center, away) >= -1e-9)

    def _find_unplaced_run(
        self, ring: list[int]
    ) -> tuple[int, list[int], int] | None:
        """A maximal contiguous unplaced run with placed flanks, or None."""
        n = len(ring)
        for i in range(n):
            if ring[i] in self.pos or ring[(i - 1) % n] not in self.pos:
                continue
            segment = []
            j = i
            while ring[j % n] not in self.pos:
                segment.append(ring[j % n])
                j += 1
            return ring[(i - 1) % n], segment, ring[j % n]
        return None

    def _placed_ring_reference(self, ring: list[int]) -> np.ndarray:
        """Centroid of already-placed atoms in this ring's system."""
        system = self.system_of_ring[min(self.ring_of_atom[ring[0]])]
        points = [
            self.pos[a]
            for r_idx, s in enumerate(self.system_of_ring)
            if s == system
            for a in self.rings[r_idx]
            if a in self.pos
        ]
        if not points:
            return np.zeros(2)
        return np.mean(points, axis=0)


def _relax(coords: np.ndarray, mol: Molecule) -> np.ndarray:
    """Fixed-schedule spring relaxation; a no-op on already-clean layouts.

    Bond springs pull toward unit length; non-bonded atoms repel only inside
    the short cutoff, so a layout with unit bonds and no close contacts feels
    zero force.
    """
    coords = coords.copy()
    n = coords.shape[0]
    if n < 2:
        return coords
    rng = make_rng(_LAYOUT_JITTER_SEED)
    pairs = np.array([(b.a, b.b) for b in mol.bonds], dtype=int)
    bonded = np.zeros((n, n), dtype=bool)
    if pairs.size:
        bonded[pairs[:, 0], pairs[:, 1]] = True
        bonded[pairs[:, 1], pairs[:, 0]] = True
    upper = np.triu(np.ones((n, n), dtype=bool), k=1)
    for _ in range(_RELAX_ITERATIONS):
        # Split exact coincidences so force directions are defined.
        diff = coords[:, None, :] - coords[None, :, :]
        dist = np.hypot(diff[..., 0], diff[..., 1])
        coincident = np.argwhere(upper & (dist < 1e-9))
        for a, b in coincident:
            nudge = rng.normal(scale=1e-3, size=2)
            coords[a] += nudge
            coords[b] -= nudge
        if coincident.size:
            diff = coords[:, None, :] - coords[None, :, :]
            dist = np.hypot(diff[..., 0], diff[..., 1])
        forces = np.zeros_like(coords)
        if pairs.size:
            delta = coords[pairs[:, 1]] - coords[pairs[:, 0]]
            lengths = np.hypot(delta[:, 0], delta[:, 1])
            stretch = lengths - 1.0
            pull = _SPRING * (stretch / lengths)[:, None] * delta
            np.add.at(forces, pairs[:, 0], pull)
            np.add.at(forces, pairs[:, 1], -pull)
        close = upper & ~bonded & (dist < _REPULSION_CUTOFF) & (dist > 0)
        for a, b in np.argwhere(close):
            d = dist[a, b]
            push = _REPULSION * (_REPULSION_CUTOFF - d) * (coords[a] - coords[b]) / d
            forces[a] += push
            forces[b] -= push
        norms = np.hypot(forces[:, 0], forces[:, 1])
        over = norms > _MAX_STEP
        if over.any():
            forces[over] *= (_MAX_STEP / norms[over])[:, None]
        coords += forces
    return coords


def compute_layout(mol: Molecule) -> Layout:
    """Deterministic 2-D coordinates for ``mol`` in bond-length units.

    Raises:
        InputError: If the molecule has more than 100 atoms.
    """
    if mol.n_atoms > 100:
        raise InputError("layout supports at most 100 atoms")
    if mol.n_atoms == 1:
        return Layout(np.zeros((1, 2)))
    coords = _LayoutBuilder(mol).run()
    return Layout(_relax(coords, mol))


def _angles_close(a: float, b: float) -> bool:
    return abs(_wrap_angle(a - b)) < 1e-6


def _wrap_angle(a: float) -> float:
    while a > math.pi:
        a -= 2 * math.pi
    while a < -math.pi:
        a += 2 * math.pi
    return a


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _atom_label(mol: Molecule, index: int) -> str | None:
    atom = mol.atoms[index]
    if atom.atomic_number == 6 and atom.formal_charge == 0:
        return None
    label = _ELEMENT_SYMBOL[atom.atomic_number]
    if atom.explicit_h_count:
        label += "H" if atom.explicit_h_count == 1 else f"H{atom.explicit_h_count}"
    if atom.formal_charge:
        magnitude = abs(atom.formal_charge)
        sign = "+" if atom.formal_charge > 0 else "-"
        label += sign if magnitude == 1 else f"{magnitude}{sign}"
    return label


def _bond_lines(
    mol: Molecule,
    bond_idx: int,
    a_px: np.ndarray,
    b_px: np.ndarray,
    centroid_px: np.ndarray,
    color: str,
) -> list[str]:
    """SVG line elements for one bond (parallel lines for multiple orders)."""
    bond = mol.bonds[bond_idx]
    delta = b_px - a_px
    norm = float(np.hypot(*delta))
    if norm < 1e-9:
        return []
    perp = np.array([-delta[1], delta[0]]) / norm
    mid = (a_px + b_px) / 2.0
    if np.dot(perp, centroid_px - mid) < 0:
        perp = -perp

    def line(offset: np.ndarray, dashed: bool = False, shrink: float = 0.0) -> str:
        a = a_px + offset + delta * shrink
        b = b_px + offset - delta * shrink
        dash = ' stroke-dasharray="4,3"' if dashed else ""
        return (
            f'<line x1="{_fmt(a[0])}" y1="{_fmt(a[1])}" x2="{_fmt(b[0])}" '
            f'y2="{_fmt(b[1])}" stroke="{color}" stroke-width="{_fmt(_BOND_WIDTH_PX)}"'
            f' stroke-linecap="round"{dash} />'
        )

    zero = np.zeros(2)
    if bond.order == SINGLE:
        return [line(zero)]
    if bond.order == DOUBLE:
        off = perp * (_PARALLEL_OFFSET_PX / 2.0)
        return [line(-off), line(off)]
    if bond.order == TRIPLE:
        off = perp * _PARALLEL_OFFSET_PX
        return [line(zero), line(-off), line(off)]
    # Aromatic: solid outer line plus a dashed inner line toward the centroid.
    return [line(zero), line(perp * _PARALLEL_OFFSET_PX, dashed=True, shrink=0.15)]


def _molecule_fragment(
    mol: Molecule, coords_px: np.ndarray, scores: AtomScores | None
) -> list[str]:
    """SVG elements for one molecule at precomputed pixel coordinates."""
    parts: list[str] = []
    centroid = coords_px.mean(axis=0)
    atom_scores = (
        scores.atom_normalized if scores is not None else np.zeros(mol.n_atoms)
    )
    bond_scores = (
        scores.bond_normalized if scores is not None else np.zeros(len(mol.bonds))
    )
    for i in range(mol.n_atoms):
        parts.append(
            f'<circle cx="{_fmt(coords_px[i, 0])}" cy="{_fmt(coords_px[i, 1])}" '
            f'r="{_fmt(_DISC_RADIUS_PX)}" fill="{score_color(float(atom_scores[i]))}" />'
        )
    for idx, bond in enumerate(mol.bonds):
        color = "#404040" if scores is None else score_color(float(bond_scores[idx]))
        parts.extend(
            _bond_lines(mol, idx, coords_px[bond.a], coords_px[bond.b], centroid, color)
        )
    for i in range(mol.n_atoms):
        label = _atom_label(mol, i)
        if label is None:
            continue
        parts.append(
            f'<text x="{_fmt(coords_px[i, 0])}" y="{_fmt(coords_px[i, 1])}" '
            f'font-family="Helvetica,sans-serif" font-size="{_FONT_PX}" '
            f'text-anchor="middle" dominant-baseline="central" '
            f'stroke="#FFFFFF" stroke-width="3" paint-order="stroke" '
            f'fill="#000000">{label}</text>'
        )
    return parts


def _to_pixels(layout: Layout) -> tuple[np.ndarray, float, float]:
    """Scale layout coordinates to pixels; returns (coords, width, height)."""
    coords = np.asarray(layout.coordinates, dtype=float)
    x = coords[:, 0] * _BOND_PX
    y = -coords[:, 1] * _BOND_PX
    x = x - x.min() + _MARGIN_PX
    y = y - y.min() + _MARGIN_PX
    width = float(x.max() + _MARGIN_PX)
    height = float(y.max() + _MARGIN_PX)
    return np.stack([x, y], axis=1), width, height


def _legend_fragment(
    annotations: Sequence[LegendEntry], x0: float, y0: float
) -> list[str]:
    def stat(v: float | None) -> str:
        return f"{v:.2f}" if v is not None else "-"

    parts: list[str] = []
    header = f"{'pattern':<22}{'weight':>8}{'acc':>6}{'prec':>6}{'rec':>6}{'gini':>6}"
    rows = [header]
    for entry in annotations:
        name = f"{entry.label} {entry.pattern}"[:21]
        rows.append(
            f"{name:<22}"
            f"{entry.weight:>+8.3f}"
            f"{stat(entry.accuracy):>6}"
            f"{stat(entry.precision):>6}"
            f"{stat(entry.recall):>6}"
            f"{stat(entry.importance):>6}"
        )
    for k, text in enumerate(rows):
        escaped = text.replace("&", "&amp;").replace("<", "&lt;")
        parts.append(
            f'<text x="{_fmt(x0)}" y="{_fmt(y0 + k * _LEGEND_ROW_PX)}" '
            f'font-family="Menlo,monospace" font-size="{_FONT_PX}" '
            f'xml:space="preserve" fill="#000000">{escaped}</text>'
        )
    return parts


def render(
    mol: Molecule,
    layout: Layout,
    scores: AtomScores | None = None,
    annotations: Sequence[LegendEntry] | None = None,
    title: str | None = None,
) -> str:
    """Render one molecule as an SVG 1.1 document string.

    Every atom sits on a filled disc colored by its normalized score, bonds
    are colored by their score (double/triple as parallel lines, aromatic as
    solid plus dashed), heteroatoms carry element labels, and an optional
    legend table lists the weighted patterns. Identical inputs produce
    byte-identical output.
    """
    if layout.coordinates.shape[0] != mol.n_atoms:
        raise ValueError("layout does not match the molecule")
    if scores is not None and (
        scores.atom_normalized.shape[0] != mol.n_atoms
        or scores.bond_normalized.shape[0] != len(mol.bonds)
    ):
        raise ValueError("scores do not match the molecule")
    coords_px, width, height = _to_pixels(layout)
    title_pad = 24.0 if title else 0.0
    coords_px[:, 1] += title_pad
    height += title_pad
    legend_height = (
        (len(annotations) + 2) * _LEGEND_ROW_PX if annotations else 0.0
    )
    total_width = width + (_LEGEND_WIDTH_PX if annotations else 0.0)
    total_height = max(height, legend_height + _MARGIN_PX)
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_fmt(total_width)}" height="{_fmt(total_height)}" '
        f'viewBox="0 0 {_fmt(total_width)} {_fmt(total_height)}">',
        f'<rect x="0" y="0" width="{_fmt(total_width)}" height="{_fmt(total_height)}" fill="#FFFFFF" />',
    ]
    if title:
        escaped = title.replace("&", "&amp;").replace("<", "&lt;")
        parts.append(
            f'<text x="{_fmt(_MARGIN_PX / 2)}" y="18.00" '
            f'font-family="Helvetica,sans-serif" font-size="14" '
            f'fill="#000000">{escaped}</text>'
        )
    parts.extend(_molecule_fragment(mol, coords_px, scores))
    if annotations:
        parts.extend(
            _legend_fragment(annotations, width + 10.0, _MARGIN_PX + title_pad)
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_grid(cells: Sequence[GridCell], columns: int = 4) -> str:
    """Render molecules as a fixed-pitch grid in one SVG document.

    All tiles share the color scale (the score_color mapping); each tile
    carries its own title line. Tiles are sized to the largest molecule.
    """
    if not cells:
        raise ValueError("no cells to render")
    pixel_data = []
    cell_w = cell_h = 0.0
    for cell in cells:
        coords_px, w, h = _to_pixels(cell.layout)
        pixel_data.append((coords_px, w, h))
        cell_w = max(cell_w, w)
        cell_h = max(cell_h, h)
    cell_h += 26.0
    n_cols = min(columns, len(cells))
    n_rows = math.ceil(len(cells) / n_cols)
    total_w = n_cols * cell_w
    total_h = n_rows * cell_h
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_fmt(total_w)}" height="{_fmt(total_h)}" '
        f'viewBox="0 0 {_fmt(total_w)} {_fmt(total_h)}">',
        f'<rect x="0" y="0" width="{_fmt(total_w)}" height="{_fmt(total_h)}" fill="#FFFFFF" />',
    ]
    for k, (cell, (coords_px, w, h)) in enumerate(zip(cells, pixel_data)):
        row, col = divmod(k, n_cols)
        dx = col * cell_w + (cell_w - w) / 2.0
        dy = row * cell_h + (cell_h - 26.0 - h) / 2.0 + 22.0
        parts.append(f'<g transform="translate({_fmt(dx)},{_fmt(dy)})">')
        parts.extend(_molecule_fragment(cell.mol, coords_px, cell.scores))
        parts.append("</g>")
        escaped = cell.title.replace("&", "&amp;").replace("<", "&lt;")
        parts.append(
            f'<text x="{_fmt(col * cell_w + cell_w / 2.0)}" '
            f'y="{_fmt(row * cell_h + 16.0)}" font-family="Helvetica,sans-serif" '
            f'font-size="12" text-anchor="middle" fill="#000000">{escaped}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
