"""Independent reference implementations used to cross-check the library.

Everything here is deliberately built from different algorithms and tools
than the package itself (plain nested loops, ``fractions.Fraction``,
``mpmath``, ``networkx``, ``scikit-learn``), so the same mistake would have
to be made twice in unrelated code for a test to pass wrongly.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

import mpmath
import networkx as nx
import numpy as np

from ronpaint.molgraph import AROMATIC, SINGLE, Molecule
from ronpaint.patterns import (
    ALIPHATIC_ANY,
    ALIPHATIC_ELEMENT,
    AROMATIC_ANY,
    AROMATIC_ELEMENT,
    ELEMENT,
    SINGLE_OR_AROMATIC,
    AtomPredicate,
    Pattern,
)
from ronpaint.seeding import make_rng


# --------------------------------------------------------------------------
# Substructure matching: exhaustive injective-tuple enumeration.


def _atom_ok(predicate: AtomPredicate, atom) -> bool:
    """Re-evaluate an atom predicate term by term, from its parsed fields."""
    for term in predicate.terms:
        if term.kind == ELEMENT:
            base = atom.atomic_number == term.atomic_number
        elif term.kind == ALIPHATIC_ELEMENT:
            base = atom.atomic_number == term.atomic_number and not atom.aromatic
        elif term.kind == AROMATIC_ELEMENT:
            base = atom.atomic_number == term.atomic_number and atom.aromatic
        elif term.kind == AROMATIC_ANY:
            base = atom.aromatic
        elif term.kind == ALIPHATIC_ANY:
            base = not atom.aromatic
        else:
            raise AssertionError(f"unknown term kind {term.kind!r}")
        if term.negated:
            base = not base
        if not base:
            return False
    return True


def _bond_ok(kind: str, order: str) -> bool:
    if kind == SINGLE_OR_AROMATIC:
        return order == SINGLE or order == AROMATIC
    return order == kind


def match_oracle(pattern: Pattern, mol: Molecule) -> list[tuple[int, ...]]:
    """All injective embeddings, by level-wise enumeration of tuples.

    Starting from every molecule atom that satisfies pattern position 0,
    tuples are extended one position at a time over *all* remaining atoms and
    kept only if the new position's predicate holds and every pattern bond
    whose endpoints are now both placed maps onto a molecule bond of an
    allowed order. Returns the embeddings sorted lexicographically.
    """
    k = len(pattern.atoms)
    order_of: dict[tuple[int, int], str] = {}
    for bond in mol.bonds:
        order_of[(bond.a, bond.b)] = bond.order
        order_of[(bond.b, bond.a)] = bond.order
    candidates = [
        [atom.index for atom in mol.atoms if _atom_ok(pred, atom)]
        for pred in pattern.atoms
    ]
    # Pattern bonds grouped by the later-placed endpoint.
    by_level: list[list[tuple[int, str]]] = [[] for _ in range(k)]
    for pbond in pattern.bonds:
        lo, hi = sorted((pbond.a, pbond.b))
        by_level[hi].append((lo, pbond.kind))

    partial: list[tuple[int, ...]] = [(c,) for c in candidates[0]]
    for level in range(1, k):
        extended: list[tuple[int, ...]] = []
        for tup in partial:
            for cand in candidates[level]:
                if cand in tup:
                    continue
                ok = True
                for earlier, kind in by_level[level]:
                    mol_order = order_of.get((tup[earlier], cand))
                    if mol_order is None or not _bond_ok(kind, mol_order):
                        ok = False
                        break
                if ok:
                    extended.append(tup + (cand,))
        partial = extended
    return sorted(partial)


# --------------------------------------------------------------------------
# Ring membership via graph bridges.


def ring_bond_indices_oracle(mol: Molecule) -> frozenset[int]:
    """A bond is a ring bond iff it is not a bridge of the molecular graph."""
    graph = nx.Graph()
    graph.add_nodes_from(range(mol.n_atoms))
    graph.add_edges_from((bond.a, bond.b) for bond in mol.bonds)
    bridges = {frozenset(edge) for edge in nx.bridges(graph)}
    return frozenset(
        i for i, bond in enumerate(mol.bonds) if frozenset((bond.a, bond.b)) not in bridges
    )


# --------------------------------------------------------------------------
# Rank statistics with exact arithmetic.


def midranks_exact(values: Sequence[float]) -> list[Fraction]:
    """1-based ranks with ties averaged, as exact Fractions."""
    n = len(values)
    ranks = [Fraction(0)] * n
    order = sorted(range(n), key=lambda i: values[i])
    i = 0
    while i < n:
        j = i
        while j + 1 < n and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = Fraction(i + 1 + j + 1, 2)
        for t in range(i, j + 1):
            ranks[order[t]] = avg
        i = j + 1
    return ranks


def auc_oracle(scores: Sequence[float], labels: Sequence[bool]) -> Fraction:
    """Probability a positive outscores a negative, ties counting half."""
    positives = [s for s, l in zip(scores, labels) if l]
    negatives = [s for s, l in zip(scores, labels) if not l]
    total = Fraction(0)
    for p in positives:
        for q in negatives:
            if p > q:
                total += 1
            elif p == q:
                total += Fraction(1, 2)
    return total / (len(positives) * len(negatives))


def spearman_exact(x: Sequence[float], y: Sequence[float]) -> Fraction:
    """Exact Spearman rho; requires the rank variances to be equal
    (always true when neither sample has ties)."""
    rx = midranks_exact(x)
    ry = midranks_exact(y)
    n = len(rx)
    mx = sum(rx, Fraction(0)) / n
    my = sum(ry, Fraction(0)) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    vx = sum((a - mx) ** 2 for a in rx)
    vy = sum((b - my) ** 2 for b in ry)
    if vx != vy:
        raise ValueError("tied data: exact rho is not rational in general")
    return cov / vx


def spearman_float(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman rho through exact rank moments, final division in float."""
    rx = midranks_exact(x)
    ry = midranks_exact(y)
    n = len(rx)
    mx = sum(rx, Fraction(0)) / n
    my = sum(ry, Fraction(0)) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    vx = sum((a - mx) ** 2 for a in rx)
    vy = sum((b - my) ** 2 for b in ry)
    return float(cov) / math.sqrt(float(vx) * float(vy))


# --------------------------------------------------------------------------
# High-precision distribution functions.


def betainc_oracle(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta at 50 significant digits."""
    with mpmath.workdps(50):
        return float(mpmath.betainc(a, b, 0, x, regularized=True))


def t_two_sided_p_oracle(t: float, df: float) -> float:
    """Two-sided Student-t p-value by direct numeric integration of the
    density, independent of any incomplete-beta identity."""
    if math.isinf(t):
        return 0.0
    with mpmath.workdps(30):
        df_m = mpmath.mpf(df)
        norm = mpmath.gamma((df_m + 1) / 2) / (
            mpmath.sqrt(df_m * mpmath.pi) * mpmath.gamma(df_m / 2)
        )
        density = lambda u: norm * (1 + u * u / df_m) ** (-(df_m + 1) / 2)
        tail = mpmath.quad(density, [abs(t), mpmath.inf])
        return float(2 * tail)


def welch_oracle(a: Sequence[float], b: Sequence[float]) -> tuple[float, float, float]:
    """Welch t, Welch-Satterthwaite df, and two-sided p, recomputed directly."""
    na, nb = len(a), len(b)
    ma = sum(a) / na
    mb = sum(b) / nb
    va = sum((v - ma) ** 2 for v in a) / (na - 1)
    vb = sum((v - mb) ** 2 for v in b) / (nb - 1)
    sa, sb = va / na, vb / nb
    t = (ma - mb) / math.sqrt(sa + sb)
    df = (sa + sb) ** 2 / (sa**2 / (na - 1) + sb**2 / (nb - 1))
    return t, df, t_two_sided_p_oracle(t, df)


# --------------------------------------------------------------------------
# Weighted ridge regression, closed form at high precision.


def ridge_oracle(
    X: np.ndarray, y: np.ndarray, w: np.ndarray, lam: float
) -> tuple[np.ndarray, float]:
    """Minimize sum_i w_i (y_i - b - x_i.beta)^2 + lam*|beta|^2 exactly.

    Solves the (d+1)-dimensional normal equations with mpmath LU at 40
    digits; the intercept is unpenalized. Returns (beta, intercept).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    n, d = X.shape
    design = np.hstack([X, np.ones((n, 1))])
    with mpmath.workdps(40):
        A = mpmath.matrix(d + 1, d + 1)
        rhs = mpmath.matrix(d + 1, 1)
        for i in range(n):
            wi = mpmath.mpf(w[i])
            for p in range(d + 1):
                rhs[p] += wi * mpmath.mpf(design[i, p]) * mpmath.mpf(y[i])
                for q in range(d + 1):
                    A[p, q] += wi * mpmath.mpf(design[i, p]) * mpmath.mpf(design[i, q])
        for p in range(d):
            A[p, p] += mpmath.mpf(lam)
        theta = mpmath.lu_solve(A, rhs)
        beta = np.array([float(theta[p]) for p in range(d)])
        intercept = float(theta[d])
    return beta, intercept


# --------------------------------------------------------------------------
# Reference random forest: same seeding contract, plain recursive code.


class OracleTree:
    def __init__(self) -> None:
        self.nodes: list[dict] = []


def _oracle_weighted_gini(
    X: np.ndarray, y: np.ndarray, idx: list[int], f: int, min_leaf: int
) -> float | None:
    n_node = len(idx)
    n1 = sum(int(X[i, f]) for i in idx)
    high1 = sum(int(y[i]) for i in idx if X[i, f] == 1)
    n0 = n_node - n1
    high0 = sum(int(y[i]) for i in idx) - high1
    if n1 < min_leaf or n0 < min_leaf:
        return None
    p1 = high1 / n1
    p0 = high0 / n0
    g1 = 1.0 - p1**2 - (1.0 - p1) ** 2
    g0 = 1.0 - p0**2 - (1.0 - p0) ** 2
    return (n1 * g1 + n0 * g0) / n_node


def _oracle_build(
    tree: OracleTree,
    X: np.ndarray,
    y: np.ndarray,
    idx: list[int],
    rng: np.random.Generator,
    max_features: int,
    min_leaf: int,
    n_total: int,
    importance: np.ndarray,
) -> int:
    node_id = len(tree.nodes)
    n_node = len(idx)
    n_high = sum(int(y[i]) for i in idx)
    n_low = n_node - n_high
    node = {"feature": -1, "left": -1, "right": -1, "n_low": n_low, "n_high": n_high}
    tree.nodes.append(node)
    if n_high == 0 or n_low == 0 or n_node < 2 * min_leaf:
        return node_id
    perm = rng.permutation(X.shape[1])
    best: tuple[float, int] | None = None
    for f in perm[:max_features]:
        score = _oracle_weighted_gini(X, y, idx, int(f), min_leaf)
        if score is None:
            continue
        if best is None or score < best[0] or (score == best[0] and int(f) < best[1]):
            best = (score, int(f))
    if best is None:
        for f in perm[max_features:]:
            score = _oracle_weighted_gini(X, y, idx, int(f), min_leaf)
            if score is not None:
                best = (score, int(f))
                break
    if best is None:
        return node_id
    score, f = best
    p = n_high / n_node
    gini_node = 1.0 - p**2 - (1.0 - p) ** 2
    importance[f] += (n_node / n_total) * (gini_node - score)
    left_idx = [i for i in idx if X[i, f] == 0]
    right_idx = [i for i in idx if X[i, f] == 1]
    node["feature"] = f
    node["left"] = _oracle_build(
        tree, X, y, left_idx, rng, max_features, min_leaf, n_total, importance
    )
    node["right"] = _oracle_build(
        tree, X, y, right_idx, rng, max_features, min_leaf, n_total, importance
    )
    return node_id


def forest_oracle(
    X: np.ndarray,
    y: np.ndarray,
    n_trees: int,
    max_features: int,
    min_leaf: int,
    seed: int,
) -> tuple[list[OracleTree], np.ndarray]:
    """Reference training run; returns trees and normalized importances."""
    n = X.shape[0]
    trees: list[OracleTree] = []
    importance_sum = np.zeros(X.shape[1])
    for t in range(n_trees):
        rng = make_rng(seed, 0, t)
        bootstrap = [int(v) for v in rng.integers(0, n, size=n)]
        tree = OracleTree()
        importance = np.zeros(X.shape[1])
        _oracle_build(
            tree, X, y, bootstrap, rng, max_features, min_leaf, n, importance
        )
        trees.append(tree)
        importance_sum += importance
    importances = importance_sum / n_trees
    if importances.sum() > 0:
        importances = importances / importances.sum()
    return trees, importances


def forest_oracle_proba(trees: list[OracleTree], x: np.ndarray) -> float:
    total = 0.0
    for tree in trees:
        node = tree.nodes[0]
        while node["feature"] != -1:
            node = tree.nodes[node["right"] if x[node["feature"]] else node["left"]]
        if node["n_high"] > node["n_low"]:
            total += 1.0
        elif node["n_high"] == node["n_low"]:
            total += 0.5
    return total / len(trees)
