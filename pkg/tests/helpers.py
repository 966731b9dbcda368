"""Test-only utilities: a re-rooting SMILES writer (to exercise fingerprint
permutation invariance), and independent brute-force oracles kept separate
from the library code paths they check."""

from __future__ import annotations

from collections import defaultdict

from lpikit.chem import BondOrder, Molecule
from lpikit.corpus import OrdinalClass

_BOND_SYMBOL = {
    BondOrder.SINGLE: "-",
    BondOrder.DOUBLE: "=",
    BondOrder.TRIPLE: "#",
    BondOrder.AROMATIC: ":",
}


def _atom_token(atom) -> str:
    # Full bracket form so H counts, charge, and isotope survive the rewrite
    # byte-for-byte; chirality is dropped on purpose (it never enters ECFP).
    element = atom.element.lower() if atom.aromatic else atom.element
    token = "[" + (str(atom.isotope) if atom.isotope else "") + element
    h = atom.attached_h
    if h == 1:
        token += "H"
    elif h > 1:
        token += f"H{h}"
    q = atom.formal_charge
    if q == 1:
        token += "+"
    elif q == -1:
        token += "-"
    elif q > 1:
        token += f"+{q}"
    elif q < -1:
        token += f"-{-q}"
    return token + "]"


def rerooted_smiles(mol: Molecule, start: int = 0) -> str:
    """Write the molecular graph as SMILES starting the traversal at `start`.

    Every atom is emitted in bracket form and every bond with an explicit
    symbol, so re-parsing reproduces the exact per-atom invariants in a
    different atom order.
    """
    n = len(mol.atoms)
    adj: dict[int, list[int]] = defaultdict(list)
    bond_of: dict[tuple[int, int], BondOrder] = {}
    for b in mol.bonds:
        adj[b.a].append(b.b)
        adj[b.b].append(b.a)
        bond_of[(b.a, b.b)] = bond_of[(b.b, b.a)] = b.order

    visited: set[int] = set()
    pieces = []
    digit_counter = [0]

    def component(root: int) -> str:
        children: dict[int, list[int]] = defaultdict(list)
        back_edges = []
        seen_edges: set[tuple[int, int]] = set()

        def dfs(u: int) -> None:
            visited.add(u)
            for v in adj[u]:
                edge = (min(u, v), max(u, v))
                if edge in seen_edges:
                    continue
                seen_edges.add(edge)
                if v in visited:
                    back_edges.append((u, v))
                else:
                    children[u].append(v)
                    dfs(v)

        dfs(root)
        markers: dict[int, list[tuple[int, BondOrder]]] = defaultdict(list)
        for u, v in back_edges:
            digit_counter[0] += 1
            digit = digit_counter[0]
            if digit > 99:
                raise ValueError("too many rings for the test writer")
            markers[u].append((digit, bond_of[(u, v)]))
            markers[v].append((digit, bond_of[(u, v)]))

        def emit(u: int) -> str:
            s = _atom_token(mol.atoms[u])
            for digit, order in markers[u]:
                s += _BOND_SYMBOL[order] + (str(digit) if digit < 10 else f"%{digit:02d}")
            kids = children[u]
            parts = [_BOND_SYMBOL[bond_of[(u, v)]] + emit(v) for v in kids]
            for p in parts[:-1]:
                s += "(" + p + ")"
            if parts:
                s += parts[-1]
            return s

        return emit(root)

    pieces.append(component(start))
    for i in range(n):
        if i not in visited:
            pieces.append(component(i))
    return ".".join(pieces)


def naive_eval_counts(pairs):
    """Independent recount of the scoring metrics from (pred, truth) pairs.

    pred is an OrdinalClass or None (unparseable). Returns a dict of raw
    counts; metric math stays in the caller so each assertion stays explicit.
    """
    n = len(pairs)
    exact = sum(1 for p, t in pairs if p is not None and p == t)
    near = sum(1 for p, t in pairs if p is not None and abs(p.rank - t.rank) <= 1)
    per_class = {}
    for cls in OrdinalClass:
        support = sum(1 for _, t in pairs if t == cls)
        tp = sum(1 for p, t in pairs if t == cls and p == cls)
        predicted = sum(1 for p, _ in pairs if p == cls)
        near_k = sum(1 for p, t in pairs if t == cls and p is not None and abs(p.rank - t.rank) <= 1)
        recall = tp / support if support else 0.0
        precision = tp / predicted if predicted else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[cls] = {
            "support": support,
            "recall": recall,
            "precision": precision,
            "f1": f1,
            "near": near_k / support if support else 0.0,
        }
    return {
        "n": n,
        "exact": exact / n,
        "near": near / n,
        "unparseable": sum(1 for p, _ in pairs if p is None),
        "per_class": per_class,
    }


def minimal_scale_exponents(median: float, lo: float = 0.1, hi: float = 1e5) -> set[int]:
    """Exhaustive-scan oracle: all k in [-3, 3] of minimal |k| that put
    median * 10^(3k) inside [lo, hi]."""
    hits = [k for k in range(-3, 4) if lo <= median * 10.0 ** (3 * k) <= hi]
    if not hits:
        return set()
    best = min(abs(k) for k in hits)
    return {k for k in hits if abs(k) == best}
