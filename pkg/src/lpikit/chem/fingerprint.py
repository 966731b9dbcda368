"""Extended-connectivity (Morgan) circular fingerprints over parsed molecules.

Atom environments are hashed with a fixed, seedless 64-bit FNV-1a so the same
molecule folds to the same bits on every run and platform. Constants:
offset basis 0xcbf29ce484222325, prime 0x100000001b3 (standard FNV-1a 64).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from lpikit.chem.smiles import Bond, BondOrder, Molecule


class FingerprintError(ValueError):
    pass


class BadWidth(FingerprintError):
    """Width must be a power of two >= 64."""


class EmptyMolecule(FingerprintError):
    pass


_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK = (1 << 64) - 1

_ORDER_CODE = {BondOrder.SINGLE: 1, BondOrder.DOUBLE: 2, BondOrder.TRIPLE: 3, BondOrder.AROMATIC: 4}


def _fnv1a(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK
    return h


def _hash_ints(values: tuple[int, ...]) -> int:
    return _fnv1a(b"".join(v.to_bytes(8, "little", signed=False) for v in values))


@dataclass(frozen=True)
class Fingerprint:
    """Fixed-width folded bit vector with the parameters that produced it.

    Two fingerprints are comparable only when width and radius both match;
    equality against a mismatched vector is False.
    """

    bits: np.ndarray
    width: int
    radius: int

    @property
    def popcount(self) -> int:
        return int(self.bits.sum())

    @property
    def sparsity(self) -> float:
        return 1.0 - self.popcount / self.width

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Fingerprint):
            return NotImplemented
        return (
            self.width == other.width
            and self.radius == other.radius
            and bool(np.array_equal(self.bits, other.bits))
        )

    def __hash__(self) -> int:
        return hash((self.width, self.radius, self.bits.tobytes()))


def initial_invariants(mol: Molecule) -> list[int]:
    """Per-atom starting identifier from local properties only.

    Hash of (element, heavy degree, formal charge, attached H count,
    in-ring flag, aromatic flag) — independent of atom input order.
    """
    ring = mol.ring_flags
    out = []
    for i, atom in enumerate(mol.atoms):
        payload = (
            _fnv1a(atom.element.encode("ascii")),
            mol.degree(i),
            atom.formal_charge & _MASK,
            atom.attached_h,
            int(ring[i]),
            int(atom.aromatic),
        )
        out.append(_hash_ints(payload))
    return out


def ecfp_identifiers(mol: Molecule, radius: int) -> set[int]:
    """All environment identifiers from rounds 0..radius, before folding.

    Each round rehashes every atom from its own identifier plus the sorted
    (bond order code, neighbor identifier) pairs, so the set grows
    monotonically with the radius.
    """
    if mol.heavy_atom_count == 0:
        raise EmptyMolecule("molecule has no atoms")
    if radius < 0:
        raise FingerprintError(f"radius must be >= 0, got {radius}")
    ids = initial_invariants(mol)
    seen: set[int] = set(ids)
    for _ in range(radius):
        nxt = []
        for i in range(mol.heavy_atom_count):
            neighborhood = sorted((_ORDER_CODE[order], ids[j]) for j, order in mol.adjacency[i])
            payload = [ids[i]]
            for code, nid in neighborhood:
                payload.extend((code, nid))
            nxt.append(_hash_ints(tuple(payload)))
        ids = nxt
        seen.update(ids)
    return seen


def ecfp(mol: Molecule, radius: int = 2, width: int = 2048) -> Fingerprint:
    """Morgan fingerprint: every round identifier folds to bit (id mod width)."""
    if width < 64 or width & (width - 1) != 0:
        raise BadWidth(f"width must be a power of two >= 64, got {width}")
    identifiers = ecfp_identifiers(mol, radius)
    bits = np.zeros(width, dtype=bool)
    for ident in identifiers:
        bits[ident % width] = True
    return Fingerprint(bits=bits, width=width, radius=radius)
