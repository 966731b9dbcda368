"""SMILES parsing into an immutable molecular graph.

Covers branches, single- and two-digit (%nn) ring closures, bond symbols
(- = # :), aromatic lowercase atoms, bracket atoms with isotope/chirality/
H-count/charge/class, and dot-separated components. Lowercase atoms set the
aromatic flag as written; no kekulization or aromaticity perception happens.
Stereo markers (@, @@, /, \\) are parsed and carried but never interpreted.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from functools import cached_property


class SmilesError(ValueError):
    """Malformed SMILES; offset is the byte position in the trimmed input."""

    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class EmptyInput(SmilesError):
    pass


class UnbalancedRing(SmilesError):
    pass


class UnbalancedParen(SmilesError):
    pass


class UnknownElement(SmilesError):
    pass


class BadBracket(SmilesError):
    pass


class BadCharge(BadBracket):
    pass


class BadRingBond(SmilesError):
    """Ring-closure pair forms a self-loop, duplicate edge, or order conflict."""


class UnexpectedCharacter(SmilesError):
    pass


class Chirality(enum.Enum):
    NONE = "none"
    CLOCKWISE = "clockwise"  # @@
    COUNTERCLOCKWISE = "counterclockwise"  # @


class BondOrder(enum.Enum):
    SINGLE = "single"
    DOUBLE = "double"
    TRIPLE = "triple"
    AROMATIC = "aromatic"


_BOND_SUM = {BondOrder.SINGLE: 1.0, BondOrder.DOUBLE: 2.0, BondOrder.TRIPLE: 3.0, BondOrder.AROMATIC: 1.5}

PERIODIC_TABLE = frozenset(
    """H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni Cu Zn
    Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I Xe Cs Ba La Ce
    Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re Os Ir Pt Au Hg Tl Pb Bi Po At Rn
    Fr Ra Ac Th Pa U Np Pu Am Cm Bk Cf Es Fm Md No Lr Rf Db Sg Bh Hs Mt Ds Rg Cn Nh Fl
    Mc Lv Ts Og""".split()
)

# Standard valences used to fill implicit hydrogens on organic-subset atoms.
VALENCES: dict[str, tuple[int, ...]] = {
    "B": (3,),
    "C": (4,),
    "N": (3,),
    "O": (2,),
    "P": (3, 5),
    "S": (2, 4, 6),
    "F": (1,),
    "Cl": (1,),
    "Br": (1,),
    "I": (1,),
}

_ORGANIC_TWO = ("Cl", "Br")
_ORGANIC_ONE = set("BCNOPSFI")
_AROMATIC_ORGANIC = set("bcnops")
_AROMATIC_BRACKET = {"b", "c", "n", "o", "p", "s", "se", "as", "te"}

_BRACKET_RE = re.compile(
    r"""^(?P<isotope>\d+)?
        (?P<element>se|as|te|[A-Z][a-z]?|[bcnops])
        (?P<chirality>@{1,2})?
        (?P<hcount>H\d*)?
        (?P<charge>\+\+?|--?|\+\d{1,2}|-\d{1,2})?
        (?::(?P<cls>\d+))?$""",
    re.VERBOSE,
)


@dataclass(frozen=True)
class Atom:
    element: str
    formal_charge: int = 0
    aromatic: bool = False
    explicit_h: int = 0
    implicit_h: int = 0
    isotope: int | None = None
    chirality: Chirality = Chirality.NONE

    @property
    def attached_h(self) -> int:
        return self.explicit_h + self.implicit_h


@dataclass(frozen=True)
class Bond:
    a: int
    b: int
    order: BondOrder
    stereo: str | None = None  # "/" or "\\" marker on the bond, carried only

    def __post_init__(self) -> None:
        if self.a == self.b:
            raise ValueError(f"self-loop bond on atom {self.a}")


@dataclass(frozen=True)
class Molecule:
    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...]
    source_smiles: str
    valence_warnings: tuple[str, ...] = field(default=(), compare=False)

    @property
    def heavy_atom_count(self) -> int:
        return len(self.atoms)

    @cached_property
    def adjacency(self) -> tuple[tuple[tuple[int, BondOrder], ...], ...]:
        adj: list[list[tuple[int, BondOrder]]] = [[] for _ in self.atoms]
        for bond in self.bonds:
            adj[bond.a].append((bond.b, bond.order))
            adj[bond.b].append((bond.a, bond.order))
        return tuple(tuple(nbrs) for nbrs in adj)

    def degree(self, i: int) -> int:
        return len(self.adjacency[i])

    @cached_property
    def ring_flags(self) -> tuple[bool, ...]:
        """Per-atom flag: member of at least one cycle.

        An edge lies on a cycle iff its endpoints stay connected after the
        edge is removed; an atom is in a ring iff it has such an edge.
        Molecules are small, so the O(E*(V+E)) check is fine.
        """
        flags = [False] * len(self.atoms)
        for bond in self.bonds:
            if flags[bond.a] and flags[bond.b]:
                continue
            if self._connected_without(bond):
                flags[bond.a] = True
                flags[bond.b] = True
        return tuple(flags)

    def _connected_without(self, skip: Bond) -> bool:
        target = skip.b
        seen = {skip.a}
        stack = [skip.a]
        while stack:
            u = stack.pop()
            for v, _ in self.adjacency[u]:
                if u == skip.a and v == skip.b or u == skip.b and v == skip.a:
                    continue
                if v == target:
                    return True
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return False


_BOND_SYMBOLS = {"-": BondOrder.SINGLE, "=": BondOrder.DOUBLE, "#": BondOrder.TRIPLE, ":": BondOrder.AROMATIC}


def _parse_bracket(token: str, offset: int) -> Atom:
    m = _BRACKET_RE.match(token)
    if m is None:
        if re.search(r"[+-]", token):
            raise BadCharge(f"malformed bracket atom [{token}]", offset)
        raise BadBracket(f"malformed bracket atom [{token}]", offset)
    raw_element = m.group("element")
    aromatic = raw_element in _AROMATIC_BRACKET
    element = raw_element.capitalize()
    if element not in PERIODIC_TABLE:
        raise UnknownElement(f"unknown element {raw_element!r}", offset)

    hcount = 0
    if m.group("hcount"):
        digits = m.group("hcount")[1:]
        hcount = int(digits) if digits else 1
    charge = 0
    raw_charge = m.group("charge")
    if raw_charge:
        if raw_charge in ("+", "++", "-", "--"):
            charge = raw_charge.count("+") - raw_charge.count("-")
        else:
            charge = int(raw_charge)
    chirality = Chirality.NONE
    if m.group("chirality") == "@":
        chirality = Chirality.COUNTERCLOCKWISE
    elif m.group("chirality") == "@@":
        chirality = Chirality.CLOCKWISE
    isotope = int(m.group("isotope")) if m.group("isotope") else None
    return Atom(
        element=element,
        formal_charge=charge,
        aromatic=aromatic,
        explicit_h=hcount,
        isotope=isotope,
        chirality=chirality,
    )


def parse_smiles(text: str) -> Molecule:
    """Parse a SMILES string into a Molecule.

    Atom order follows SMILES token order. Implicit hydrogens are filled for
    organic-subset atoms from standard valences (aromatic bonds count 1.5);
    an over-valent atom gets zero implicit hydrogens plus a per-molecule
    warning instead of a hard error, since public assay data is dirty.
    """
    source = text
    smiles = text.strip()
    if not smiles:
        raise EmptyInput("empty SMILES")

    atoms: list[Atom] = []
    bracket_flags: list[bool] = []
    bonds: dict[tuple[int, int], Bond] = {}
    anchor: int | None = None
    pending_order: BondOrder | None = None
    pending_stereo: str | None = None
    pending_offset = 0
    branch_stack: list[int | None] = []
    open_rings: dict[int, tuple[int, BondOrder | None, str | None, int]] = {}

    def add_bond(i: int, j: int, order: BondOrder | None, stereo: str | None, offset: int) -> None:
        if order is None:
            if atoms[i].aromatic and atoms[j].aromatic:
                order = BondOrder.AROMATIC
            else:
                order = BondOrder.SINGLE
        if i == j:
            raise BadRingBond("ring closure bonds an atom to itself", offset)
        key = (min(i, j), max(i, j))
        if key in bonds:
            raise BadRingBond(f"duplicate bond between atoms {i} and {j}", offset)
        bonds[key] = Bond(a=key[0], b=key[1], order=order, stereo=stereo)

    def close_ring(num: int, offset: int) -> None:
        nonlocal pending_order, pending_stereo
        if anchor is None:
            raise UnbalancedRing(f"ring closure {num} before any atom", offset)
        if num in open_rings:
            other, order0, stereo0, _ = open_rings.pop(num)
            order = pending_order
            if order0 is not None and order is not None and order0 != order:
                raise BadRingBond(f"conflicting bond orders on ring closure {num}", offset)
            add_bond(other, anchor, order if order is not None else order0,
                     pending_stereo if pending_stereo is not None else stereo0, offset)
        else:
            open_rings[num] = (anchor, pending_order, pending_stereo, offset)
        pending_order = None
        pending_stereo = None

    i = 0
    n = len(smiles)
    while i < n:
        ch = smiles[i]
        if ch == "[":
            end = smiles.find("]", i + 1)
            if end == -1:
                raise BadBracket("unterminated bracket atom", i)
            atom = _parse_bracket(smiles[i + 1 : end], i)
            atoms.append(atom)
            bracket_flags.append(True)
            if anchor is not None:
                add_bond(anchor, len(atoms) - 1, pending_order, pending_stereo, pending_offset)
            pending_order = None
            pending_stereo = None
            anchor = len(atoms) - 1
            i = end + 1
        elif ch.isalpha() or ch == "*":
            two = smiles[i : i + 2]
            if two in _ORGANIC_TWO:
                element, step, aromatic = two, 2, False
            elif ch in _ORGANIC_ONE:
                element, step, aromatic = ch, 1, False
            elif ch in _AROMATIC_ORGANIC:
                element, step, aromatic = ch.upper(), 1, True
            else:
                raise UnknownElement(f"unknown or non-organic-subset atom {ch!r} outside brackets", i)
            atoms.append(Atom(element=element, aromatic=aromatic))
            bracket_flags.append(False)
            if anchor is not None:
                add_bond(anchor, len(atoms) - 1, pending_order, pending_stereo, pending_offset)
            pending_order = None
            pending_stereo = None
            anchor = len(atoms) - 1
            i += step
        elif ch in _BOND_SYMBOLS:
            if pending_order is not None:
                raise UnexpectedCharacter(f"two bond symbols in a row at {ch!r}", i)
            pending_order = _BOND_SYMBOLS[ch]
            pending_offset = i
            i += 1
        elif ch in "/\\":
            pending_stereo = ch
            pending_offset = i
            i += 1
        elif ch == "(":
            if anchor is None:
                raise UnbalancedParen("branch opened before any atom", i)
            branch_stack.append(anchor)
            i += 1
        elif ch == ")":
            if not branch_stack:
                raise UnbalancedParen("unmatched ')'", i)
            anchor = branch_stack.pop()
            i += 1
        elif ch.isdigit():
            close_ring(int(ch), i)
            i += 1
        elif ch == "%":
            if i + 2 >= n or not smiles[i + 1 : i + 3].isdigit():
                raise UnbalancedRing("'%' needs two digits", i)
            close_ring(int(smiles[i + 1 : i + 3]), i)
            i += 3
        elif ch == ".":
            if pending_order is not None or pending_stereo is not None:
                raise UnexpectedCharacter("bond symbol before '.'", i)
            anchor = None
            i += 1
        else:
            raise UnexpectedCharacter(f"unexpected character {ch!r}", i)

    if open_rings:
        num, (_, _, _, offset) = next(iter(open_rings.items()))
        raise UnbalancedRing(f"unpaired ring closure {num}", offset)
    if branch_stack:
        raise UnbalancedParen("unclosed '('", n - 1)
    if pending_order is not None:
        raise UnexpectedCharacter("dangling bond symbol at end of input", pending_offset)
    if not atoms:
        raise EmptyInput("no atoms in SMILES")

    # Fill implicit hydrogens on organic-subset (non-bracket) atoms.
    order_sum = [0.0] * len(atoms)
    for bond in bonds.values():
        order_sum[bond.a] += _BOND_SUM[bond.order]
        order_sum[bond.b] += _BOND_SUM[bond.order]
    warnings: list[str] = []
    final_atoms: list[Atom] = []
    for idx, atom in enumerate(atoms):
        if bracket_flags[idx]:
            final_atoms.append(atom)
            continue
        valences = VALENCES[atom.element]
        total = order_sum[idx]
        if atom.aromatic:
            # Delocalization slack: substituted aromatic n or carbonyl-bearing
            # aromatic c legitimately exceed the lowest valence; clamp to zero
            # hydrogens instead of warning.
            implicit = max(0, int(valences[0] - total + 1e-9))
        else:
            chosen = next((v for v in valences if v + 1e-9 >= total), None)
            if chosen is None:
                warnings.append(
                    f"atom {idx} ({atom.element}) exceeds max valence {max(valences)} "
                    f"with bond order sum {total:g}"
                )
                implicit = 0
            else:
                implicit = int(chosen - total + 1e-9)
        final_atoms.append(
            Atom(element=atom.element, aromatic=atom.aromatic, implicit_h=implicit)
        )

    return Molecule(
        atoms=tuple(final_atoms),
        bonds=tuple(sorted(bonds.values(), key=lambda b: (b.a, b.b))),
        source_smiles=source,
        valence_warnings=tuple(warnings),
    )
