"""Molecular graph parsing and circular fingerprints."""

from lpikit.chem.fingerprint import (
    BadWidth,
    EmptyMolecule,
    Fingerprint,
    FingerprintError,
    ecfp,
    ecfp_identifiers,
    initial_invariants,
)
from lpikit.chem.smiles import (
    Atom,
    BadBracket,
    BadCharge,
    BadRingBond,
    Bond,
    BondOrder,
    Chirality,
    EmptyInput,
    Molecule,
    SmilesError,
    UnbalancedParen,
    UnbalancedRing,
    UnexpectedCharacter,
    UnknownElement,
    parse_smiles,
)

__all__ = [
    "Atom",
    "BadBracket",
    "BadCharge",
    "BadRingBond",
    "BadWidth",
    "Bond",
    "BondOrder",
    "Chirality",
    "EmptyInput",
    "EmptyMolecule",
    "Fingerprint",
    "FingerprintError",
    "Molecule",
    "SmilesError",
    "UnbalancedParen",
    "UnbalancedRing",
    "UnexpectedCharacter",
    "UnknownElement",
    "ecfp",
    "ecfp_identifiers",
    "initial_invariants",
    "parse_smiles",
]
