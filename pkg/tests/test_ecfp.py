import numpy as np
import pytest

from helpers import rerooted_smiles
from lpikit.chem import BadWidth, ecfp, ecfp_identifiers, parse_smiles
from lpikit.data import load_druglike_smiles


def test_single_atom_single_bit():
    fp = ecfp(parse_smiles("C"), radius=0, width=2048)
    assert fp.popcount == 1


def test_token_order_invariance():
    assert ecfp(parse_smiles("CCO"), 2, 2048) == ecfp(parse_smiles("OCC"), 2, 2048)


def test_aspirin_popcount_bound_and_sparsity():
    # 13 heavy atoms x 3 rounds bounds the distinct identifiers at 39.
    fp = ecfp(parse_smiles("CC(=O)Oc1ccccc1C(=O)O"), 2, 2048)
    assert fp.popcount <= 39
    assert fp.sparsity >= 0.98


def test_determinism():
    mol = parse_smiles("CC(C)Cc1ccc(cc1)C(C)C(=O)O")
    assert ecfp(mol, 2, 2048) == ecfp(mol, 2, 2048)


def test_bad_width():
    mol = parse_smiles("CC")
    with pytest.raises(BadWidth):
        ecfp(mol, 2, 1000)
    with pytest.raises(BadWidth):
        ecfp(mol, 2, 32)


def test_popcount_bound_over_corpus():
    for radius in (0, 1, 2, 3):
        for _, smi in load_druglike_smiles()[:20]:
            mol = parse_smiles(smi)
            fp = ecfp(mol, radius, 2048)
            assert fp.popcount <= mol.heavy_atom_count * (radius + 1)


def test_monotone_radius_refinement():
    for _, smi in load_druglike_smiles()[:20]:
        mol = parse_smiles(smi)
        previous = ecfp_identifiers(mol, 0)
        for radius in (1, 2, 3):
            current = ecfp_identifiers(mol, radius)
            assert previous <= current
            previous = current


def test_permutation_invariance_rerooted():
    rng = np.random.default_rng(7)
    for name, smi in load_druglike_smiles():
        mol = parse_smiles(smi)
        reference = ecfp(mol, 2, 2048)
        start = int(rng.integers(mol.heavy_atom_count))
        rewritten = rerooted_smiles(mol, start=start)
        remol = parse_smiles(rewritten)
        assert remol.heavy_atom_count == mol.heavy_atom_count, name
        assert ecfp(remol, 2, 2048) == reference, (name, rewritten)


def test_corpus_sparsity_window():
    sparsities = []
    for _, smi in load_druglike_smiles():
        mol = parse_smiles(smi)
        assert 10 <= mol.heavy_atom_count <= 50
        sparsities.append(ecfp(mol, 2, 2048).sparsity)
    assert 0.93 <= float(np.mean(sparsities)) <= 0.99


def test_width_and_radius_recorded_and_gate_equality():
    mol = parse_smiles("CCO")
    a = ecfp(mol, 2, 2048)
    b = ecfp(mol, 2, 4096)
    c = ecfp(mol, 1, 2048)
    assert a != b and a != c
    assert a.width == 2048 and a.radius == 2
