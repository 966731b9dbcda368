"""Parse SMILES strings into molecular graphs and fold them into circular
fingerprints.

Run:  python demos/01_smiles_and_fingerprints.py
"""

import numpy as np

from lpikit.chem import BondOrder, ecfp, parse_smiles
from lpikit.data import load_druglike_smiles

# --- parse a few molecules ------------------------------------------------

for smi in ("C", "c1ccccc1", "CC(=O)Oc1ccccc1C(=O)O"):
    mol = parse_smiles(smi)
    aromatic_bonds = sum(1 for b in mol.bonds if b.order == BondOrder.AROMATIC)
    print(
        f"{smi::<28} heavy atoms {mol.heavy_atom_count:>2}  bonds {len(mol.bonds):>2}  "
        f"aromatic bonds {aromatic_bonds:>2}  ring atoms {sum(mol.ring_flags):>2}"
    )

# Implicit hydrogens come from standard valences; bracket atoms carry their
# own explicit count.
mol = parse_smiles("C[C@H](N)C(=O)O")  # alanine
for i, atom in enumerate(mol.atoms):
    print(f"  atom {i}: {atom.element}  H={atom.attached_h}  chirality={atom.chirality.value}")

# --- fingerprints -----------------------------------------------------------

aspirin = parse_smiles("CC(=O)Oc1ccccc1C(=O)O")
fp = ecfp(aspirin, radius=2, width=2048)
print(f"\naspirin ECFP: width={fp.width} radius={fp.radius} popcount={fp.popcount} "
      f"sparsity={fp.sparsity:.3f}")

# identical graph, different atom order, identical fingerprint
print("CCO == OCC fingerprints:", ecfp(parse_smiles("CCO"), 2, 2048) == ecfp(parse_smiles("OCC"), 2, 2048))

# sparsity statistics over the bundled 100-molecule corpus
sparsities = [ecfp(parse_smiles(smi), 2, 2048).sparsity for _, smi in load_druglike_smiles()]
print(f"corpus mean sparsity: {np.mean(sparsities):.4f} (min {min(sparsities):.4f}, max {max(sparsities):.4f})")
