"""Assemble fingerprint+protein feature vectors and fit the one-vs-rest
linear SVM baseline on a small synthetic affinity task.

Run:  python demos/04_baseline_svm.py
"""

import numpy as np

from lpikit.baseline import SvmConfig, predict, train_ovr_svm
from lpikit.chem import ecfp, parse_smiles
from lpikit.corpus import OrdinalClass, SplitSpec, stratified_split
from lpikit.curation import LpiExample
from lpikit.data import load_druglike_smiles
from lpikit.features import assemble_features, kmer_featurize

rng = np.random.default_rng(3)
corpus = load_druglike_smiles()

# Synthetic task: potency depends on the protein, so the protein block is
# informative and the classifier has something to learn.
protein_potency = {
    "MENQEKASIAGHMFDVVVIGGGISGLSAAKLL": 8.4,
    "MKTAYIAKQRQISFVKSHFSRQLEERLGLIEV": 6.5,
    "MSDNGPQNQRNAPRITFGGPSDSTGSNQNGER": 4.2,
}

examples = []
for i in range(300):
    _, smi = corpus[int(rng.integers(len(corpus)))]
    seq = list(protein_potency)[int(rng.integers(3))]
    pic50 = protein_potency[seq] + float(rng.normal(0, 0.25))
    examples.append(
        LpiExample(ligand_smiles=smi, protein_uniprot=f"P{i % 3}", protein_sequence=seq, pic50=pic50)
    )

train, test = stratified_split(examples, SplitSpec(test_count=60, seed=11))


def featurize(ex):
    fp = ecfp(parse_smiles(ex.ligand_smiles), radius=2, width=2048)
    return assemble_features(fp, kmer_featurize(ex.protein_sequence, k=2))


X_train = [featurize(ex) for ex in train]
y_train = [ex.ordinal for ex in train]
print(f"feature dimension: {len(X_train[0])} "
      f"(ligand {X_train[0].ligand_width} + protein {X_train[0].protein_width})")

model = train_ovr_svm(X_train, y_train, SvmConfig(c=1.0, max_epochs=120))
for cls, history in zip(model.classes, model.objective_histories):
    print(f"class {cls.label}: {len(history)} epochs, objective {history[0]:.2f} -> {history[-1]:.2f}")

hits = 0
confusion = {}
for ex in test:
    pred, _ = predict(model, featurize(ex))
    hits += pred == ex.ordinal
    confusion[(ex.ordinal.label, pred.label)] = confusion.get((ex.ordinal.label, pred.label), 0) + 1

print(f"\ntest accuracy: {hits / len(test):.2%} on {len(test)} held-out examples")
print("confusion (truth -> prediction):")
for (truth, pred), count in sorted(confusion.items()):
    print(f"  {truth} -> {pred}: {count}")
