"""Ordinal binning, the label-token codec, instruction formatting, stratified
splits, cohorts, and corpus statistics.

Run:  python demos/03_corpus_splits_and_stats.py
"""

import numpy as np

from lpikit.corpus import (
    FormatMode,
    OrdinalClass,
    SplitSpec,
    bin_pic50,
    corpus_stats,
    decode_token,
    encode_class,
    format_instruction,
    render_corpus_stats,
    sample_cohort,
    stratified_split,
    wrap_prompt,
)
from lpikit.curation import LpiExample

# --- binning and the token codec -------------------------------------------

for pic50 in (9.1, 8.0, 7.2, 6.4, 5.1, 4.0):
    cls = bin_pic50(pic50)
    print(f"pIC50 {pic50:>4} -> class {cls.label} -> token {encode_class(cls)!r}")
print("decode('choochoo') ->", decode_token("choochoo").label)

# --- instruction formatting --------------------------------------------------

ex = LpiExample(
    ligand_smiles="N[C@H]1C[C@H]1c1ccc(NC(=O)c2ccccc2)cc1",
    protein_uniprot="P10000",
    protein_sequence="MENQEKASIAGHMFDVVVIGGGISGLSAAKLL",
    pic50=6.4,
)
rec = format_instruction(ex, FormatMode.BOTH)
print("\ninstruction:", rec.instruction[:90], "...")
print("output:", rec.output)
print("prompt tail:", wrap_prompt(rec, include_output=True)[-40:])

# --- stratified splitting ----------------------------------------------------

rng = np.random.default_rng(0)
pool = [
    LpiExample(
        ligand_smiles=f"{'C' * (i % 9 + 1)}N",
        protein_uniprot=f"P{i % 40}",
        protein_sequence="MENQEK",
        pic50=float(rng.uniform(3.5, 9.5)),
    )
    for i in range(1000)
]
train, test = stratified_split(pool, SplitSpec(test_count=100, seed=7))
print(f"\nsplit: {len(train)} train / {len(test)} test")
for cls in OrdinalClass:
    parent = sum(1 for e in pool if e.ordinal == cls) / 10.0
    held = sum(1 for e in test if e.ordinal == cls)
    print(f"  class {cls.label}: parent {parent:5.1f}%  test {held:5.1f}%")

cohort = sample_cohort(train, 250, seed=41)
print(f"cohort of {len(cohort)} drawn from train")

# --- corpus statistics -------------------------------------------------------

stats = corpus_stats(pool)
print("\n" + render_corpus_stats(stats))
