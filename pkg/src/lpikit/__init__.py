"""lpikit: ligand-protein interaction affinity data pipeline.

Submodules: chem (SMILES + ECFP), curation (assay ingestion and cleanup),
corpus (ordinal binning, instruction formatting, splits), features
(embedding tables and feature assembly), baseline (OvR linear SVM),
evaluation (exact/near-match scoring), cli (subcommand driver).
"""

__version__ = "0.1.0"
