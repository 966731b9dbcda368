"""Protein embeddings, a hermetic k-mer fallback featurizer, and assembly of
l2-normalized ligand+protein feature vectors.

Embedding tables come from externally produced TSV files (accession followed
by a fixed number of decimal floats). The k-mer featurizer exists so the
pipeline runs with no embedding file at hand; anything built on it must stay
clearly flagged, because it is not a learned protein representation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Iterable, Sequence

import numpy as np

from lpikit.chem.fingerprint import Fingerprint


class FeatureError(ValueError):
    pass


class RaggedRows(FeatureError):
    pass


class DuplicateAccession(FeatureError):
    pass


class DimMismatch(FeatureError):
    pass


class NotANumber(FeatureError):
    pass


class TooShort(FeatureError):
    pass


class ZeroVector(FeatureError):
    pass


@dataclass(frozen=True)
class EmbeddingTable:
    dim: int
    vectors: dict[str, np.ndarray]

    def __contains__(self, accession: str) -> bool:
        return accession in self.vectors

    def __getitem__(self, accession: str) -> np.ndarray:
        return self.vectors[accession]

    def __len__(self) -> int:
        return len(self.vectors)


def load_embeddings(stream: Iterable[str], expected_dim: int | None = None) -> EmbeddingTable:
    """Read an embedding TSV: accession, then d decimal floats per row."""
    vectors: dict[str, np.ndarray] = {}
    dim: int | None = None
    for line_no, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) < 2:
            raise RaggedRows(f"line {line_no}: no embedding values")
        acc = parts[0].strip()
        if acc in vectors:
            raise DuplicateAccession(f"accession {acc} appears twice")
        try:
            vec = np.array([float(p) for p in parts[1:]], dtype=np.float64)
        except ValueError as exc:
            raise NotANumber(f"line {line_no}: {exc}") from exc
        if dim is None:
            dim = vec.size
            if expected_dim is not None and dim != expected_dim:
                raise DimMismatch(f"file dim {dim} != expected {expected_dim}")
        elif vec.size != dim:
            raise RaggedRows(f"line {line_no}: row has {vec.size} values, expected {dim}")
        vectors[acc] = vec
    if dim is None:
        raise FeatureError("embedding file has no rows")
    return EmbeddingTable(dim=dim, vectors=vectors)


def save_embeddings(table: EmbeddingTable, sink: str | IO[str]) -> None:
    """Write a table back as decimal text, 17 significant digits (lossless)."""
    lines = []
    for acc in table.vectors:
        vals = "\t".join(f"{v:.17g}" for v in table.vectors[acc])
        lines.append(f"{acc}\t{vals}")
    text = "\n".join(lines) + "\n"
    if hasattr(sink, "write"):
        sink.write(text)
    else:
        with open(sink, "w", encoding="utf-8") as fh:
            fh.write(text)


# 20 standard residues in alphabetical order; every other letter folds to X.
_RESIDUES = "ACDEFGHIKLMNPQRSTVWY"
_RESIDUE_INDEX = {ch: i for i, ch in enumerate(_RESIDUES)}
_X_INDEX = 20
KMER_ALPHABET_SIZE = 21


def kmer_featurize(sequence: str, k: int = 3) -> np.ndarray:
    """k-mer count vector of dimension 21^k over the padded residue alphabet."""
    if k not in (1, 2, 3):
        raise FeatureError(f"k must be 1, 2, or 3, got {k}")
    if len(sequence) < k:
        raise TooShort(f"sequence length {len(sequence)} < k={k}")
    codes = [_RESIDUE_INDEX.get(ch, _X_INDEX) for ch in sequence.upper()]
    vec = np.zeros(KMER_ALPHABET_SIZE**k, dtype=np.float64)
    for i in range(len(codes) - k + 1):
        idx = 0
        for j in range(k):
            idx = idx * KMER_ALPHABET_SIZE + codes[i + j]
        vec[idx] += 1.0
    return vec


@dataclass(frozen=True)
class FeatureVector:
    """l2-normalized concatenation: ligand fingerprint block, protein block."""

    values: np.ndarray
    ligand_width: int
    protein_width: int

    def __len__(self) -> int:
        return self.values.size


def assemble_features(fp: Fingerprint, protein_vec: np.ndarray) -> FeatureVector:
    """Cast bits to 0/1, concatenate ligand-then-protein, divide by the norm.

    Normalization happens after concatenation, so relative block weights
    depend on raw magnitudes by design.
    """
    protein_vec = np.asarray(protein_vec, dtype=np.float64)
    if protein_vec.ndim != 1 or protein_vec.size == 0:
        raise FeatureError("protein vector must be a non-empty 1-D array")
    raw = np.concatenate([fp.bits.astype(np.float64), protein_vec])
    norm = float(np.linalg.norm(raw))
    if norm == 0.0:
        raise ZeroVector("both blocks are all-zero; cannot normalize")
    return FeatureVector(values=raw / norm, ligand_width=fp.width, protein_width=protein_vec.size)


def save_feature_matrix(features: Sequence[FeatureVector], sink: str | IO[str]) -> None:
    """Persist vectors as a `n ligand_width protein_width` header plus
    row-major decimal text, for inspection and cross-implementation diffing."""
    if not features:
        raise FeatureError("no feature vectors to save")
    lw = features[0].ligand_width
    pw = features[0].protein_width
    for f in features:
        if f.ligand_width != lw or f.protein_width != pw:
            raise DimMismatch("mixed block widths in feature list")
    lines = [f"{len(features)}\t{lw}\t{pw}"]
    for f in features:
        lines.append("\t".join(f"{v:.17g}" for v in f.values))
    text = "\n".join(lines) + "\n"
    if hasattr(sink, "write"):
        sink.write(text)
    else:
        with open(sink, "w", encoding="utf-8") as fh:
            fh.write(text)


def load_feature_matrix(source: str | IO[str]) -> list[FeatureVector]:
    if hasattr(source, "read"):
        lines = source.read().splitlines()
    else:
        with open(source, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    if not lines:
        raise FeatureError("feature file is empty")
    head = lines[0].split("\t")
    if len(head) != 3:
        raise FeatureError("feature file header must be `n ligand_width protein_width`")
    try:
        n, lw, pw = (int(x) for x in head)
    except ValueError as exc:
        raise NotANumber(f"bad header: {exc}") from exc
    rows = [line for line in lines[1:] if line]
    if len(rows) != n:
        raise FeatureError(f"header says {n} rows, file has {len(rows)}")
    out = []
    for line_no, line in enumerate(rows, start=2):
        try:
            vals = np.array([float(p) for p in line.split("\t")], dtype=np.float64)
        except ValueError as exc:
            raise NotANumber(f"line {line_no}: {exc}") from exc
        if vals.size != lw + pw:
            raise RaggedRows(f"line {line_no}: {vals.size} values, expected {lw + pw}")
        out.append(FeatureVector(values=vals, ligand_width=lw, protein_width=pw))
    return out
