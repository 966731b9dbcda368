"""Assay-table ingestion and the curation pipeline.

Raw rows become AffinityRecords; per-assay unit normalization pulls mislabeled
magnitudes into the 0.1 nM - 100 uM window; values convert to pIC50; replicate
(ligand, assay) groups collapse to their mean pIC50; assays with no spread are
dropped; UNIPROT accessions resolve to sequences; multi-source sets merge with
exact-key dedup.  Every lossy step appends to an audit log.
"""

from __future__ import annotations

import csv
import enum
import json
import math
import statistics
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

from lpikit.corpus import OrdinalClass, bin_pic50


class CurationError(ValueError):
    pass


class MissingColumn(CurationError):
    pass


class NonPositiveValue(CurationError):
    pass


class UnspecifiedUnit(CurationError):
    pass


class FastaError(CurationError):
    pass


class NoHeader(FastaError):
    pass


class DuplicateAccession(FastaError):
    pass


class EmptySequence(FastaError):
    pass


class AssayKind(enum.Enum):
    IC50 = "IC50"
    EC50 = "EC50"
    AC50 = "AC50"
    KI = "Ki"
    KD = "Kd"


class Unit(enum.Enum):
    MOLAR = "M"
    MILLIMOLAR = "mM"
    MICROMOLAR = "uM"
    NANOMOLAR = "nM"
    UNSPECIFIED = "unspecified"


_UNIT_ALIASES = {
    "m": Unit.MOLAR,
    "mm": Unit.MILLIMOLAR,
    "um": Unit.MICROMOLAR,
    "µm": Unit.MICROMOLAR,  # µM
    "μm": Unit.MICROMOLAR,  # μM (greek mu)
    "nm": Unit.NANOMOLAR,
    "": Unit.UNSPECIFIED,
    "unspecified": Unit.UNSPECIFIED,
}

_KIND_ALIASES = {k.value.casefold(): k for k in AssayKind}

_TO_NANOMOLAR = {
    Unit.MOLAR: 1e9,
    Unit.MILLIMOLAR: 1e6,
    Unit.MICROMOLAR: 1e3,
    Unit.NANOMOLAR: 1.0,
    Unit.UNSPECIFIED: 1.0,  # unlabeled values are read as nM
}

_TO_MOLAR = {
    Unit.MOLAR: 1.0,
    Unit.MILLIMOLAR: 1e-3,
    Unit.MICROMOLAR: 1e-6,
    Unit.NANOMOLAR: 1e-9,
}

# 20 standard residues plus the ambiguity/rare codes B J O U X Z.
SEQUENCE_ALPHABET = frozenset("ACDEFGHIKLMNPQRSTVWY") | frozenset("BJOUXZ")


class Source(enum.Enum):
    PUBCHEM = "pubchem"
    BINDINGDB = "bindingdb"
    DAVIS = "davis"
    OTHER = "other"


@dataclass(frozen=True)
class AffinityRecord:
    """One raw assay measurement."""

    ligand_id: str
    ligand_smiles: str
    assay_id: str
    protein_uniprot: str
    assay_kind: AssayKind
    value: float
    unit: Unit = Unit.UNSPECIFIED
    source: Source = Source.OTHER

    def __post_init__(self) -> None:
        if not (self.value > 0 and math.isfinite(self.value)):
            raise NonPositiveValue(f"assay value must be positive and finite, got {self.value!r}")


@dataclass(frozen=True)
class PotencyRecord:
    """Assay measurement after conversion to the pIC50 scale."""

    ligand_id: str
    ligand_smiles: str
    assay_id: str
    protein_uniprot: str
    pic50: float
    source: Source = Source.OTHER


@dataclass(frozen=True)
class LpiExample:
    """Curated (ligand, protein, potency) example ready for corpus building."""

    ligand_smiles: str
    protein_uniprot: str
    protein_sequence: str
    pic50: float
    ordinal: OrdinalClass | None = None

    def __post_init__(self) -> None:
        if not self.protein_sequence:
            raise CurationError("protein sequence must be non-empty")
        bad = set(self.protein_sequence) - SEQUENCE_ALPHABET
        if bad:
            raise CurationError(f"sequence contains non-residue letters {sorted(bad)}")
        expected = bin_pic50(self.pic50)
        if self.ordinal is None:
            object.__setattr__(self, "ordinal", expected)
        elif OrdinalClass(self.ordinal) != expected:
            raise CurationError(
                f"ordinal {OrdinalClass(self.ordinal).label} does not match pIC50 {self.pic50} "
                f"(expected {expected.label})"
            )


@dataclass(frozen=True)
class DatasetProfile:
    n_examples: int
    n_unique_ligands: int
    n_unique_proteins: int
    class_counts: dict[OrdinalClass, int]


@dataclass(frozen=True)
class AuditEntry:
    stage: str
    key: str
    action: str
    detail: str = ""

    def to_json_line(self) -> str:
        return json.dumps(
            {"stage": self.stage, "key": self.key, "action": self.action, "detail": self.detail},
            ensure_ascii=False,
        )


class AuditLog:
    """Append-only record of drops, rescales, and rejects along the pipeline."""

    def __init__(self) -> None:
        self.entries: list[AuditEntry] = []

    def add(self, stage: str, key: str, action: str, detail: str = "") -> None:
        self.entries.append(AuditEntry(stage=stage, key=key, action=action, detail=detail))

    def extend(self, other: "AuditLog") -> None:
        self.entries.extend(other.entries)

    def write(self, sink: str | IO[str]) -> None:
        text = "".join(e.to_json_line() + "\n" for e in self.entries)
        if hasattr(sink, "write"):
            sink.write(text)
        else:
            with open(sink, "w", encoding="utf-8") as fh:
                fh.write(text)


@dataclass(frozen=True)
class TableSchema:
    """Column names for the raw assay table."""

    ligand_id: str = "ligand_id"
    ligand_smiles: str = "smiles"
    assay_id: str = "assay_id"
    assay_kind: str = "assay_kind"
    value: str = "value"
    unit: str = "unit"
    protein_uniprot: str = "uniprot"
    source: str | None = None


@dataclass(frozen=True)
class RejectedRow:
    row: int
    reason: str
    detail: str = ""


def parse_affinity_table(
    stream: Iterable[str], schema: TableSchema = TableSchema(), delimiter: str = "\t"
) -> tuple[list[AffinityRecord], list[RejectedRow]]:
    """Read a delimited assay table; malformed rows land in the rejects list.

    Row numbers in rejects are 1-based data rows (the header is row 0).
    """
    reader = csv.DictReader(stream, delimiter=delimiter)
    if reader.fieldnames is None:
        raise MissingColumn("input has no header row")
    required = [
        schema.ligand_id,
        schema.ligand_smiles,
        schema.assay_id,
        schema.assay_kind,
        schema.value,
        schema.unit,
        schema.protein_uniprot,
    ]
    for col in required:
        if col not in reader.fieldnames:
            raise MissingColumn(f"column {col!r} absent from header {reader.fieldnames}")
    if schema.source is not None and schema.source not in reader.fieldnames:
        raise MissingColumn(f"column {schema.source!r} absent from header")

    records: list[AffinityRecord] = []
    rejects: list[RejectedRow] = []
    for row_no, row in enumerate(reader, start=1):
        raw_value = (row[schema.value] or "").strip()
        try:
            value = float(raw_value)
        except ValueError:
            rejects.append(RejectedRow(row=row_no, reason="NotANumber", detail=raw_value))
            continue
        if not (value > 0 and math.isfinite(value)):
            rejects.append(RejectedRow(row=row_no, reason="NonPositiveValue", detail=raw_value))
            continue
        raw_kind = (row[schema.assay_kind] or "").strip()
        kind = _KIND_ALIASES.get(raw_kind.casefold())
        if kind is None:
            rejects.append(RejectedRow(row=row_no, reason="UnknownKind", detail=raw_kind))
            continue
        raw_unit = (row[schema.unit] or "").strip()
        unit = _UNIT_ALIASES.get(raw_unit.casefold())
        if unit is None:
            rejects.append(RejectedRow(row=row_no, reason="UnknownUnit", detail=raw_unit))
            continue
        smiles = (row[schema.ligand_smiles] or "").strip()
        if not smiles:
            rejects.append(RejectedRow(row=row_no, reason="EmptySmiles"))
            continue
        source = Source.OTHER
        if schema.source is not None:
            try:
                source = Source((row[schema.source] or "other").strip().lower())
            except ValueError:
                rejects.append(RejectedRow(row=row_no, reason="UnknownSource", detail=row[schema.source]))
                continue
        records.append(
            AffinityRecord(
                ligand_id=(row[schema.ligand_id] or "").strip(),
                ligand_smiles=smiles,
                assay_id=(row[schema.assay_id] or "").strip(),
                protein_uniprot=(row[schema.protein_uniprot] or "").strip(),
                assay_kind=kind,
                value=value,
                unit=unit,
                source=source,
            )
        )
    return records, rejects


def to_pic50(value: float, unit: Unit) -> float:
    """pIC50 = -log10(concentration in molar)."""
    if unit == Unit.UNSPECIFIED:
        raise UnspecifiedUnit("cannot convert a value with unspecified unit")
    if not (value > 0 and math.isfinite(value)):
        raise NonPositiveValue(f"concentration must be positive and finite, got {value!r}")
    return -math.log10(value * _TO_MOLAR[Unit(unit)])


# Window the per-assay median must land in, expressed in nM.
_WINDOW_LO_NM = 0.1
_WINDOW_HI_NM = 1e5
_SCALE_EXPONENTS = (0, 1, -1, 2, -2, 3, -3)  # minimal |k| first; positive preferred on ties


def normalize_assay_units(
    records: Sequence[AffinityRecord], audit: AuditLog | None = None
) -> list[AffinityRecord]:
    """Rescale each assay group so its median lies in 0.1 nM - 100 uM.

    Known units convert to nM first; unlabeled values are read as nM. The
    group is multiplied by s = 10^(3k) with minimal |k| putting the median in
    the window. Groups already in range pass through with s = 1; groups no k
    can fix are dropped. Output preserves input order within survivors and
    carries unit = nM.
    """
    audit = audit if audit is not None else AuditLog()
    groups: dict[str, list[int]] = {}
    for i, rec in enumerate(records):
        groups.setdefault(rec.assay_id, []).append(i)

    scaled: dict[int, AffinityRecord] = {}
    for assay_id in sorted(groups):
        idx = groups[assay_id]
        values_nm = [records[i].value * _TO_NANOMOLAR[records[i].unit] for i in idx]
        median = statistics.median(values_nm)
        scale = None
        for k in _SCALE_EXPONENTS:
            s = 10.0 ** (3 * k)
            if _WINDOW_LO_NM <= median * s <= _WINDOW_HI_NM:
                scale = s
                break
        if scale is None:
            audit.add("normalize_units", assay_id, "dropped", f"median {median:g} nM unscalable")
            continue
        if scale != 1.0:
            audit.add("normalize_units", assay_id, "rescaled", f"s={scale:g}")
        for i, v in zip(idx, values_nm):
            rec = records[i]
            scaled[i] = AffinityRecord(
                ligand_id=rec.ligand_id,
                ligand_smiles=rec.ligand_smiles,
                assay_id=rec.assay_id,
                protein_uniprot=rec.protein_uniprot,
                assay_kind=rec.assay_kind,
                value=v * scale,
                unit=Unit.NANOMOLAR,
                source=rec.source,
            )
    return [scaled[i] for i in sorted(scaled)]


def records_to_pic50(records: Sequence[AffinityRecord]) -> list[PotencyRecord]:
    """Convert unit-normalized records to the pIC50 scale."""
    out = []
    for rec in records:
        unit = rec.unit if rec.unit != Unit.UNSPECIFIED else Unit.NANOMOLAR
        out.append(
            PotencyRecord(
                ligand_id=rec.ligand_id,
                ligand_smiles=rec.ligand_smiles,
                assay_id=rec.assay_id,
                protein_uniprot=rec.protein_uniprot,
                pic50=to_pic50(rec.value, unit),
                source=rec.source,
            )
        )
    return out


def aggregate_replicates(records: Sequence[PotencyRecord]) -> list[PotencyRecord]:
    """Collapse each (ligand_id, assay_id) group to one record at the mean pIC50.

    The mean is taken on the pIC50 (log) scale — the geometric mean of
    concentrations. Grouping never crosses assay_id. Output sorted by key.
    """
    groups: dict[tuple[str, str], list[PotencyRecord]] = {}
    for rec in records:
        groups.setdefault((rec.ligand_id, rec.assay_id), []).append(rec)
    out = []
    for key in sorted(groups):
        members = groups[key]
        first = members[0]
        if len(members) == 1:
            out.append(first)
            continue
        mean = sum(m.pic50 for m in members) / len(members)
        out.append(
            PotencyRecord(
                ligand_id=first.ligand_id,
                ligand_smiles=first.ligand_smiles,
                assay_id=first.assay_id,
                protein_uniprot=first.protein_uniprot,
                pic50=mean,
                source=first.source,
            )
        )
    return out


def filter_flat_assays(
    records: Sequence[PotencyRecord], audit: AuditLog | None = None
) -> list[PotencyRecord]:
    """Drop assay groups with fewer than two distinct pIC50 values.

    Distinctness is judged after rounding to 3 decimals; an assay where every
    compound came out at the same potency carries no signal.
    """
    audit = audit if audit is not None else AuditLog()
    groups: dict[str, set[float]] = {}
    for rec in records:
        groups.setdefault(rec.assay_id, set()).add(round(rec.pic50, 3))
    dropped = {assay_id for assay_id, vals in groups.items() if len(vals) < 2}
    for assay_id in sorted(dropped):
        audit.add("filter_flat_assays", assay_id, "dropped", "assay shows no affinity range")
    return [rec for rec in records if rec.assay_id not in dropped]


def _header_accession(header: str) -> str:
    token = header.split()[0] if header.split() else ""
    if "|" in token:
        parts = token.split("|")
        if len(parts) >= 2 and parts[1]:
            return parts[1]
        return parts[0]
    return token


def parse_fasta(stream: Iterable[str]) -> dict[str, str]:
    """Read FASTA text into {accession: sequence}.

    The key is the first whitespace-delimited header token, with db|ACC|name
    decorations stripped to ACC. Sequence lines concatenate, uppercased.
    """
    seqs: dict[str, list[str]] = {}
    current: str | None = None
    for line_no, raw in enumerate(stream, start=1):
        line = raw.rstrip()
        if not line:
            continue
        if line.startswith(">"):
            acc = _header_accession(line[1:].strip())
            if not acc:
                raise NoHeader(f"line {line_no}: header has no accession")
            if acc in seqs:
                raise DuplicateAccession(f"accession {acc} appears twice")
            seqs[acc] = []
            current = acc
        else:
            if current is None:
                raise NoHeader(f"line {line_no}: sequence data before any '>' header")
            seqs[current].append(line.strip().upper())
    out = {}
    for acc, chunks in seqs.items():
        seq = "".join(chunks)
        if not seq:
            raise EmptySequence(f"accession {acc} has no sequence lines")
        out[acc] = seq
    return out


def resolve_sequences(
    records: Sequence[PotencyRecord],
    seqmap: dict[str, str],
    audit: AuditLog | None = None,
) -> list[LpiExample]:
    """Attach sequences by UNIPROT accession; missing or bad entries become audit rejects."""
    audit = audit if audit is not None else AuditLog()
    out = []
    for rec in records:
        seq = seqmap.get(rec.protein_uniprot)
        if seq is None:
            audit.add("resolve_sequences", rec.protein_uniprot, "missing_sequence", rec.ligand_id)
            continue
        try:
            out.append(
                LpiExample(
                    ligand_smiles=rec.ligand_smiles.strip(),
                    protein_uniprot=rec.protein_uniprot,
                    protein_sequence=seq,
                    pic50=rec.pic50,
                )
            )
        except CurationError as exc:
            audit.add("resolve_sequences", rec.protein_uniprot, "bad_sequence", str(exc))
    return out


def merge_dedup(
    datasets: Sequence[Sequence[LpiExample]],
) -> tuple[list[LpiExample], DatasetProfile]:
    """Union of example collections with exact-key dedup.

    Duplicate key = (trimmed SMILES string, UNIPROT accession); keys with
    several entries keep one entry at the mean pIC50, re-binned. Output is
    sorted by key for deterministic emission.
    """
    if not datasets:
        raise CurationError("merge_dedup needs at least one input collection")
    groups: dict[tuple[str, str], list[LpiExample]] = {}
    for dataset in datasets:
        for ex in dataset:
            key = (ex.ligand_smiles.strip(), ex.protein_uniprot)
            groups.setdefault(key, []).append(ex)

    merged = []
    for key in sorted(groups):
        members = groups[key]
        first = members[0]
        if len(members) == 1:
            merged.append(first)
        else:
            mean = sum(m.pic50 for m in members) / len(members)
            merged.append(
                LpiExample(
                    ligand_smiles=first.ligand_smiles,
                    protein_uniprot=first.protein_uniprot,
                    protein_sequence=first.protein_sequence,
                    pic50=mean,
                )
            )

    counts: dict[OrdinalClass, int] = {c: 0 for c in OrdinalClass}
    for ex in merged:
        counts[OrdinalClass(ex.ordinal)] += 1
    profile = DatasetProfile(
        n_examples=len(merged),
        n_unique_ligands=len({ex.ligand_smiles for ex in merged}),
        n_unique_proteins=len({ex.protein_uniprot for ex in merged}),
        class_counts=counts,
    )
    return merged, profile


EXAMPLE_COLUMNS = ("smiles", "uniprot", "sequence", "pic50", "ordinal")


def write_examples_tsv(examples: Sequence[LpiExample], sink: str | IO[str]) -> None:
    """Curated-example file: TSV with smiles, uniprot, sequence, pic50, ordinal."""
    lines = ["\t".join(EXAMPLE_COLUMNS)]
    for ex in examples:
        lines.append(
            "\t".join(
                (
                    ex.ligand_smiles,
                    ex.protein_uniprot,
                    ex.protein_sequence,
                    f"{ex.pic50:.17g}",
                    OrdinalClass(ex.ordinal).label,
                )
            )
        )
    text = "\n".join(lines) + "\n"
    if hasattr(sink, "write"):
        sink.write(text)
    else:
        with open(sink, "w", encoding="utf-8") as fh:
            fh.write(text)


def read_examples_tsv(source: str | IO[str]) -> list[LpiExample]:
    if hasattr(source, "read"):
        lines = source.read().splitlines()
    else:
        with open(source, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    if not lines:
        raise CurationError("curated-example file is empty")
    header = tuple(lines[0].split("\t"))
    if header != EXAMPLE_COLUMNS:
        raise MissingColumn(f"expected columns {EXAMPLE_COLUMNS}, got {header}")
    out = []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != len(EXAMPLE_COLUMNS):
            raise CurationError(f"line {line_no}: expected {len(EXAMPLE_COLUMNS)} fields")
        smiles, uniprot, sequence, pic50_text, ordinal_text = parts
        out.append(
            LpiExample(
                ligand_smiles=smiles,
                protein_uniprot=uniprot,
                protein_sequence=sequence,
                pic50=float(pic50_text),
                ordinal=OrdinalClass[ordinal_text],
            )
        )
    return out


def profile_to_tsv(profile: DatasetProfile) -> str:
    lines = [
        "metric\tvalue",
        f"n_examples\t{profile.n_examples}",
        f"n_unique_ligands\t{profile.n_unique_ligands}",
        f"n_unique_proteins\t{profile.n_unique_proteins}",
    ]
    for c in OrdinalClass:
        lines.append(f"count_{c.label}\t{profile.class_counts.get(c, 0)}")
    return "\n".join(lines) + "\n"
