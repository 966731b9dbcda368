"""Walk a messy raw assay table through the full curation pipeline:
parse -> unit normalization -> pIC50 -> replicate means -> flat-assay filter
-> sequence resolution -> merge/dedup.

Run:  python demos/02_curation_pipeline.py
"""

import io

from lpikit.curation import (
    AuditLog,
    aggregate_replicates,
    filter_flat_assays,
    merge_dedup,
    normalize_assay_units,
    parse_affinity_table,
    parse_fasta,
    profile_to_tsv,
    records_to_pic50,
    resolve_sequences,
)

RAW = """\
ligand_id	smiles	assay_id	assay_kind	value	unit	uniprot
CID1	CCO	AID1	IC50	12	nM	P10000
CID1	CCO	AID1	IC50	120	nM	P10000
CID2	CCN	AID1	IC50	4500	nM	P10000
CID3	CCC	AID2	Ki	2e-7		P20000
CID4	CCCC	AID2	Ki	5e-8		P20000
CID5	c1ccccc1O	AID3	IC50	1000	nM	P10000
CID6	c1ccccc1N	AID3	IC50	1000	nM	P10000
CID7	CCS	AID1	IC50	abc	nM	P10000
CID8	CCL	AID1	IC50	-4	nM	P10000
CID9	CC(C)O	AID1	EC50	77	nM	MISSING
"""

FASTA = """\
>P10000 demo kinase
MENQEKASIAGHMFDVVVIGGGISGLSAAKLL
>sp|P20000|DEMO_HUMAN
MKTAYIAKQRQISFVKSHFSRQLEERLGLIEV
"""

audit = AuditLog()

records, rejects = parse_affinity_table(io.StringIO(RAW))
print(f"parsed {len(records)} records, {len(rejects)} rejects")
for rej in rejects:
    print(f"  reject row {rej.row}: {rej.reason} ({rej.detail})")

# AID2 was reported in molar magnitudes without a unit label; the per-assay
# median pulls it back into the 0.1 nM - 100 uM window.
normalized = normalize_assay_units(records, audit)
for rec in normalized:
    if rec.assay_id == "AID2":
        print(f"  AID2 {rec.ligand_id}: value now {rec.value:g} nM")

potency = records_to_pic50(normalized)
aggregated = aggregate_replicates(potency)
print(f"after replicate means: {len(aggregated)} records "
      f"(CID1 pIC50 {next(r.pic50 for r in aggregated if r.ligand_id == 'CID1'):.3f})")

informative = filter_flat_assays(aggregated, audit)  # AID3 shows no spread
examples = resolve_sequences(informative, parse_fasta(io.StringIO(FASTA)), audit)
merged, profile = merge_dedup([examples])

print("\ncurated examples:")
for ex in merged:
    print(f"  {ex.ligand_smiles:<12} {ex.protein_uniprot}  pIC50 {ex.pic50:6.3f}  class {ex.ordinal.label}")

print("\nprofile:")
print(profile_to_tsv(profile))

print("audit trail:")
for entry in audit.entries:
    print(f"  {entry.to_json_line()}")
