"""Subcommand driver wiring the pipeline end to end.

Exit codes: 0 success, 1 usage error, 2 data error. All randomness flows from
the --seed flag. Every run writes a manifest (subcommand, config, tool
version, input/output content hashes) beside its first output; manifests
carry no timestamps so reruns stay byte-identical.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path
from typing import Sequence

from lpikit import __version__
from lpikit import baseline, corpus, curation, evaluation, features
from lpikit.chem import FingerprintError, SmilesError, ecfp, parse_smiles

DEFAULT_SEED = 0


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # exit 1, not argparse's 2
        raise UsageError(message)


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(subcommand: str, args: argparse.Namespace, inputs: list[str], outputs: list[str]) -> None:
    manifest = {
        "tool": "lpikit",
        "version": __version__,
        "subcommand": subcommand,
        "config": {
            k: v for k, v in sorted(vars(args).items()) if k not in ("func", "config") and v is not None
        },
        "inputs": [{"path": p, "sha256": _sha256(p)} for p in inputs],
        "outputs": [{"path": p, "sha256": _sha256(p)} for p in outputs],
    }
    path = Path(outputs[0]).with_name(Path(outputs[0]).name + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _read_tsv_rows(path: str) -> tuple[list[str], list[list[str]]]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise curation.CurationError(f"{path} is empty")
    header = lines[0].split("\t")
    rows = [line.split("\t") for line in lines[1:] if line]
    return header, rows


def _cmd_curate(args: argparse.Namespace) -> None:
    schema = curation.TableSchema(
        ligand_id=args.col_ligand_id,
        ligand_smiles=args.col_smiles,
        assay_id=args.col_assay_id,
        assay_kind=args.col_kind,
        value=args.col_value,
        unit=args.col_unit,
        protein_uniprot=args.col_protein,
        source=args.col_source,
    )
    audit = curation.AuditLog()
    with open(args.infile, "r", encoding="utf-8") as fh:
        records, rejects = curation.parse_affinity_table(fh, schema, delimiter=args.delimiter)
    for rej in rejects:
        audit.add("parse_table", f"row {rej.row}", "rejected", f"{rej.reason}: {rej.detail}")
    normalized = curation.normalize_assay_units(records, audit)
    potency = curation.records_to_pic50(normalized)
    aggregated = curation.aggregate_replicates(potency)
    informative = curation.filter_flat_assays(aggregated, audit)
    with open(args.fasta, "r", encoding="utf-8") as fh:
        seqmap = curation.parse_fasta(fh)
    examples = curation.resolve_sequences(informative, seqmap, audit)
    merged, profile = curation.merge_dedup([examples])
    curation.write_examples_tsv(merged, args.out)
    audit.write(args.audit)
    outputs = [args.out, args.audit]
    if args.profile_out:
        Path(args.profile_out).write_text(curation.profile_to_tsv(profile), encoding="utf-8")
        outputs.append(args.profile_out)
    _write_manifest("curate", args, [args.infile, args.fasta], outputs)


def _cmd_bin(args: argparse.Namespace) -> None:
    header, rows = _read_tsv_rows(args.infile)
    if args.pic50_col not in header:
        raise curation.MissingColumn(f"column {args.pic50_col!r} absent from header")
    idx = header.index(args.pic50_col)
    if "ordinal" in header:
        ord_idx = header.index("ordinal")
        out_header = header
    else:
        ord_idx = len(header)
        out_header = header + ["ordinal"]
    out_lines = ["\t".join(out_header)]
    for row in rows:
        cls = corpus.bin_pic50(float(row[idx]))
        row = row + [""] * (len(out_header) - len(row))
        row[ord_idx] = cls.label
        out_lines.append("\t".join(row))
    Path(args.out).write_text("\n".join(out_lines) + "\n", encoding="utf-8")
    _write_manifest("bin", args, [args.infile], [args.out])


def _cmd_split(args: argparse.Namespace) -> None:
    examples = curation.read_examples_tsv(args.infile)
    spec = corpus.SplitSpec(
        test_count=args.test_count,
        test_fraction=args.test_fraction,
        seed=args.seed,
        tolerance_pp=args.tolerance_pp,
    )
    train, test = corpus.stratified_split(examples, spec)
    curation.write_examples_tsv(train, args.out_train)
    curation.write_examples_tsv(test, args.out_test)
    _write_manifest("split", args, [args.infile], [args.out_train, args.out_test])


def _cmd_cohort(args: argparse.Namespace) -> None:
    examples = curation.read_examples_tsv(args.infile)
    subset = corpus.sample_cohort(examples, args.n, args.seed)
    curation.write_examples_tsv(subset, args.out)
    _write_manifest("cohort", args, [args.infile], [args.out])


def _cmd_format(args: argparse.Namespace) -> None:
    examples = curation.read_examples_tsv(args.infile)
    mode = corpus.FormatMode(args.mode)
    records = [corpus.format_instruction(ex, mode) for ex in examples]
    corpus.emit_instruction_corpus(records, args.out)
    outputs = [args.out]
    if args.truth_out:
        rows = [(str(i), corpus.OrdinalClass(ex.ordinal)) for i, ex in enumerate(examples)]
        evaluation.write_truth_tsv(rows, args.truth_out)
        outputs.append(args.truth_out)
    _write_manifest("format", args, [args.infile], outputs)


def _cmd_stats(args: argparse.Namespace) -> None:
    if args.infile.endswith(".json"):
        items: Sequence = corpus.read_instruction_corpus(args.infile)
    else:
        items = curation.read_examples_tsv(args.infile)
    stats = corpus.corpus_stats(items)
    Path(args.out).write_text(corpus.render_corpus_stats(stats), encoding="utf-8")
    _write_manifest("stats", args, [args.infile], [args.out])


def _cmd_featurize(args: argparse.Namespace) -> None:
    examples = curation.read_examples_tsv(args.infile)
    inputs = [args.infile]
    table = None
    if args.embeddings:
        with open(args.embeddings, "r", encoding="utf-8") as fh:
            table = features.load_embeddings(fh, expected_dim=args.expected_dim)
        inputs.append(args.embeddings)
    else:
        print(
            f"note: no embedding file given; using the k-mer fallback featurizer (k={args.kmer_k}), "
            "which is not a learned protein representation",
            file=sys.stderr,
        )
    vectors = []
    labels = []
    for i, ex in enumerate(examples):
        fp = ecfp(parse_smiles(ex.ligand_smiles), radius=args.radius, width=args.width)
        if table is not None:
            if ex.protein_uniprot not in table:
                raise features.FeatureError(f"no embedding for accession {ex.protein_uniprot}")
            pvec = table[ex.protein_uniprot]
        else:
            pvec = features.kmer_featurize(ex.protein_sequence, k=args.kmer_k)
        vectors.append(features.assemble_features(fp, pvec))
        labels.append((str(i), corpus.OrdinalClass(ex.ordinal)))
    features.save_feature_matrix(vectors, args.out)
    outputs = [args.out]
    if args.labels_out:
        evaluation.write_truth_tsv(labels, args.labels_out)
        outputs.append(args.labels_out)
    _write_manifest("featurize", args, inputs, outputs)


def _cmd_train_baseline(args: argparse.Namespace) -> None:
    vectors = features.load_feature_matrix(args.features)
    with open(args.labels, "r", encoding="utf-8") as fh:
        label_rows = evaluation.read_truth_tsv(fh)
    if len(label_rows) != len(vectors):
        raise baseline.DimMismatch(f"{len(vectors)} feature rows vs {len(label_rows)} labels")
    cfg = baseline.SvmConfig(c=args.c, max_epochs=args.max_epochs, tol=args.tol, seed=args.seed)
    model = baseline.train_ovr_svm(vectors, [cls for _, cls in label_rows], cfg)
    baseline.save_model(model, args.out)
    _write_manifest("train-baseline", args, [args.features, args.labels], [args.out])


def _cmd_predict_baseline(args: argparse.Namespace) -> None:
    model = baseline.load_model(args.model)
    vectors = features.load_feature_matrix(args.features)
    rows = []
    for i, vec in enumerate(vectors):
        cls, _ = baseline.predict(model, vec)
        rows.append((str(i), corpus.encode_class(cls)))
    evaluation.write_predictions_tsv(rows, args.out)
    _write_manifest("predict-baseline", args, [args.model, args.features], [args.out])


def _cmd_score(args: argparse.Namespace) -> None:
    with open(args.pred, "r", encoding="utf-8") as fh:
        predictions = evaluation.read_predictions_tsv(fh)
    with open(args.truth, "r", encoding="utf-8") as fh:
        truths = evaluation.read_truth_tsv(fh)
    report = evaluation.score(predictions, truths)
    rendered = evaluation.render_report(report, evaluation.ReportFormat(args.format))
    Path(args.out).write_text(rendered, encoding="utf-8")
    _write_manifest("score", args, [args.pred, args.truth], [args.out])


def _cmd_report(args: argparse.Namespace) -> None:
    report = evaluation.parse_report(Path(args.infile).read_text(encoding="utf-8"))
    rendered = evaluation.render_report(report, evaluation.ReportFormat(args.format))
    Path(args.out).write_text(rendered, encoding="utf-8")
    _write_manifest("report", args, [args.infile], [args.out])


def _apply_config_file(argv: list[str]) -> list[str]:
    """Prepend defaults from a `key=value` config file named by --config.

    Flags given on the command line win because they come later in argv.
    """
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        raise UsageError("--config needs a file path")
    path = argv[idx + 1]
    rest = argv[:idx] + argv[idx + 2 :]
    if not rest:
        raise UsageError("--config requires a subcommand")
    extra: list[str] = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{line_no}: expected key=value")
        key, value = line.split("=", 1)
        extra.extend([f"--{key.strip()}", value.strip()])
    return [rest[0], *extra, *rest[1:]]


def build_parser() -> _Parser:
    parser = _Parser(prog="lpikit", description="Ligand-protein affinity data pipeline")
    parser.add_argument("--version", action="version", version=f"lpikit {__version__}")
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")

    p = sub.add_parser("curate", help="raw assay TSV + FASTA -> curated examples")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--fasta", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--audit", required=True)
    p.add_argument("--profile-out", default=None)
    p.add_argument("--delimiter", default="\t")
    p.add_argument("--col-ligand-id", default="ligand_id")
    p.add_argument("--col-smiles", default="smiles")
    p.add_argument("--col-assay-id", default="assay_id")
    p.add_argument("--col-kind", default="assay_kind")
    p.add_argument("--col-value", default="value")
    p.add_argument("--col-unit", default="unit")
    p.add_argument("--col-protein", default="uniprot")
    p.add_argument("--col-source", default=None)
    p.set_defaults(func=_cmd_curate)

    p = sub.add_parser("bin", help="attach ordinal classes to a pIC50 column")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--pic50-col", default="pic50")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_bin)

    p = sub.add_parser("split", help="stratified train/test split of curated examples")
    p.add_argument("--in", dest="infile", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--test-count", type=int, default=None)
    group.add_argument("--test-fraction", type=float, default=None)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--tolerance-pp", type=float, default=2.0)
    p.add_argument("--out-train", required=True)
    p.add_argument("--out-test", required=True)
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("cohort", help="seeded sample without replacement")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_cohort)

    p = sub.add_parser("format", help="curated examples -> instruction corpus JSON")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--mode", choices=[m.value for m in corpus.FormatMode], default="both")
    p.add_argument("--out", required=True)
    p.add_argument("--truth-out", default=None, help="also write example_id/ordinal TSV")
    p.set_defaults(func=_cmd_format)

    p = sub.add_parser("stats", help="class mix and prompt composition report")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("featurize", help="assemble fingerprint+protein feature matrix")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--embeddings", default=None)
    p.add_argument("--expected-dim", type=int, default=None)
    p.add_argument("--kmer-k", type=int, default=3, choices=(1, 2, 3))
    p.add_argument("--radius", type=int, default=2)
    p.add_argument("--width", type=int, default=2048)
    p.add_argument("--out", required=True)
    p.add_argument("--labels-out", default=None)
    p.set_defaults(func=_cmd_featurize)

    p = sub.add_parser("train-baseline", help="fit the one-vs-rest linear SVM")
    p.add_argument("--features", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--max-epochs", type=int, default=1000)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train_baseline)

    p = sub.add_parser("predict-baseline", help="predict label tokens for a feature matrix")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_predict_baseline)

    p = sub.add_parser("score", help="score predictions against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=[f.value for f in evaluation.ReportFormat], default="tsv")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("report", help="re-render a structured-text report")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--format", choices=[f.value for f in evaluation.ReportFormat], default="plotdata")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_report)

    return parser


_DATA_ERRORS = (
    curation.CurationError,
    corpus.CorpusError,
    features.FeatureError,
    baseline.BaselineError,
    evaluation.EvaluationError,
    SmilesError,
    FingerprintError,
    OSError,
)


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_file(argv)
        args = parser.parse_args(argv)
        if not getattr(args, "func", None):
            parser.error("a subcommand is required")
        args.func(args)
        return 0
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        print(parser.format_usage(), file=sys.stderr, end="")
        return 1
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
