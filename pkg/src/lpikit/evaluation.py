"""Scoring of ordinal affinity predictions: exact match, ±1 near match,
per-class precision/recall/F1, confusion counts, and report rendering.

"Accuracy" and "exact matches" are one micro metric emitted under both names.
Unparseable generations count as wrong under both criteria and are tracked in
their own confusion column.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

import numpy as np

from lpikit.corpus import RESPONSE_MARKER, OrdinalClass, UnknownToken, decode_token


class EvaluationError(ValueError):
    pass


class LengthMismatch(EvaluationError):
    pass


class IdMismatch(EvaluationError):
    pass


class Empty(EvaluationError):
    pass


class ReportParseError(EvaluationError):
    pass


class ParseStatus(enum.Enum):
    PARSED = "parsed"
    UNPARSEABLE = "unparseable"


@dataclass(frozen=True)
class Prediction:
    example_id: str
    raw_text: str | None = None
    ordinal: OrdinalClass | None = None
    parse_status: ParseStatus = ParseStatus.UNPARSEABLE

    def __post_init__(self) -> None:
        if self.parse_status == ParseStatus.PARSED and self.ordinal is None:
            raise EvaluationError("parsed prediction must carry an ordinal")
        if self.parse_status == ParseStatus.UNPARSEABLE and self.ordinal is not None:
            raise EvaluationError("unparseable prediction cannot carry an ordinal")


def parse_generation_output(text: str) -> tuple[OrdinalClass | None, ParseStatus]:
    """Extract the predicted class from generated text.

    Takes the substring after the last response marker (or the whole text if
    no marker), trims, case-folds, and decodes the first whitespace token.
    Failure is a status, not an error.
    """
    if RESPONSE_MARKER in text:
        tail = text.rsplit(RESPONSE_MARKER, 1)[1]
    else:
        tail = text
    tokens = tail.split()
    if not tokens:
        return None, ParseStatus.UNPARSEABLE
    try:
        return decode_token(tokens[0]), ParseStatus.PARSED
    except UnknownToken:
        return None, ParseStatus.UNPARSEABLE


def prediction_from_text(example_id: str, text: str) -> Prediction:
    ordinal, status = parse_generation_output(text)
    return Prediction(example_id=example_id, raw_text=text, ordinal=ordinal, parse_status=status)


def near_match(pred: OrdinalClass, truth: OrdinalClass) -> bool:
    """Exact ordinal value or ±1 ordinal value relative to the ground truth."""
    return abs(OrdinalClass(pred).rank - OrdinalClass(truth).rank) <= 1


@dataclass(frozen=True)
class ClassMetrics:
    support: int
    exact: float  # per-class recall
    precision: float
    f1: float
    near: float


@dataclass(frozen=True)
class EvalReport:
    n: int
    overall_accuracy: float
    overall_exact: float  # same micro metric as overall_accuracy
    overall_near: float
    per_class: dict[OrdinalClass, ClassMetrics]
    confusion: np.ndarray  # (5, 5) truth x predicted
    unparseable_by_truth: np.ndarray  # (5,)
    unparseable_count: int

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EvalReport):
            return NotImplemented
        return (
            self.n == other.n
            and self.overall_accuracy == other.overall_accuracy
            and self.overall_near == other.overall_near
            and self.per_class == other.per_class
            and bool(np.array_equal(self.confusion, other.confusion))
            and bool(np.array_equal(self.unparseable_by_truth, other.unparseable_by_truth))
        )


def score(
    predictions: Sequence[Prediction], truths: Sequence[tuple[str, OrdinalClass]]
) -> EvalReport:
    """Score aligned (prediction, truth) pairs into an EvalReport."""
    if len(predictions) == 0:
        raise Empty("nothing to score")
    if len(predictions) != len(truths):
        raise LengthMismatch(f"{len(predictions)} predictions vs {len(truths)} truths")

    n_classes = len(OrdinalClass)
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    unparseable = np.zeros(n_classes, dtype=np.int64)
    near_by_truth = np.zeros(n_classes, dtype=np.int64)
    for pred, (truth_id, truth_cls) in zip(predictions, truths):
        if pred.example_id != truth_id:
            raise IdMismatch(f"prediction id {pred.example_id!r} != truth id {truth_id!r}")
        t = OrdinalClass(truth_cls).rank
        if pred.parse_status == ParseStatus.UNPARSEABLE:
            unparseable[t] += 1
            continue
        p = OrdinalClass(pred.ordinal).rank
        confusion[t, p] += 1
        if abs(p - t) <= 1:
            near_by_truth[t] += 1

    n = len(predictions)
    diag = np.diag(confusion)
    support = confusion.sum(axis=1) + unparseable
    col_sum = confusion.sum(axis=0)
    per_class = {}
    for cls in OrdinalClass:
        r = cls.rank
        sup = int(support[r])
        exact = float(diag[r] / sup) if sup else 0.0
        prec = float(diag[r] / col_sum[r]) if col_sum[r] else 0.0
        f1 = 2 * prec * exact / (prec + exact) if (prec + exact) > 0 else 0.0
        near = float(near_by_truth[r] / sup) if sup else 0.0
        per_class[cls] = ClassMetrics(support=sup, exact=exact, precision=prec, f1=f1, near=near)

    overall_exact = float(diag.sum() / n)
    overall_near = float(near_by_truth.sum() / n)
    return EvalReport(
        n=n,
        overall_accuracy=overall_exact,
        overall_exact=overall_exact,
        overall_near=overall_near,
        per_class=per_class,
        confusion=confusion,
        unparseable_by_truth=unparseable,
        unparseable_count=int(unparseable.sum()),
    )


class ReportFormat(enum.Enum):
    TSV = "tsv"
    STRUCTURED_TEXT = "structured-text"
    PLOTDATA = "plotdata"


def render_report(report: EvalReport, fmt: ReportFormat = ReportFormat.TSV) -> str:
    fmt = ReportFormat(fmt)
    if fmt == ReportFormat.TSV:
        lines = ["label\tsupport\texact\tnear\tprecision\tf1"]
        for cls in OrdinalClass:
            m = report.per_class[cls]
            lines.append(
                f"{cls.label}\t{m.support}\t{m.exact:.17g}\t{m.near:.17g}\t{m.precision:.17g}\t{m.f1:.17g}"
            )
        lines.append(f"overall_accuracy\t{report.n}\t{report.overall_accuracy:.17g}\t\t\t")
        lines.append(f"overall_exact_matches\t{report.n}\t{report.overall_exact:.17g}\t\t\t")
        lines.append(f"overall_near_matches\t{report.n}\t\t{report.overall_near:.17g}\t\t")
        return "\n".join(lines) + "\n"
    if fmt == ReportFormat.PLOTDATA:
        lines = ["class\texact_pct\tnear_pct"]
        for cls in OrdinalClass:
            m = report.per_class[cls]
            lines.append(f"{cls.label}\t{100 * m.exact:.17g}\t{100 * m.near:.17g}")
        return "\n".join(lines) + "\n"

    lines = ["eval_report\t1", f"n\t{report.n}", f"unparseable\t{report.unparseable_count}"]
    lines.append(f"overall\t{report.overall_accuracy:.17g}\t{report.overall_exact:.17g}\t{report.overall_near:.17g}")
    for cls in OrdinalClass:
        m = report.per_class[cls]
        lines.append(
            f"class\t{cls.label}\t{m.support}\t{m.exact:.17g}\t{m.near:.17g}\t{m.precision:.17g}\t{m.f1:.17g}"
        )
    for cls in OrdinalClass:
        row = "\t".join(str(int(v)) for v in report.confusion[cls.rank])
        lines.append(f"confusion\t{cls.label}\t{row}\t{int(report.unparseable_by_truth[cls.rank])}")
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> EvalReport:
    """Inverse of render_report for the structured-text format."""
    lines = [line for line in text.splitlines() if line]
    if not lines or not lines[0].startswith("eval_report\t"):
        raise ReportParseError("not a structured-text report")
    per_class: dict[OrdinalClass, ClassMetrics] = {}
    confusion = np.zeros((5, 5), dtype=np.int64)
    unparseable_by_truth = np.zeros(5, dtype=np.int64)
    n = None
    unparseable_count = None
    overall = None
    for line in lines[1:]:
        parts = line.split("\t")
        if parts[0] == "n":
            n = int(parts[1])
        elif parts[0] == "unparseable":
            unparseable_count = int(parts[1])
        elif parts[0] == "overall":
            overall = tuple(float(v) for v in parts[1:4])
        elif parts[0] == "class":
            cls = OrdinalClass[parts[1]]
            per_class[cls] = ClassMetrics(
                support=int(parts[2]),
                exact=float(parts[3]),
                near=float(parts[4]),
                precision=float(parts[5]),
                f1=float(parts[6]),
            )
        elif parts[0] == "confusion":
            cls = OrdinalClass[parts[1]]
            confusion[cls.rank] = [int(v) for v in parts[2:7]]
            unparseable_by_truth[cls.rank] = int(parts[7])
        else:
            raise ReportParseError(f"unknown report line {parts[0]!r}")
    if n is None or unparseable_count is None or overall is None or len(per_class) != 5:
        raise ReportParseError("report is missing sections")
    return EvalReport(
        n=n,
        overall_accuracy=overall[0],
        overall_exact=overall[1],
        overall_near=overall[2],
        per_class=per_class,
        confusion=confusion,
        unparseable_by_truth=unparseable_by_truth,
        unparseable_count=unparseable_count,
    )


def read_predictions_tsv(stream: Iterable[str]) -> list[Prediction]:
    """Predictions file: TSV rows `example_id<TAB>raw_text_or_token`."""
    out = []
    for line_no, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n")
        if not line:
            continue
        if "\t" not in line:
            raise EvaluationError(f"line {line_no}: expected example_id<TAB>text")
        example_id, text = line.split("\t", 1)
        out.append(prediction_from_text(example_id, text))
    return out


def read_truth_tsv(stream: Iterable[str]) -> list[tuple[str, OrdinalClass]]:
    """Ground-truth file: TSV rows `example_id<TAB>ordinal_letter`."""
    out = []
    for line_no, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n")
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise EvaluationError(f"line {line_no}: expected example_id<TAB>ordinal")
        try:
            cls = OrdinalClass[parts[1].strip().upper()]
        except KeyError:
            raise EvaluationError(f"line {line_no}: unknown ordinal {parts[1]!r}") from None
        out.append((parts[0], cls))
    return out


def write_predictions_tsv(rows: Sequence[tuple[str, str]], sink: str | IO[str]) -> None:
    text = "".join(f"{example_id}\t{payload}\n" for example_id, payload in rows)
    if hasattr(sink, "write"):
        sink.write(text)
    else:
        with open(sink, "w", encoding="utf-8") as fh:
            fh.write(text)


def write_truth_tsv(rows: Sequence[tuple[str, OrdinalClass]], sink: str | IO[str]) -> None:
    text = "".join(f"{example_id}\t{OrdinalClass(cls).label}\n" for example_id, cls in rows)
    if hasattr(sink, "write"):
        sink.write(text)
    else:
        with open(sink, "w", encoding="utf-8") as fh:
            fh.write(text)
