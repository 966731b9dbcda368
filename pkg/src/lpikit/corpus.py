"""Ordinal affinity binning, onomatopoeia label codec, instruction formatting,
prompt wrapping, stratified splits, cohort sampling, and instruction-corpus IO.

The ordinal scheme maps pIC50 to five classes A-E (A most potent); each class
has a fixed nonsense-word token used as the generation target so the label is
semantically distinct from the chemistry text in the prompt.
"""

from __future__ import annotations

import enum
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import IO, TYPE_CHECKING, Callable, Sequence, TypeVar

import numpy as np

if TYPE_CHECKING:
    from lpikit.curation import LpiExample

T = TypeVar("T")


class CorpusError(ValueError):
    """Base class for corpus-layer errors."""


class NonFinite(CorpusError):
    """pIC50 value is NaN or infinite."""


class UnknownToken(CorpusError):
    """Text is not one of the five label tokens."""


class TooSmall(CorpusError):
    """Requested test count does not leave a non-empty train set."""


class TooLarge(CorpusError):
    """Requested cohort exceeds the pool size."""


class InfeasibleTolerance(CorpusError):
    """A class is too small for the split to meet the tolerance."""


class MalformedFile(CorpusError):
    """Instruction-corpus file does not follow the three-key schema."""


class MissingKey(MalformedFile):
    """A corpus object lacks one of instruction/input/output."""


class EmptyInput(CorpusError):
    """Stats requested over an empty collection."""


class OrdinalClass(enum.IntEnum):
    """Five-level affinity bin; lower rank = more potent."""

    A = 0
    B = 1
    C = 2
    D = 3
    E = 4

    @property
    def rank(self) -> int:
        return int(self)

    @property
    def label(self) -> str:
        return self.name


def bin_pic50(pic50: float) -> OrdinalClass:
    """Bin a pIC50 into A (>=8), B ([7,8)), C ([6,7)), D ([5,6)), E (<5)."""
    if not math.isfinite(pic50):
        raise NonFinite(f"pIC50 must be finite, got {pic50!r}")
    if pic50 >= 8.0:
        return OrdinalClass.A
    if pic50 >= 7.0:
        return OrdinalClass.B
    if pic50 >= 6.0:
        return OrdinalClass.C
    if pic50 >= 5.0:
        return OrdinalClass.D
    return OrdinalClass.E


# Label tokens for generative targets, one per class. Decoding matches whole
# tokens only: "choo" is a substring of both "achoo" and "choochoo" and must
# not decode.
ONOMATOPOEIA: dict[OrdinalClass, str] = {
    OrdinalClass.A: "achoo",
    OrdinalClass.B: "blurpblurp",
    OrdinalClass.C: "choochoo",
    OrdinalClass.D: "dibbledopp",
    OrdinalClass.E: "eekeek",
}

_TOKEN_TO_CLASS = {tok: cls for cls, tok in ONOMATOPOEIA.items()}


def encode_class(cls: OrdinalClass) -> str:
    return ONOMATOPOEIA[OrdinalClass(cls)]


def decode_token(text: str) -> OrdinalClass:
    """Decode a whole label token (trimmed, case-folded) back to its class."""
    token = text.strip().casefold()
    try:
        return _TOKEN_TO_CLASS[token]
    except KeyError:
        raise UnknownToken(f"not a label token: {text!r}") from None


class FormatMode(enum.Enum):
    """Which inputs the instruction text carries."""

    BOTH = "both"
    LIGAND_ONLY = "ligand_only"
    PROTEIN_ONLY = "protein_only"


BOTH_TEMPLATE_PREFIX = "Predict the potency of the following SMILES and UNIPROT sequences: "
BOTH_TEMPLATE_JOINER = " and "
LIGAND_ONLY_PREFIX = "Predict the potency of the following SMILES sequence: "
PROTEIN_ONLY_PREFIX = "Predict the potency of the following UNIPROT sequence: "

PROMPT_PREFIX = (
    "Below is an instruction that describes a task. "
    "Write a response that appropriately completes the request. "
    "### Instruction: "
)
RESPONSE_MARKER = "### Response:"


@dataclass(frozen=True)
class InstructionRecord:
    """One training/test record: instruction text, empty input, label token."""

    instruction: str
    output: str
    input: str = ""

    def __post_init__(self) -> None:
        if not self.instruction:
            raise CorpusError("instruction must be non-empty")
        if self.output not in _TOKEN_TO_CLASS:
            raise CorpusError(f"output must be a label token, got {self.output!r}")

    @property
    def ordinal(self) -> OrdinalClass:
        return _TOKEN_TO_CLASS[self.output]


def format_instruction(ex: "LpiExample", mode: FormatMode = FormatMode.BOTH) -> InstructionRecord:
    """Render one curated example into an instruction record."""
    mode = FormatMode(mode)
    if mode is FormatMode.BOTH:
        text = f"{BOTH_TEMPLATE_PREFIX}{ex.ligand_smiles}{BOTH_TEMPLATE_JOINER}{ex.protein_sequence}"
    elif mode is FormatMode.LIGAND_ONLY:
        text = f"{LIGAND_ONLY_PREFIX}{ex.ligand_smiles}"
    else:
        text = f"{PROTEIN_ONLY_PREFIX}{ex.protein_sequence}"
    return InstructionRecord(instruction=text, output=encode_class(ex.ordinal))


def wrap_prompt(rec: InstructionRecord, include_output: bool = False) -> str:
    """Wrap an instruction in the fixed task prompt; optionally append the label."""
    text = f"{PROMPT_PREFIX}{rec.instruction} {RESPONSE_MARKER}"
    if include_output:
        text = f"{text} {rec.output}"
    return text


@dataclass(frozen=True)
class SplitSpec:
    """How to carve a test set out of a parent set.

    Exactly one of test_count/test_fraction must be given. tolerance_pp is the
    allowed per-class deviation, in percentage points, between the test-set
    class share and the parent class share.
    """

    test_count: int | None = None
    test_fraction: float | None = None
    seed: int = 0
    tolerance_pp: float = 2.0

    def __post_init__(self) -> None:
        if (self.test_count is None) == (self.test_fraction is None):
            raise CorpusError("give exactly one of test_count or test_fraction")
        if self.tolerance_pp <= 0:
            raise CorpusError("tolerance_pp must be positive")
        if self.test_fraction is not None and not 0 < self.test_fraction < 1:
            raise CorpusError("test_fraction must be in (0, 1)")

    def resolve_count(self, n: int) -> int:
        if self.test_count is not None:
            return self.test_count
        return int(round(self.test_fraction * n))


def _class_rng(seed: int, rank: int) -> np.random.Generator:
    # Splittable scheme: one PCG64 stream per class, keyed by (seed, rank).
    return np.random.default_rng([seed, rank])


def stratified_split(
    examples: Sequence[T],
    spec: SplitSpec,
    key: Callable[[T], OrdinalClass] | None = None,
) -> tuple[list[T], list[T]]:
    """Split into (train, test) mirroring the parent class mix.

    Per-class quotas are the largest-remainder apportionment of the class
    shares over the test count; each class is shuffled with its own seeded
    generator and the quota taken from the front. Outputs preserve the
    original input order and partition the input exactly.
    """
    if key is None:
        key = lambda ex: ex.ordinal
    n = len(examples)
    test_count = spec.resolve_count(n)
    if test_count >= n:
        raise TooSmall(f"test_count {test_count} >= parent size {n}")
    if test_count < 1:
        raise TooSmall(f"test_count {test_count} < 1")

    by_class: dict[OrdinalClass, list[int]] = {}
    for i, ex in enumerate(examples):
        by_class.setdefault(OrdinalClass(key(ex)), []).append(i)
    classes = sorted(by_class)

    # Largest-remainder apportionment of test_count over class shares.
    quotas = {c: len(by_class[c]) * test_count / n for c in classes}
    take = {c: min(math.floor(quotas[c]), len(by_class[c])) for c in classes}
    short = test_count - sum(take.values())
    order = sorted(classes, key=lambda c: (-(quotas[c] - math.floor(quotas[c])), c.rank))
    while short > 0:
        progressed = False
        for c in order:
            if short == 0:
                break
            if take[c] < len(by_class[c]):
                take[c] += 1
                short -= 1
                progressed = True
        if not progressed:  # cannot happen while test_count < n
            raise TooSmall("not enough examples to fill the test quota")

    violations = []
    for c in classes:
        parent_pct = 100.0 * len(by_class[c]) / n
        test_pct = 100.0 * take[c] / test_count
        if abs(test_pct - parent_pct) > spec.tolerance_pp + 1e-9:
            violations.append((c.label, parent_pct, test_pct))
    if violations:
        detail = "; ".join(f"{lbl}: parent {p:.2f}% vs test {t:.2f}%" for lbl, p, t in violations)
        raise InfeasibleTolerance(f"split exceeds ±{spec.tolerance_pp} pp for: {detail}")

    test_idx: set[int] = set()
    for c in classes:
        idx = by_class[c]
        perm = _class_rng(spec.seed, c.rank).permutation(len(idx))
        test_idx.update(idx[j] for j in perm[: take[c]])

    train = [examples[i] for i in range(n) if i not in test_idx]
    test = [examples[i] for i in range(n) if i in test_idx]
    return train, test


def sample_cohort(examples: Sequence[T], n: int, seed: int) -> list[T]:
    """Uniform sample of n examples without replacement, deterministic by seed."""
    if n > len(examples):
        raise TooLarge(f"cohort size {n} > pool size {len(examples)}")
    if n < 0:
        raise TooLarge(f"cohort size {n} < 0")
    order = np.random.default_rng(seed).permutation(len(examples))
    return [examples[i] for i in order[:n]]


_CORPUS_KEYS = ("instruction", "input", "output")


def emit_instruction_corpus(records: Sequence[InstructionRecord], sink: str | IO[str]) -> None:
    """Write records as a JSON array of {instruction, input, output} objects."""
    payload = [
        {"instruction": r.instruction, "input": r.input, "output": r.output} for r in records
    ]
    if hasattr(sink, "write"):
        json.dump(payload, sink, ensure_ascii=False, indent=2)
    else:
        with open(sink, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, ensure_ascii=False, indent=2)


def read_instruction_corpus(source: str | IO[str]) -> list[InstructionRecord]:
    """Read an instruction-corpus file; exact inverse of emit_instruction_corpus."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedFile(f"not valid JSON: {exc}") from exc
    if not isinstance(payload, list):
        raise MalformedFile("corpus file must be a JSON array")
    records = []
    for i, obj in enumerate(payload):
        if not isinstance(obj, dict):
            raise MalformedFile(f"entry {i} is not an object")
        for k in _CORPUS_KEYS:
            if k not in obj:
                raise MissingKey(f"entry {i} lacks key {k!r}")
        extra = set(obj) - set(_CORPUS_KEYS)
        if extra:
            raise MalformedFile(f"entry {i} has unexpected keys {sorted(extra)}")
        if not all(isinstance(obj[k], str) for k in _CORPUS_KEYS):
            raise MalformedFile(f"entry {i} has non-string values")
        if obj["input"] != "":
            raise MalformedFile(f"entry {i} has non-empty input")
        try:
            records.append(InstructionRecord(instruction=obj["instruction"], output=obj["output"]))
        except CorpusError as exc:
            raise MalformedFile(f"entry {i}: {exc}") from exc
    return records


@dataclass(frozen=True)
class PromptComposition:
    """Mean character share of the instruction text, in percent."""

    protein_pct: float
    ligand_pct: float
    template_pct: float


@dataclass(frozen=True)
class CorpusStats:
    class_counts: dict[OrdinalClass, int] = field(default_factory=dict)
    class_percentages: dict[OrdinalClass, float] = field(default_factory=dict)
    composition: PromptComposition | None = None

    @property
    def n(self) -> int:
        return sum(self.class_counts.values())


def _split_both_instruction(text: str) -> tuple[str, str] | None:
    # SMILES and sequences contain no spaces, so the first " and " after the
    # fixed prefix separates the two blocks unambiguously.
    if not text.startswith(BOTH_TEMPLATE_PREFIX):
        return None
    rest = text[len(BOTH_TEMPLATE_PREFIX):]
    if BOTH_TEMPLATE_JOINER not in rest:
        return None
    smiles, sequence = rest.split(BOTH_TEMPLATE_JOINER, 1)
    return smiles, sequence


def corpus_stats(items: Sequence["LpiExample"] | Sequence[InstructionRecord]) -> CorpusStats:
    """Class counts/percentages; plus prompt composition for both-input data.

    Accepts curated examples or instruction records. Composition is the mean
    per-item character share of the protein block, ligand block, and fixed
    template text within the instruction string (both-input form only).
    """
    if len(items) == 0:
        raise EmptyInput("no examples to profile")

    counts: Counter[OrdinalClass] = Counter()
    shares: list[tuple[float, float]] = []
    for item in items:
        if isinstance(item, InstructionRecord):
            counts[item.ordinal] += 1
            parts = _split_both_instruction(item.instruction)
            if parts is not None:
                smiles, sequence = parts
                total = len(item.instruction)
                shares.append((len(sequence) / total, len(smiles) / total))
        else:
            counts[OrdinalClass(item.ordinal)] += 1
            rec = format_instruction(item, FormatMode.BOTH)
            total = len(rec.instruction)
            shares.append((len(item.protein_sequence) / total, len(item.ligand_smiles) / total))

    n = sum(counts.values())
    class_counts = {c: counts.get(c, 0) for c in OrdinalClass}
    class_pcts = {c: 100.0 * class_counts[c] / n for c in OrdinalClass}
    composition = None
    if shares:
        protein = 100.0 * float(np.mean([s[0] for s in shares]))
        ligand = 100.0 * float(np.mean([s[1] for s in shares]))
        composition = PromptComposition(
            protein_pct=protein, ligand_pct=ligand, template_pct=100.0 - protein - ligand
        )
    return CorpusStats(class_counts=class_counts, class_percentages=class_pcts, composition=composition)


def render_corpus_stats(stats: CorpusStats) -> str:
    """Stats report as TSV: one row per class plus composition rows."""
    lines = ["row\tcount\tpercent"]
    for c in OrdinalClass:
        lines.append(f"class_{c.label}\t{stats.class_counts[c]}\t{stats.class_percentages[c]:.6f}")
    if stats.composition is not None:
        comp = stats.composition
        lines.append(f"prompt_protein\t\t{comp.protein_pct:.6f}")
        lines.append(f"prompt_ligand\t\t{comp.ligand_pct:.6f}")
        lines.append(f"prompt_template\t\t{comp.template_pct:.6f}")
    return "\n".join(lines) + "\n"
