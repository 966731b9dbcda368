import io
import math

import pytest
from hypothesis import given, strategies as st

from lpikit.corpus import (
    BOTH_TEMPLATE_PREFIX,
    ONOMATOPOEIA,
    CorpusError,
    FormatMode,
    InfeasibleTolerance,
    InstructionRecord,
    MalformedFile,
    MissingKey,
    NonFinite,
    OrdinalClass,
    SplitSpec,
    TooLarge,
    TooSmall,
    UnknownToken,
    bin_pic50,
    corpus_stats,
    decode_token,
    emit_instruction_corpus,
    encode_class,
    format_instruction,
    read_instruction_corpus,
    sample_cohort,
    stratified_split,
    wrap_prompt,
)
from lpikit.curation import LpiExample


def make_example(pic50=6.5, smiles="CCO", seq="MENQEK"):
    return LpiExample(ligand_smiles=smiles, protein_uniprot="P12345", protein_sequence=seq, pic50=pic50)


class TestBinning:
    @pytest.mark.parametrize(
        "pic50,label",
        [
            (8.0, "A"),
            (9.5, "A"),
            (7.999, "B"),
            (7.0, "B"),
            (6.999, "C"),
            (6.0, "C"),
            (5.999, "D"),
            (5.0, "D"),
            (4.999, "E"),
            (-20.0, "E"),
            (20.0, "A"),
        ],
    )
    def test_boundaries(self, pic50, label):
        assert bin_pic50(pic50).label == label

    def test_non_finite(self):
        for bad in (math.nan, math.inf, -math.inf):
            with pytest.raises(NonFinite):
                bin_pic50(bad)

    @given(st.floats(allow_nan=False, allow_infinity=False, width=64), st.floats(allow_nan=False, allow_infinity=False, width=64))
    def test_monotone(self, a, b):
        lo, hi = (a, b) if a <= b else (b, a)
        assert bin_pic50(hi).rank <= bin_pic50(lo).rank


class TestCodec:
    def test_bijection(self):
        for cls in OrdinalClass:
            assert decode_token(encode_class(cls)) == cls
        assert len(set(ONOMATOPOEIA.values())) == 5

    def test_known_pairs(self):
        assert encode_class(OrdinalClass.A) == "achoo"
        assert decode_token("choochoo") == OrdinalClass.C

    def test_trim_and_casefold(self):
        assert decode_token("  AcHoO \n") == OrdinalClass.A

    def test_whole_token_only(self):
        for cls in OrdinalClass:
            token = encode_class(cls)
            for i in range(len(token)):
                for j in range(i + 1, len(token) + 1):
                    sub = token[i:j]
                    if sub == token:
                        continue
                    with pytest.raises(UnknownToken):
                        decode_token(sub)


class TestFormatting:
    def test_both_mode_template(self):
        ex = make_example(pic50=6.5, smiles="N[C@H]1C[C@H]1c1ccccc1", seq="MENQEK")
        rec = format_instruction(ex, FormatMode.BOTH)
        assert rec.instruction == (
            "Predict the potency of the following SMILES and UNIPROT sequences: "
            "N[C@H]1C[C@H]1c1ccccc1 and MENQEK"
        )
        assert rec.output == "choochoo"
        assert rec.input == ""

    def test_ligand_only(self):
        ex = make_example(smiles="CCN", seq="MENQEK")
        rec = format_instruction(ex, FormatMode.LIGAND_ONLY)
        assert "CCN" in rec.instruction
        assert "MENQEK" not in rec.instruction

    def test_protein_only(self):
        ex = make_example(smiles="CCN", seq="MENQEK")
        rec = format_instruction(ex, FormatMode.PROTEIN_ONLY)
        assert "MENQEK" in rec.instruction
        assert "CCN" not in rec.instruction

    def test_wrap_prompt_forms(self):
        rec = InstructionRecord(instruction="do the thing", output="eekeek")
        bare = wrap_prompt(rec, include_output=False)
        full = wrap_prompt(rec, include_output=True)
        assert bare.endswith("### Response:")
        assert full.endswith("### Response: eekeek")
        assert full.startswith(bare)
        assert bare.startswith("Below is an instruction that describes a task.")

    def test_instruction_record_invariants(self):
        with pytest.raises(CorpusError):
            InstructionRecord(instruction="", output="achoo")
        with pytest.raises(CorpusError):
            InstructionRecord(instruction="x", output="banana")


def synthetic_pool(counts: dict[OrdinalClass, int]):
    pool = []
    centers = {
        OrdinalClass.A: 8.5,
        OrdinalClass.B: 7.5,
        OrdinalClass.C: 6.5,
        OrdinalClass.D: 5.5,
        OrdinalClass.E: 4.5,
    }
    for cls, count in counts.items():
        for i in range(count):
            pool.append(make_example(pic50=centers[cls], smiles=f"{'C' * (i % 5 + 1)}O"))
    return pool


class TestSplit:
    def test_partition_and_tolerance(self):
        pool = synthetic_pool({OrdinalClass.A: 200, OrdinalClass.B: 300, OrdinalClass.C: 500})
        spec = SplitSpec(test_count=100, seed=7)
        train, test = stratified_split(pool, spec)
        assert len(test) == 100 and len(train) == 900
        # brute-force recount of the emitted split
        def count(split, cls):
            return sum(1 for ex in split if ex.ordinal == cls)

        assert 18 <= count(test, OrdinalClass.A) <= 22
        assert 28 <= count(test, OrdinalClass.B) <= 32
        assert 48 <= count(test, OrdinalClass.C) <= 52
        combined = sorted(id(x) for x in train + test)
        assert combined == sorted(id(x) for x in pool)

    def test_determinism(self):
        pool = synthetic_pool({OrdinalClass.A: 50, OrdinalClass.D: 150})
        spec = SplitSpec(test_count=40, seed=11)
        first = stratified_split(pool, spec)
        second = stratified_split(pool, spec)
        assert [id(x) for x in first[0]] == [id(x) for x in second[0]]
        assert [id(x) for x in first[1]] == [id(x) for x in second[1]]

    def test_too_small(self):
        pool = synthetic_pool({OrdinalClass.A: 100})
        with pytest.raises(TooSmall):
            stratified_split(pool, SplitSpec(test_count=1000, seed=0))

    def test_infeasible_tolerance_reported(self):
        # one B example in 1000 cannot be mirrored in a 10-example test set
        pool = synthetic_pool({OrdinalClass.A: 999, OrdinalClass.B: 1})
        with pytest.raises(InfeasibleTolerance):
            stratified_split(pool, SplitSpec(test_count=10, seed=0, tolerance_pp=0.001))

    def test_fraction_spec(self):
        pool = synthetic_pool({OrdinalClass.C: 80, OrdinalClass.E: 120})
        train, test = stratified_split(pool, SplitSpec(test_fraction=0.25, seed=3))
        assert len(test) == 50

    def test_spec_validation(self):
        with pytest.raises(CorpusError):
            SplitSpec(test_count=10, test_fraction=0.5)
        with pytest.raises(CorpusError):
            SplitSpec()
        with pytest.raises(CorpusError):
            SplitSpec(test_count=10, tolerance_pp=0)


class TestCohort:
    def test_full_pool_is_shuffled_identity(self):
        pool = synthetic_pool({OrdinalClass.C: 30})
        out = sample_cohort(pool, 30, seed=5)
        assert sorted(id(x) for x in out) == sorted(id(x) for x in pool)

    def test_empty_cohort(self):
        assert sample_cohort([1, 2, 3], 0, seed=1) == []

    def test_determinism(self):
        pool = list(range(100))
        assert sample_cohort(pool, 10, seed=9) == sample_cohort(pool, 10, seed=9)

    def test_too_large(self):
        with pytest.raises(TooLarge):
            sample_cohort([1, 2], 3, seed=0)


class TestCorpusFile:
    def test_round_trip(self):
        records = [
            InstructionRecord(instruction='weird "quotes" \\ and µM text', output="achoo"),
            InstructionRecord(instruction="plain", output="eekeek"),
            InstructionRecord(instruction="third", output="choochoo"),
        ]
        buf = io.StringIO()
        emit_instruction_corpus(records, buf)
        assert read_instruction_corpus(io.StringIO(buf.getvalue())) == records

    def test_empty_corpus(self):
        buf = io.StringIO()
        emit_instruction_corpus([], buf)
        assert buf.getvalue() == "[]"
        assert read_instruction_corpus(io.StringIO("[]")) == []

    def test_missing_key(self):
        with pytest.raises(MissingKey):
            read_instruction_corpus(io.StringIO('[{"instruction": "x", "input": ""}]'))

    def test_extra_key_rejected(self):
        with pytest.raises(MalformedFile):
            read_instruction_corpus(
                io.StringIO('[{"instruction": "x", "input": "", "output": "achoo", "id": 1}]')
            )

    def test_not_json(self):
        with pytest.raises(MalformedFile):
            read_instruction_corpus(io.StringIO("not json"))

    @given(
        st.lists(
            st.tuples(
                st.text(min_size=1).filter(lambda s: s.strip()),
                st.sampled_from(sorted(ONOMATOPOEIA.values())),
            ),
            max_size=20,
        )
    )
    def test_round_trip_property(self, payload):
        records = [InstructionRecord(instruction=i, output=o) for i, o in payload]
        buf = io.StringIO()
        emit_instruction_corpus(records, buf)
        assert read_instruction_corpus(io.StringIO(buf.getvalue())) == records


class TestStats:
    def test_single_class(self):
        stats = corpus_stats([make_example(pic50=4.0) for _ in range(10)])
        assert stats.class_percentages[OrdinalClass.E] == 100.0
        assert stats.class_counts[OrdinalClass.A] == 0

    def test_uniform(self):
        pool = [make_example(pic50=p) for p in (8.5, 7.5, 6.5, 5.5, 4.5)]
        stats = corpus_stats(pool)
        assert all(v == 20.0 for v in stats.class_percentages.values())
        assert abs(sum(stats.class_percentages.values()) - 100.0) < 0.1

    def test_prompt_composition_lpi_like(self):
        # mean SMILES 68 chars, mean sequence 667 chars
        ex = make_example(pic50=6.5, smiles="C" * 68, seq="M" * 667)
        stats = corpus_stats([ex] * 10)
        comp = stats.composition
        assert abs(comp.protein_pct - 83) <= 3
        assert abs(comp.ligand_pct - 8) <= 3
        assert abs(comp.template_pct - 9) <= 3
        assert abs(comp.protein_pct + comp.ligand_pct + comp.template_pct - 100.0) < 0.1

    def test_stats_from_records(self):
        ex = make_example(pic50=6.5, smiles="CCCC", seq="MENQEK")
        rec = format_instruction(ex, FormatMode.BOTH)
        stats = corpus_stats([rec])
        assert stats.class_counts[OrdinalClass.C] == 1
        assert rec.instruction.startswith(BOTH_TEMPLATE_PREFIX)
        assert stats.composition is not None

    def test_empty_errors(self):
        from lpikit.corpus import EmptyInput

        with pytest.raises(EmptyInput):
            corpus_stats([])
