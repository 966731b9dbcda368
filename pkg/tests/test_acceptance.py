"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line
and enforcing its wall-clock budget (run with `pytest -s tests/test_acceptance.py`
to see the lines)."""

import functools
import io
import math
import time

import numpy as np
import pytest

from helpers import minimal_scale_exponents, naive_eval_counts, rerooted_smiles
from lpikit.baseline import (
    SvmConfig,
    predict,
    primal_objective,
    primal_subgradient,
    train_ovr_svm,
)
from lpikit.chem import ecfp, parse_smiles
from lpikit.corpus import (
    ONOMATOPOEIA,
    OrdinalClass,
    SplitSpec,
    UnknownToken,
    bin_pic50,
    corpus_stats,
    decode_token,
    encode_class,
    stratified_split,
)
from lpikit.curation import (
    AffinityRecord,
    AssayKind,
    LpiExample,
    PotencyRecord,
    Unit,
    aggregate_replicates,
    filter_flat_assays,
    merge_dedup,
    normalize_assay_units,
)
from lpikit.data import load_druglike_smiles
from lpikit.evaluation import ParseStatus, Prediction, near_match, parse_generation_output, score
from lpikit.features import assemble_features, load_embeddings


def criterion(name, budget_s):
    def wrap(fn):
        @functools.wraps(fn)
        def inner(*args, **kwargs):
            start = time.perf_counter()
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"\nACCEPTANCE {name}: FAIL")
                raise
            elapsed = time.perf_counter() - start
            assert elapsed < budget_s, f"{name}: {elapsed:.2f}s exceeds {budget_s}s budget"
            print(f"\nACCEPTANCE {name}: PASS ({elapsed:.2f}s)")

        return inner

    return wrap


@criterion("binning-table", 1.0)
def test_binning_boundary_suite():
    cases = [
        (20.0, "A"),
        (8.001, "A"),
        (8.0, "A"),
        (7.999, "B"),
        (7.5, "B"),
        (7.0, "B"),
        (6.999, "C"),
        (6.5, "C"),
        (6.0, "C"),
        (5.999, "D"),
        (5.5, "D"),
        (5.0, "D"),
        (4.999, "E"),
        (0.0, "E"),
        (-20.0, "E"),
    ]
    assert len(cases) == 15
    for pic50, label in cases:
        assert bin_pic50(pic50).label == label, (pic50, label)


@criterion("codec", 1.0)
def test_codec_bijection_and_substring_rejection():
    seen = set()
    for cls in OrdinalClass:
        token = encode_class(cls)
        assert decode_token(token) == cls
        seen.add(token)
    assert len(seen) == 5
    assert seen == {"achoo", "blurpblurp", "choochoo", "dibbledopp", "eekeek"}
    for token in seen:
        for i in range(len(token)):
            for j in range(i + 1, len(token) + 1):
                sub = token[i:j]
                if sub in seen:
                    continue
                with pytest.raises(UnknownToken):
                    decode_token(sub)


@criterion("stratification", 10.0)
def test_stratification_hundred_seeds():
    mix = {OrdinalClass.A: 260, OrdinalClass.B: 170, OrdinalClass.C: 220, OrdinalClass.D: 210, OrdinalClass.E: 140}
    centers = {OrdinalClass.A: 8.5, OrdinalClass.B: 7.5, OrdinalClass.C: 6.5, OrdinalClass.D: 5.5, OrdinalClass.E: 4.5}
    pool = []
    for cls, count in mix.items():
        for i in range(count):
            pool.append(
                LpiExample(
                    ligand_smiles=f"{'C' * (i % 7 + 1)}N",
                    protein_uniprot=f"P{i}",
                    protein_sequence="MENQEK",
                    pic50=centers[cls],
                )
            )
    n = len(pool)
    assert n == 1000
    for seed in range(100):
        train, test = stratified_split(pool, SplitSpec(test_count=100, seed=seed, tolerance_pp=2.0))
        assert len(train) == 900 and len(test) == 100
        assert sorted(id(x) for x in train + test) == sorted(id(x) for x in pool)
        for cls, count in mix.items():
            test_count = sum(1 for ex in test if ex.ordinal == cls)
            parent_pct = 100.0 * count / n
            test_pct = 100.0 * test_count / 100
            assert abs(test_pct - parent_pct) <= 2.0, (seed, cls, test_pct, parent_pct)


@criterion("feature-dimensions", 1.0)
def test_feature_dimensions():
    rng = np.random.default_rng(0)
    rows = []
    for acc in ("P1", "P2"):
        vals = "\t".join(f"{v:.17g}" for v in rng.normal(size=2560))
        rows.append(f"{acc}\t{vals}")
    table = load_embeddings(io.StringIO("\n".join(rows) + "\n"), expected_dim=2560)
    fp = ecfp(parse_smiles("CC(=O)Oc1ccccc1C(=O)O"), radius=2, width=2048)
    fv = assemble_features(fp, table["P1"])
    assert len(fv) == 4608
    assert abs(float(np.linalg.norm(fv.values)) - 1.0) <= 1e-6


@criterion("ecfp-properties", 30.0)
def test_ecfp_properties():
    corpus = load_druglike_smiles()
    assert len(corpus) == 100
    rng = np.random.default_rng(2024)
    sparsities = []
    rerooted_checked = 0
    for name, smi in corpus:
        mol = parse_smiles(smi)
        assert 10 <= mol.heavy_atom_count <= 50, name
        fp = ecfp(mol, radius=2, width=2048)
        assert fp.popcount <= mol.heavy_atom_count * 3, name
        sparsities.append(fp.sparsity)
        if rerooted_checked < 60:
            start = int(rng.integers(mol.heavy_atom_count))
            remol = parse_smiles(rerooted_smiles(mol, start=start))
            refp = ecfp(remol, radius=2, width=2048)
            assert refp == fp, name
            assert refp.popcount <= remol.heavy_atom_count * 3
            rerooted_checked += 1
    assert rerooted_checked >= 50
    mean_sparsity = float(np.mean(sparsities))
    assert 0.93 <= mean_sparsity <= 0.99, mean_sparsity


@criterion("curation-oracles", 30.0)
def test_curation_oracles():
    rng = np.random.default_rng(7)

    # unit normalization vs the exhaustive-scan oracle, 200 randomized groups
    for trial in range(200):
        size = int(rng.integers(1, 9))
        values = np.exp(rng.uniform(-28, 28) + rng.normal(0, 1.5, size))
        records = [
            AffinityRecord(
                ligand_id=f"L{i}",
                ligand_smiles="CCO",
                assay_id="A",
                protein_uniprot="P1",
                assay_kind=AssayKind.IC50,
                value=float(v),
                unit=Unit.UNSPECIFIED,
            )
            for i, v in enumerate(values)
        ]
        expected_ks = minimal_scale_exponents(float(np.median(values)))
        out = normalize_assay_units(records)
        if not expected_ks:
            assert out == [], trial
            continue
        scale = out[0].value / values[0]
        k = round(math.log10(scale) / 3)
        assert k in expected_ks, (trial, k, expected_ks)
        assert 0.1 <= float(np.median([r.value for r in out])) <= 1e5
        assert normalize_assay_units(out) == out  # idempotence

    # replicate aggregation vs brute-force recount, instances of <= 100 records
    for trial in range(30):
        n = int(rng.integers(2, 101))
        records = [
            PotencyRecord(
                ligand_id=f"L{int(rng.integers(6))}",
                ligand_smiles="CCO",
                assay_id=f"A{int(rng.integers(4))}",
                protein_uniprot="P1",
                pic50=float(rng.uniform(3, 10)),
            )
            for _ in range(n)
        ]
        out = aggregate_replicates(records)
        assert aggregate_replicates(out) == out  # idempotence
        by_key = {(r.ligand_id, r.assay_id): r.pic50 for r in out}
        keys = {(r.ligand_id, r.assay_id) for r in records}
        assert set(by_key) == keys
        for key, got in by_key.items():
            members = [r.pic50 for r in records if (r.ligand_id, r.assay_id) == key]
            assert got == pytest.approx(sum(members) / len(members))

    # merge/dedup vs brute-force recount
    for trial in range(30):
        n = int(rng.integers(1, 101))
        pool = [
            LpiExample(
                ligand_smiles=f"{'C' * int(rng.integers(1, 5))}O",
                protein_uniprot=f"P{int(rng.integers(3))}",
                protein_sequence="MENQEK",
                pic50=float(rng.uniform(3, 10)),
            )
            for _ in range(n)
        ]
        merged, profile = merge_dedup([pool])
        again, _ = merge_dedup([merged])
        assert again == merged  # idempotence
        keys = [(e.ligand_smiles, e.protein_uniprot) for e in merged]
        assert len(keys) == len(set(keys))
        assert profile.n_examples == len(merged)
        assert sum(profile.class_counts.values()) == profile.n_examples
        for entry in merged:
            members = [
                e.pic50
                for e in pool
                if (e.ligand_smiles, e.protein_uniprot) == (entry.ligand_smiles, entry.protein_uniprot)
            ]
            assert entry.pic50 == pytest.approx(sum(members) / len(members))

    # flat-assay filter idempotence
    flat = [
        PotencyRecord(ligand_id=f"L{i}", ligand_smiles="C", assay_id="A", protein_uniprot="P", pic50=4.0)
        for i in range(5)
    ]
    spread = [
        PotencyRecord(ligand_id="L9", ligand_smiles="C", assay_id="B", protein_uniprot="P", pic50=4.0),
        PotencyRecord(ligand_id="L8", ligand_smiles="C", assay_id="B", protein_uniprot="P", pic50=6.0),
    ]
    once = filter_flat_assays(flat + spread)
    assert once == spread
    assert filter_flat_assays(once) == once


@criterion("svm", 60.0)
def test_svm_suite():
    rng = np.random.default_rng(5)
    dim = 6
    center = np.zeros(dim)
    center[0] = 2.5
    X = np.vstack(
        [rng.normal(-center, 0.4, size=(50, dim)), rng.normal(center, 0.4, size=(50, dim))]
    )
    y = [OrdinalClass.B] * 50 + [OrdinalClass.D] * 50

    model = train_ovr_svm(X, y, SvmConfig(max_epochs=200))
    hits = sum(1 for xi, yi in zip(X, y) if predict(model, xi)[0] == yi)
    assert hits == len(y)  # 100% training accuracy on separable blobs

    for history in model.objective_histories:
        assert np.all(np.diff(np.array(history)) <= 1e-9)

    again = train_ovr_svm(X, y, SvmConfig(max_epochs=200))
    assert np.array_equal(model.weights, again.weights)
    assert np.array_equal(model.biases, again.biases)

    # chance level on permuted labels (2-fold cross-validation)
    perm = rng.permutation(len(y))
    y_perm = [y[i] for i in perm]
    accs = []
    for fold in range(2):
        mask = np.arange(len(y)) % 2 == fold
        m = train_ovr_svm(X[~mask], [c for c, keep in zip(y_perm, ~mask) if keep], SvmConfig(max_epochs=100))
        fold_y = [c for c, keep in zip(y_perm, mask) if keep]
        fold_hits = sum(1 for xi, yi in zip(X[mask], fold_y) if predict(m, xi)[0] == yi)
        accs.append(fold_hits / mask.sum())
    assert abs(float(np.mean(accs)) - 0.5) <= 0.10

    # subgradient vs numerical directional derivative at 100 differentiable points
    Xs = rng.normal(size=(25, 4))
    ys = np.where(rng.random(25) < 0.5, 1.0, -1.0)
    c = 1.3
    checked = 0
    while checked < 100:
        w = rng.normal(size=4)
        b = float(rng.normal())
        if np.any(np.abs(ys * (Xs @ w + b) - 1.0) < 1e-3):
            continue
        g_w, g_b = primal_subgradient(w, b, Xs, ys, c)
        d = rng.normal(size=5)
        d /= np.linalg.norm(d)
        h = 1e-7
        numeric = (
            primal_objective(w + h * d[:4], b + h * d[4], Xs, ys, c)
            - primal_objective(w - h * d[:4], b - h * d[4], Xs, ys, c)
        ) / (2 * h)
        analytic = float(g_w @ d[:4] + g_b * d[4])
        assert abs(numeric - analytic) / max(1.0, abs(numeric)) <= 1e-4
        checked += 1


@criterion("scorer", 10.0)
def test_scorer_suite():
    rng = np.random.default_rng(11)
    for _ in range(500):
        n = int(rng.integers(1, 51))
        truths = [(str(i), OrdinalClass(int(rng.integers(5)))) for i in range(n)]
        preds, pairs = [], []
        for i in range(n):
            if rng.random() < 0.15:
                preds.append(Prediction(example_id=str(i), raw_text="junk", parse_status=ParseStatus.UNPARSEABLE))
                pairs.append((None, truths[i][1]))
            else:
                cls = OrdinalClass(int(rng.integers(5)))
                preds.append(Prediction(example_id=str(i), ordinal=cls, parse_status=ParseStatus.PARSED))
                pairs.append((cls, truths[i][1]))
        report = score(preds, truths)
        naive = naive_eval_counts(pairs)
        assert report.overall_exact == pytest.approx(naive["exact"])
        assert report.overall_near == pytest.approx(naive["near"])
        assert report.overall_near >= report.overall_exact
        for cls in OrdinalClass:
            m = report.per_class[cls]
            nv = naive["per_class"][cls]
            assert m.support == nv["support"]
            assert m.exact == pytest.approx(nv["recall"])
            assert m.precision == pytest.approx(nv["precision"])
            assert m.f1 == pytest.approx(nv["f1"])
            assert m.near == pytest.approx(nv["near"])
            assert m.near >= m.exact

    assert near_match(OrdinalClass.B, OrdinalClass.C)

    ordinal, status = parse_generation_output("### Response: this is not a token")
    assert ordinal is None and status == ParseStatus.UNPARSEABLE
    report = score(
        [Prediction(example_id="0", raw_text="junk", parse_status=ParseStatus.UNPARSEABLE)],
        [("0", OrdinalClass.C)],
    )
    assert report.overall_exact == 0.0 and report.overall_near == 0.0


@criterion("end-to-end-determinism", 60.0)
def test_end_to_end_determinism(tmp_path):
    from test_cli import run_pipeline

    d1 = run_pipeline(tmp_path, "first", seed=7)
    d2 = run_pipeline(tmp_path, "second", seed=7)
    for name in ("curated.tsv", "binned.tsv", "train.tsv", "test.tsv", "corpus.json", "stats.tsv"):
        assert (d1 / name).read_bytes() == (d2 / name).read_bytes(), name

    # prompt composition on corpus with the published mean lengths
    examples = [
        LpiExample(
            ligand_smiles="C" * 68,
            protein_uniprot="P1",
            protein_sequence="M" * 667,
            pic50=6.5,
        )
    ] * 20
    comp = corpus_stats(examples).composition
    assert abs(comp.protein_pct - 83.0) <= 3.0
    assert abs(comp.ligand_pct - 8.0) <= 3.0
    assert abs(comp.template_pct - 9.0) <= 3.0
