"""Score generated predictions with the exact / ±1 near-match protocol, then
drive the same flow through the command-line interface.

Run:  python demos/05_scoring_and_cli.py
"""

import tempfile
from pathlib import Path

import numpy as np

from lpikit.cli import main
from lpikit.corpus import OrdinalClass, encode_class
from lpikit.evaluation import (
    ReportFormat,
    prediction_from_text,
    render_report,
    score,
)

rng = np.random.default_rng(9)

# --- library-level scoring ---------------------------------------------------

truths = [(str(i), OrdinalClass(int(rng.integers(5)))) for i in range(200)]
predictions = []
for i, (_, truth) in enumerate(truths):
    roll = rng.random()
    if roll < 0.40:  # exact
        text = f"### Response: {encode_class(truth)}"
    elif roll < 0.75:  # off by one
        neighbor = OrdinalClass(min(4, truth.rank + 1) if truth.rank < 4 else 3)
        text = f"### Response: {encode_class(neighbor)}"
    elif roll < 0.9:  # far off
        text = f"### Response: {encode_class(OrdinalClass((truth.rank + 2) % 5))}"
    else:  # model rambled
        text = "### Response: the potency is unclear"
    predictions.append(prediction_from_text(str(i), text))

report = score(predictions, truths)
print(f"n={report.n}  exact={report.overall_exact:.2%}  near={report.overall_near:.2%}  "
      f"unparseable={report.unparseable_count}")
print(render_report(report, ReportFormat.TSV))

# --- the same via the CLI ----------------------------------------------------

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    pred_file = tmp / "preds.tsv"
    truth_file = tmp / "truth.tsv"
    pred_file.write_text("".join(f"{p.example_id}\t{p.raw_text}\n" for p in predictions))
    truth_file.write_text("".join(f"{i}\t{cls.label}\n" for i, cls in truths))
    out = tmp / "report.txt"
    code = main([
        "score", "--pred", str(pred_file), "--truth", str(truth_file),
        "--out", str(out), "--format", "structured-text",
    ])
    print(f"cli exit code: {code}")
    plot = tmp / "plot.tsv"
    main(["report", "--in", str(out), "--format", "plotdata", "--out", str(plot)])
    print("plotdata:")
    print(plot.read_text())
