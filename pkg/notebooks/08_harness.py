"""
Experiments and the command line
================================

The harness runs the selection and optimization studies over the condition
suite. It writes CSV rows, a JSON report, and the resolved config. The same
runs are available as ``noiselab experiment select|optimize``.
"""

import tempfile
from pathlib import Path

from noiselab.cli import main
from noiselab.harness import ExperimentConfig, run_selection_experiment

cfg = ExperimentConfig({"conditions": ["bimodal_2d", "ring8_2d", "blobs4_16d"], "selection": {"K": 20}})
report = run_selection_experiment(cfg)
for s in report.summary:
    print(f"{s['condition']:<12} stable seed {s['stable_seed']:>2}  unstable seed {s['unstable_seed']:>2}  rho {s['spearman_rho']:+.3f}")
print(report.aggregates)

with tempfile.TemporaryDirectory() as tmp:
    report.write(tmp)
    print(sorted(p.name for p in Path(tmp).iterdir()))
    # the CLI drives the same code
    main(["select", "--condition", "bimodal_2d", "--k", "8", "--out", tmp])
