"""
The staged study pipeline
=========================

generate -> fit -> evaluate -> report, exactly what the command line
runs. A reduced design keeps this demo under a minute; drop the
overrides to reproduce the full reference study.

The same run is available from a shell as:

    grmsim run --config demo_config.json --out demo-run
"""

import json
import tempfile
from pathlib import Path

from grmsim.pipeline import load_config, run_pipeline

workdir = Path(tempfile.mkdtemp(prefix="grmsim-demo-"))
config_path = workdir / "config.json"
config_path.write_text(json.dumps({
    "seed": 1234,
    "test_lengths": [20],
    "rhos": [0.3, 0.7],
    "n_persons": 500,
    "n_reps": 2,
}, indent=2))

cfg = load_config(config_path, out_dir=workdir / "run", threads=1)
run_pipeline(cfg)

print("artifacts under", cfg.out_dir)
for path in sorted(cfg.out_dir.rglob("*")):
    if path.is_file():
        print(" ", path.relative_to(cfg.out_dir))

print("\nresults.csv:")
print((cfg.out_dir / "results.csv").read_text())

manifest = json.loads((cfg.out_dir / "manifest.json").read_text())
fits = manifest["stages"]["fit"]
print(f"fits: {fits['n_fits']} total, {fits['n_failed']} failed")
