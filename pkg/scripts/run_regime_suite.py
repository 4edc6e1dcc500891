"""Run the standard regime experiments and print the consolidated report.

    python scripts/run_regime_suite.py OUTPUT_DIR [--threads 4] [--replicates 500]

Each experiment leaves ``<name>.results.csv``, ``<name>.regime.json`` and
``<name>.plot.dat`` in OUTPUT_DIR; the experiment definitions are written
alongside as ``<name>.experiment.json`` so any single run can be repeated with
``hermrank regime``.
"""
import argparse
import json
import sys
from pathlib import Path

from hermrank.cli import main as cli_main

HE2 = {"base": {"kind": "hermite", "params": [0, 0, 1]}}
Z = {"base": {"kind": "poly", "params": [0, 1]}}
Z2M1 = {"base": {"kind": "poly", "params": [-1, 0, 1]}}


def power_law(c, beta):
    return {"kind": "power_law", "c": c, "beta": beta}


SUITE = [
    {"name": "he2_H0.8", "spec": HE2, "hurst": 0.8},
    {"name": "he2_H0.6", "spec": HE2, "hurst": 0.6},
    {"name": "z_H0.7", "spec": Z, "hurst": 0.7, "tolerance": 0.03},
    *({"name": f"centered_beta{b}", "spec": Z2M1, "hurst": 0.8, "schedule": power_law(1.0, b)}
      for b in (0.05, 0.1, 0.2, 0.3, 0.35)),
    {"name": "drift_beta0.1", "spec": Z2M1, "hurst": 0.8, "schedule": power_law(4.0, 0.1), "centered": False},
    {"name": "meancentered_H0.8", "spec": Z2M1, "hurst": 0.8, "schedule": {"kind": "sample_mean"}},
    {"name": "meancentered_H0.6", "spec": Z2M1, "hurst": 0.6, "schedule": {"kind": "sample_mean"}},
]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("output_dir")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--replicates", type=int, default=500)
    args = p.parse_args(argv)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for exp in SUITE:
        exp = {**exp, "replicates": args.replicates}
        path = out / f"{exp['name']}.experiment.json"
        path.write_text(json.dumps(exp, indent=2) + "\n")
        code = cli_main(["regime", str(path), "--output-dir", str(out), "--threads", str(args.threads)])
        if code:
            return code
    return cli_main(["report", str(out)])


if __name__ == "__main__":
    sys.exit(main())
