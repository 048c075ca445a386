"""Run an experiment plan and write results.csv and summary.json.

    python scripts/run_plan.py scripts/plans/reproduce.json --out runs/reproduce --jobs 4
"""
import argparse
import json
from pathlib import Path

from nswlb import experiment

p = argparse.ArgumentParser()
p.add_argument("plan")
p.add_argument("--out", default="runs/latest")
p.add_argument("--jobs", type=int, default=1)
p.add_argument("--seed", type=int)
args = p.parse_args()

plan = experiment.Plan.from_dict(json.loads(Path(args.plan).read_text()))
if args.seed is not None:
    plan.seed = args.seed
rows = experiment.run_plan(plan, args.jobs)
out = Path(args.out)
out.mkdir(parents=True, exist_ok=True)
(out / "results.csv").write_text(experiment.to_csv(rows))
summ = experiment.summary(rows)
(out / "summary.json").write_text(json.dumps(summ, indent=2) + "\n")

for r in rows:
    if not r["pass"]:
        print(f"fail: {r['family']} {r['params']} measured={r['measured_ratio']:.12g}")
print(f"{summ['rows']} rows, {summ['failed']} failed -> {out}")
