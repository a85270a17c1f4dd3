#!/usr/bin/env python3
"""Regenerate the shipped playback fixtures, quality inputs and golden outputs.

    python3 scripts/make_fixtures.py [--fixtures DIR]

Everything is derived from fixed seeds, so rerunning leaves the tree unchanged
unless the engines or the synthesizer changed.
"""

from __future__ import annotations

import argparse
import json
import random
import shutil
import tempfile
from pathlib import Path

from scaffoldlab import harness
from scaffoldlab.domain import ProcessModel, builtin_projects
from scaffoldlab.synth import ModelProfile, dumps, synthesize

PROJECTS = ("snake-game", "tetris-game")
SHORT_BACKLOG = ("tetris-game",)
PROFILES = (
    ModelProfile("mock-a", malformed_first=frozenset({("snake-game", "waterfall", "Designer", "Design")})),
    ModelProfile("mock-b", functions_per_feature=3, lines_per_function=(5, 12), extra_files=1,
                 fail_rate=0.35, latency_range=(5.0, 25.0)),
)
# manual failure propensity per process, for the synthetic tester sessions
MANUAL_FAIL = {"waterfall": 0.4, "vmodel": 0.7, "agile": 0.3}

CONFIG = """\
# 2 projects x 3 processes x 2 playback models = 12 cells
projects: [snake-game, tetris-game]
processes: [waterfall, vmodel, agile]
models:
  - label: mock-a
    backend: {type: playback, file: playback/mock-a.json}
  - label: mock-b
    backend: {type: playback, file: playback/mock-b.json}
limits:
  max_sprints: 3
  max_repair_attempts: 1
  max_context_chars: 24000
parallelism: 4
output_dir: runs
seed: 0
"""


def _write_json(path: Path, doc):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def quality_inputs(fx: Path, cells):
    for c in cells:
        stem = c.run_id.replace("/", "__")
        rng = random.Random(stem)
        issues = [{"path": "script.js", "rule_id": f"smell-{n}", "severity": "Smell"}
                  for n in range(rng.randint(0, 12))]
        issues += [{"path": "index.html", "rule_id": f"vuln-{n}", "severity": "Vulnerability"}
                   for n in range(rng.randint(0, 3))]
        _write_json(fx / "quality" / "issues" / f"{stem}.json", {"run_id": c.run_id, "issues": issues})
        p = MANUAL_FAIL[c.process.value]
        cases = [{"name": f"manual-{n:02d}", "verdict": "Fail" if rng.random() < p else "Pass"}
                 for n in range(1, 11)]
        _write_json(fx / "quality" / "manual" / f"{stem}.json",
                    {"run_id": c.run_id, "tester_label": "tester-1", "cases": cases})


def golden(fx: Path):
    cfg = harness.load_config(fx / "experiment.yaml")
    with tempfile.TemporaryDirectory() as tmp:
        cfg.output_dir = Path(tmp) / "runs"
        harness.run_matrix(cfg)
        runs = harness.digest_tree(cfg.output_dir)
        for kind in ("issues", "manual"):
            for f in sorted((fx / "quality" / kind).glob("*.json")):
                harness.ingest(kind, f, cfg.output_dir)
        out = fx / "golden" / "report"
        if out.exists():
            shutil.rmtree(out)
        harness.report(cfg.output_dir, out)
        records = {r.run_id: json.loads(r.dumps()) for r in harness.load_records(cfg.output_dir)}
    _write_json(fx / "golden" / "runs.sha256.json", runs)
    _write_json(fx / "golden" / "records.json", records)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--fixtures", default=str(Path(__file__).resolve().parent.parent / "fixtures"))
    args = ap.parse_args(argv)
    fx = Path(args.fixtures)
    projects = [builtin_projects()[p] for p in PROJECTS]
    (fx / "playback").mkdir(parents=True, exist_ok=True)
    for prof in PROFILES:
        doc = synthesize(prof, projects, tuple(ProcessModel), short_backlog=SHORT_BACKLOG)
        (fx / "playback" / f"{prof.label}.json").write_text(dumps(doc), encoding="utf-8")
    (fx / "experiment.yaml").write_text(CONFIG, encoding="utf-8")
    cfg = harness.load_config(fx / "experiment.yaml")
    quality_inputs(fx, cfg.cells())
    golden(fx)
    print(f"fixtures written to {fx}")


if __name__ == "__main__":
    main()
