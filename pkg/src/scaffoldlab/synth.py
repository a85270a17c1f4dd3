"""Synthetic playback documents for offline runs.

Builds, for one model label, a canned response for every call a run can make
on the given projects and processes. Responses are valid for the output
parsers, vary by model profile, and are seeded from stable hashes so the same
inputs always give byte-identical documents. Used for the shipped fixtures and
for tests; no network access is involved.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .agents.parsers import format_code_bundle
from .domain import Limits, PhaseKind, ProcessModel, ProjectSpec
from .engines import AGILE_BACKLOG_STEP, AGILE_SPRINT, VMODEL_SCHEDULE, WATERFALL_SCHEDULE

K_PLAN = "TestPlan"


@dataclass(frozen=True)
class ModelProfile:
    """How a synthetic model behaves: output size, test pessimism and speed."""

    label: str
    functions_per_feature: int = 2
    lines_per_function: tuple[int, int] = (4, 9)
    extra_files: int = 0
    fail_rate: float = 0.2
    latency_range: tuple[float, float] = (2.0, 12.0)
    # (project, process, role, phase) triples whose first answer is malformed
    malformed_first: frozenset = field(default_factory=frozenset)


def _rng(*parts) -> random.Random:
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _ident(text: str, n: int = 3) -> str:
    words = re.findall(r"[a-z0-9]+", text.lower())[:n]
    return "_".join(words) or "feature"


def features_of(project: ProjectSpec) -> list[str]:
    """Split a requirement text into short feature statements."""
    parts = re.split(r"(?<=[.;])\s+|\n+", project.requirement_text)
    out = [p.strip(" .;-") for p in parts if len(p.strip(" .;-")) > 3]
    return out or [project.requirement_text.strip()]


def tiers_of(project: ProjectSpec, n_tiers: int = 3) -> list[list[str]]:
    feats = features_of(project)
    n_tiers = max(1, min(n_tiers, len(feats)))
    tiers: list[list[str]] = [[] for _ in range(n_tiers)]
    for i, f in enumerate(feats):
        tiers[min(i * n_tiers // len(feats), n_tiers - 1)].append(f)
    return tiers


def _is_python(project: ProjectSpec) -> bool:
    return "python" in project.target_language_label.lower()


# --- document bodies -------------------------------------------------------

def prd_text(project: ProjectSpec, tiers: list[list[str]]) -> str:
    pool = [[f"P{i}", f] for i, tier in enumerate(tiers) for f in tier]
    doc = {
        "Language": "English",
        "Programming Language": project.target_language_label or "JavaScript",
        "Original Requirements": project.requirement_text,
        "Project Name": project.title,
        "Product Goals": [f"Deliver {f[0].lower() + f[1:]}" for f in (t[0] for t in tiers)],
        "User Stories": [f"As a user, I want {f[0].lower() + f[1:]} so that the app is useful"
                         for t in tiers for f in t[:1]],
        "Competitive Quadrant Chart": f"{project.title} targets casual users with a small footprint.",
        "Requirement Analysis": "All features are feasible in a single client application.",
        "Requirement Pool": pool,
        "UI Design draft": "A single screen with a header, the main view and a status bar.",
    }
    return json.dumps(doc, indent=2)


def design_text(project: ProjectSpec, feats: list[str]) -> str:
    classes = [_ident(f).title().replace("_", "") for f in feats]
    doc = {
        "architecture_description": f"{project.title} is split into a UI layer and a logic layer.",
        "class_diagram": "classDiagram\n" + "\n".join(f"  class {c}" for c in classes),
        "data_flow": "User input reaches the controller, which updates state and re-renders the view.",
        "ui_design": "Main view with controls for every feature.",
        "state_management": "A single state object owned by the controller.",
        "requirements_mapping": {f: c for f, c in zip(feats, classes)},
    }
    return json.dumps(doc, indent=2)


def test_cases_for(feats: list[str], prefix: str) -> list[dict]:
    return [
        {"name": f"{prefix}-{i:02d} {_ident(f, 4)}", "description": f"Check: {f}",
         "expected": "Behaves as specified"}
        for i, f in enumerate(feats, start=1)
    ]


def test_plan_text(feats: list[str], prefix: str, level: str) -> str:
    cases = test_cases_for(feats, prefix)
    doc = {
        "test_cases": cases,
        "requirements_coverage": {f: c["name"] for f, c in zip(feats, cases)},
        "pass_criteria": f"All {level} test cases pass.",
        "test_environment": "A current desktop browser or Python 3 interpreter.",
        "test_data": "Hand-made inputs per test case.",
    }
    return json.dumps(doc, indent=2)


def report_text(cases: list[dict], failed: set[str]) -> str:
    out = []
    for c in cases:
        fail = c["name"] in failed
        out.append({**c, "verdict": "Fail" if fail else "Pass",
                    "evidence": "Behaviour differs from the expectation." if fail else "Observed as expected."})
    return json.dumps({"test_cases": out}, indent=2)


def _function(lang: str, name: str, n_lines: int, rng: random.Random) -> list[str]:
    if lang == "python":
        body = [f"    value_{k} = {rng.randint(0, 99)} + len(state)" for k in range(n_lines - 1)]
        return [f"def {name}(state):"] + body + ["    return state", ""]
    body = [f"  const value{k} = {rng.randint(0, 99)} + state.length;" for k in range(n_lines - 1)]
    return [f"function {name}(state) {{"] + body + ["  return state;", "}", ""]


def code_files(project: ProjectSpec, feats: list[str], profile: ModelProfile, rng: random.Random,
               sprint: Optional[int] = None) -> dict[str, str]:
    lo, hi = profile.lines_per_function
    tag = f" (sprint {sprint})" if sprint else ""
    files: dict[str, str] = {}
    if _is_python(project):
        main = [f'"""{project.title}{tag}."""', "", "state = []", ""]
        for f in feats:
            for j in range(profile.functions_per_feature):
                main += _function("python", f"{_ident(f)}_{j}", rng.randint(lo, hi), rng)
        main += ["", 'if __name__ == "__main__":', "    print(len(state))"]
        files["main.py"] = "\n".join(main) + "\n"
        for e in range(profile.extra_files):
            files[f"helpers_{e + 1}.py"] = "\n".join(
                _function("python", f"helper_{e + 1}", rng.randint(lo, hi), rng)) + "\n"
        return files
    files["index.html"] = "\n".join([
        "<!DOCTYPE html>", "<html>", "<head>", f"  <title>{project.title}</title>",
        '  <link rel="stylesheet" href="style.css">', "</head>", "<body>",
        f'  <main id="app" data-build="{sprint or 0}"></main>', '  <script src="script.js"></script>',
        "</body>", "</html>",
    ]) + "\n"
    css = []
    for f in feats:
        css += [f".{_ident(f).replace('_', '-')} {{", f"  margin: {rng.randint(0, 16)}px;", "}", ""]
    files["style.css"] = "\n".join(css) + "\n"
    js = [f"// {project.title}{tag}", "const state = [];", ""]
    for f in feats:
        for j in range(profile.functions_per_feature):
            js += _function("js", f"{_ident(f)}_{j}", rng.randint(lo, hi), rng)
    files["script.js"] = "\n".join(js) + "\n"
    for e in range(profile.extra_files):
        files[f"js/helper{e + 1}.js"] = "\n".join(
            _function("js", f"helper{e + 1}", rng.randint(lo, hi), rng)) + "\n"
    return files


def _json_doc(**fields) -> str:
    return json.dumps(fields, indent=2)


# --- entry assembly --------------------------------------------------------

def _entry(project, process, role, phase, sprint, text, rng, profile, attempt=0) -> dict:
    lo, hi = profile.latency_range
    return {
        "project": project.id,
        "process": process.value,
        "role": role.value,
        "phase": phase.value,
        "sprint": sprint,
        "attempt": attempt,
        "text": text,
        "latency": round(rng.uniform(lo, hi), 3),
    }


def _pick_failures(cases: list[dict], rate: float, rng: random.Random, at_least_one: bool = False) -> set[str]:
    failed = {c["name"] for c in cases if rng.random() < rate}
    if at_least_one and not failed and cases:
        failed.add(rng.choice(cases)["name"])
    return failed


def _linear_entries(project, process, schedule, profile, n_tiers=3) -> list[dict]:
    rng = _rng(profile.label, project.id, process.value)
    tiers = tiers_of(project, n_tiers)
    feats = [f for t in tiers for f in t]
    out = []
    plans: dict[PhaseKind, list[dict]] = {}
    prefixes = {PhaseKind.UNIT_TESTING: "UT", PhaseKind.INTEGRATION_TESTING: "IT",
                PhaseKind.ACCEPTANCE_TESTING: "AT"}
    for step in schedule:
        role, phase = step.actor, step.phase
        kind = step.produces.value
        if kind == "RequirementDoc":
            text = prd_text(project, tiers)
        elif kind == "DesignDoc":
            text = design_text(project, feats)
        elif kind == "CodeBundle":
            text = "Here is the implementation.\n\n" + format_code_bundle(code_files(project, feats, profile, rng))
        elif kind == K_PLAN:
            target = step.validation_pair
            plans[target] = test_cases_for(feats, prefixes[target])
            text = test_plan_text(feats, prefixes[target], target.value)
        elif kind == "TestReport":
            cases = plans.get(phase) or test_cases_for(feats, prefixes[phase])
            text = report_text(cases, _pick_failures(cases, profile.fail_rate, rng))
        else:
            text = _json_doc(release_summary=f"{project.title} 1.0", files=["see workspace"],
                             run_instructions="Open the entry file.", known_issues=[], rollback="None needed.")
        out.extend(_with_repair(project, process, role, phase, None, text, rng, profile))
    return out


def _with_repair(project, process, role, phase, sprint, text, rng, profile) -> list[dict]:
    if (project.id, process.value, role.value, phase.value) in profile.malformed_first:
        broken = text[: max(1, len(text) // 2)] if text.lstrip().startswith("{") else "I will write the code next."
        return [_entry(project, process, role, phase, sprint, broken, rng, profile, attempt=0),
                _entry(project, process, role, phase, sprint, text, rng, profile, attempt=1)]
    return [_entry(project, process, role, phase, sprint, text, rng, profile)]


def _agile_entries(project, profile, limits: Limits, n_tiers=3) -> list[dict]:
    process = ProcessModel.AGILE
    rng = _rng(profile.label, project.id, process.value)
    tiers = tiers_of(project, n_tiers)
    out = _with_repair(project, process, AGILE_BACKLOG_STEP.actor, AGILE_BACKLOG_STEP.phase, 0,
                       prd_text(project, tiers), rng, profile)
    delivered: list[str] = []
    carried: list[dict] = []
    for sprint in range(1, limits.max_sprints + 1):
        scope = tiers[sprint - 1] if sprint <= len(tiers) else []
        delivered += scope
        last_sprint_of_backlog = sprint >= len(tiers)
        new_cases = test_cases_for(scope, f"S{sprint}")
        cases = carried + new_cases
        if sprint == 1:
            failed = _pick_failures(cases, max(profile.fail_rate, 0.3), rng, at_least_one=True)
        elif last_sprint_of_backlog and sprint == len(tiers):
            # short backlogs finish clean so the run can stop early
            failed = set() if len(tiers) < limits.max_sprints else _pick_failures(cases, profile.fail_rate, rng)
        else:
            failed = _pick_failures(new_cases, profile.fail_rate, rng)
        for step in AGILE_SPRINT:
            kind = step.produces.value
            if kind == "SprintPlan":
                text = _json_doc(
                    sprint_goal=f"Sprint {sprint}: " + (scope[0] if scope else "stabilise"),
                    selected_items=scope + [c["name"] for c in carried],
                    tasks=[f"Design {s}" for s in scope] + [f"Fix {c['name']}" for c in carried],
                    definition_of_done="All sprint test cases pass.",
                    context_notes="Only files touched by the selected items are relevant.",
                )
            elif kind == "DesignDoc":
                text = design_text(project, delivered or scope)
            elif kind == "CodeBundle":
                text = format_code_bundle(code_files(project, delivered, profile, rng, sprint))
            elif kind == "TestReport":
                text = report_text(cases, failed)
            else:
                text = _json_doc(release_summary=f"{project.title} sprint {sprint}", files=["see workspace"],
                                 run_instructions="Open the entry file.", known_issues=sorted(failed),
                                 rollback=f"Restore snapshot sprint-{sprint - 1}." if sprint > 1 else "None.")
            out.extend(_with_repair(project, process, step.actor, step.phase, sprint, text, rng, profile))
        carried = [c for c in cases if c["name"] in failed]
    return out


def synthesize(
    profile: ModelProfile,
    projects: Iterable[ProjectSpec],
    processes: Iterable[ProcessModel] = tuple(ProcessModel),
    limits: Limits = Limits(),
    short_backlog: Iterable[str] = (),
) -> dict:
    """Playback document covering every call of every (project, process) cell.

    Projects named in ``short_backlog`` get a two-tier requirement pool, so
    their Agile runs finish the backlog with a clean sprint and stop early.
    """
    short = set(short_backlog)
    entries = []
    for project in projects:
        n_tiers = 2 if project.id in short else 3
        for process in processes:
            if process is ProcessModel.WATERFALL:
                entries += _linear_entries(project, process, WATERFALL_SCHEDULE, profile, n_tiers)
            elif process is ProcessModel.VMODEL:
                entries += _linear_entries(project, process, VMODEL_SCHEDULE, profile, n_tiers)
            else:
                entries += _agile_entries(project, profile, limits, n_tiers)
    return {"model": profile.label, "entries": entries}


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


__all__ = ["ModelProfile", "synthesize", "dumps", "features_of", "tiers_of"]
