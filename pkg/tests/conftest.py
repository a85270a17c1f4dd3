from __future__ import annotations

import sys
from pathlib import Path

import pytest

from scaffoldlab.domain import Limits, ProcessModel, RunConfig, builtin_projects
from scaffoldlab.gateway import PlaybackBackend
from scaffoldlab.synth import ModelProfile, synthesize

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"


@pytest.fixture(scope="session")
def projects():
    return builtin_projects()


@pytest.fixture
def snake(projects):
    return projects["snake-game"]


def playback_for(project, process=None, profile=None, limits=Limits(), short_backlog=(), drop=None, replace=None):
    """A playback backend for one project, optionally with entries removed or swapped.

    ``drop`` and ``replace`` match entries on (role, phase, sprint, attempt);
    ``replace`` maps such a tuple to new response text.
    """
    profile = profile or ModelProfile("mock-a")
    processes = (process,) if process else tuple(ProcessModel)
    doc = synthesize(profile, [project], processes, limits, short_backlog)
    entries = []
    for e in doc["entries"]:
        key = (e["role"], e["phase"], e["sprint"], e["attempt"])
        if drop and key in drop:
            continue
        if replace and key in replace:
            e = {**e, "text": replace[key]}
        entries.append(e)
    return PlaybackBackend.from_entries(entries, profile.label)


def config(project, process, limits=Limits(), model="mock-a", seed=0):
    return RunConfig(project, process, model, seed=seed, limits=limits)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split()[0])):
            terminalreporter.write_line(line)
