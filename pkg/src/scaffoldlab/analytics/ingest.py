"""Ingest externally produced quality data into run records.

Two document shapes are accepted:

* issues: ``{"run_id": ..., "issues": [{"path", "rule_id", "severity"}]}``
  where severity is ``Smell`` or ``Vulnerability`` (any static analyser export
  can be converted to this).
* manual: ``{"run_id": ..., "tester_label": ..., "cases": [{"name", "verdict"}]}``
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from ..agents.parsers import TestCase, Verdict, parse_verdict
from ..domain import RunRecord
from ..errors import MalformedDoc, MalformedFile


class Severity(str, Enum):
    SMELL = "Smell"
    VULNERABILITY = "Vulnerability"


@dataclass(frozen=True)
class Issue:
    path: str
    rule_id: str
    severity: Severity


@dataclass(frozen=True)
class IssueReport:
    run_id: str
    issues: tuple[Issue, ...]

    @property
    def code_smells(self) -> int:
        return sum(1 for i in self.issues if i.severity is Severity.SMELL)

    @property
    def vulnerabilities(self) -> int:
        return sum(1 for i in self.issues if i.severity is Severity.VULNERABILITY)


@dataclass(frozen=True)
class ManualTestSession:
    run_id: str
    tester_label: str
    cases: tuple[TestCase, ...]

    @property
    def human_bug_rate(self) -> float:
        return sum(1 for c in self.cases if c.verdict is Verdict.FAIL) / len(self.cases)


def _load(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedFile(f"{path}: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("run_id"), str):
        raise MalformedFile(f"{path}: expected an object with a string run_id")
    return doc


def parse_issue_report(doc: dict) -> IssueReport:
    try:
        issues = tuple(
            Issue(str(i["path"]), str(i["rule_id"]), Severity(str(i["severity"]).capitalize()))
            for i in doc["issues"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedFile(f"bad issues document: {exc!r}") from exc
    return IssueReport(doc["run_id"], issues)


def parse_manual_session(doc: dict) -> ManualTestSession:
    try:
        cases = tuple(TestCase(str(c["name"]), parse_verdict(c["verdict"])) for c in doc["cases"])
    except (KeyError, TypeError, MalformedDoc) as exc:
        raise MalformedFile(f"bad manual session document: {exc!r}") from exc
    if not cases:
        raise MalformedFile("manual session has no test cases")
    return ManualTestSession(doc["run_id"], str(doc.get("tester_label", "")), cases)


def load_issue_report(path: str | Path) -> IssueReport:
    return parse_issue_report(_load(path))


def load_manual_session(path: str | Path) -> ManualTestSession:
    return parse_manual_session(_load(path))


def apply_issues(record: RunRecord, report: IssueReport) -> RunRecord:
    quality = dataclasses.replace(
        record.quality, code_smells=report.code_smells, vulnerabilities=report.vulnerabilities
    )
    return dataclasses.replace(record, quality=quality)


def apply_manual(record: RunRecord, session: ManualTestSession) -> RunRecord:
    quality = dataclasses.replace(record.quality, human_bug_rate=session.human_bug_rate)
    return dataclasses.replace(record, quality=quality)
