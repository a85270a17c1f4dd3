"""Turn raw model output into structured documents, code bundles and test reports."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from ..errors import EmptyReport, MalformedDoc, NoCodeBlocks

# --- structured documents ----------------------------------------------------

_FENCE_OPEN = re.compile(r"^\s*(`{3,}|~{3,})\s*([\w+#.-]*)[^\n]*$")


def strip_fence(text: str) -> str:
    """Remove one code fence wrapped around the whole payload, if present."""
    s = text.strip()
    lines = s.split("\n")
    if len(lines) >= 2:
        m = _FENCE_OPEN.match(lines[0])
        if m and lines[-1].strip().startswith(m.group(1)[0] * 3):
            return "\n".join(lines[1:-1]).strip()
    return s


def parse_structured_doc(text: str) -> dict[str, Any]:
    payload = strip_fence(text)
    try:
        doc = json.loads(payload)
    except json.JSONDecodeError as exc:
        raise MalformedDoc(exc.pos, exc.msg) from exc
    if not isinstance(doc, dict):
        raise MalformedDoc(0, f"expected a JSON object, got {type(doc).__name__}")
    return doc


# --- code bundles ------------------------------------------------------------

DEFAULT_NAMES = {
    "html": "index.html",
    "css": "style.css",
    "js": "script.js",
    "javascript": "script.js",
    "python": "main.py",
    "py": "main.py",
}

_HEADER_PATTERNS = [
    re.compile(r"^<!--\s*(.+?)\s*-->$"),
    re.compile(r"^/\*\s*(.+?)\s*\*/$"),
    re.compile(r"^//\s*(.+?)$"),
    re.compile(r"^#\s*(.+?)$"),
]
_FILE_PREFIX = re.compile(r"^(?:file(?:name)?|path)\s*:\s*", re.IGNORECASE)
_PATHLIKE = re.compile(r"^[\w.\-/\\:]+\.[A-Za-z0-9]+$")
# top-level names the workspace keeps for itself
RESERVED_TOP = frozenset({".history"})


def safe_relpath(raw: str) -> str | None:
    """Normalise a model-supplied path to a safe relative POSIX path.

    Drive letters, leading slashes and ``.``/``..`` segments are dropped.
    Returns None when nothing usable remains.
    """
    parts = []
    for seg in raw.replace("\\", "/").split("/"):
        seg = seg.strip()
        if seg in ("", ".", ".."):
            continue
        if re.fullmatch(r"[A-Za-z]:", seg):
            continue
        if ":" in seg or "\x00" in seg:
            return None
        parts.append(seg)
    if not parts or parts[0] in RESERVED_TOP:
        return None
    return "/".join(parts)


def _header_path(line: str) -> str | None:
    s = line.strip()
    for pat in _HEADER_PATTERNS:
        m = pat.match(s)
        if m:
            candidate = _FILE_PREFIX.sub("", m.group(1).strip())
            if _PATHLIKE.match(candidate):
                return candidate
            return None
    return None


@dataclass
class CodeBundle:
    files: dict[str, str] = field(default_factory=dict)
    replaced: int = 0  # later duplicate blocks that overwrote an earlier path

    def items(self) -> list[tuple[str, str]]:
        return list(self.files.items())

    def __len__(self) -> int:
        return len(self.files)


def _extract_blocks(text: str) -> list[tuple[str, list[str]]]:
    blocks = []
    lines = text.split("\n")
    i = 0
    while i < len(lines):
        m = _FENCE_OPEN.match(lines[i])
        if not m:
            i += 1
            continue
        fence, lang = m.group(1), m.group(2).lower()
        body = []
        i += 1
        while i < len(lines):
            s = lines[i].strip()
            if s.startswith(fence[0] * len(fence)) and s.strip(fence[0]) == "":
                break
            body.append(lines[i])
            i += 1
        blocks.append((lang, body))  # an unclosed final fence runs to end of text
        i += 1
    return blocks


def parse_code_bundle(text: str) -> CodeBundle:
    blocks = _extract_blocks(text)
    if not blocks:
        raise NoCodeBlocks("output contains no fenced code blocks")
    bundle = CodeBundle()
    for ordinal, (lang, body) in enumerate(blocks, start=1):
        path = None
        first = next((k for k, ln in enumerate(body) if ln.strip()), None)
        if first is not None:
            header = _header_path(body[first])
            if header is not None:
                path = safe_relpath(header)
                body = body[first + 1:]
        if path is None:
            path = DEFAULT_NAMES.get(lang, f"file_{ordinal}.txt")
        content = "".join(ln + "\n" for ln in body)
        if path in bundle.files:
            bundle.replaced += 1
        bundle.files[path] = content
    return bundle


_COMMENT_STYLE = {
    ".html": ("<!-- ", " -->"),
    ".htm": ("<!-- ", " -->"),
    ".xml": ("<!-- ", " -->"),
    ".md": ("<!-- ", " -->"),
    ".css": ("/* ", " */"),
    ".js": ("// ", ""),
    ".ts": ("// ", ""),
    ".java": ("// ", ""),
    ".c": ("// ", ""),
}
_FENCE_LANG = {".html": "html", ".css": "css", ".js": "javascript", ".py": "python", ".json": "json"}


def format_code_bundle(files) -> str:
    """Render (path, content) pairs back into headed fenced blocks."""
    items = files.items() if hasattr(files, "items") else files
    out = []
    for path, content in items:
        ext = "." + path.rsplit(".", 1)[-1].lower() if "." in path else ""
        open_, close = _COMMENT_STYLE.get(ext, ("# ", ""))
        body = content if content.endswith("\n") or not content else content + "\n"
        out.append(f"```{_FENCE_LANG.get(ext, '')}\n{open_}{path}{close}\n{body}```\n")
    return "\n".join(out)


# --- test reports ------------------------------------------------------------

class Verdict(str, Enum):
    PASS = "Pass"
    FAIL = "Fail"


_VERDICTS = {
    "pass": Verdict.PASS, "passed": Verdict.PASS, "ok": Verdict.PASS, "success": Verdict.PASS,
    "fail": Verdict.FAIL, "failed": Verdict.FAIL, "failure": Verdict.FAIL, "error": Verdict.FAIL,
}
_CASE_KEYS = ("test_cases", "cases", "results", "tests")
_LINE_CASE = re.compile(r"^\s*(?:[-*]\s*)?\[?(PASS(?:ED)?|FAIL(?:ED)?)\]?\s*[:\-]?\s*(.+?)\s*$", re.IGNORECASE)


@dataclass(frozen=True)
class TestCase:
    __test__ = False  # not a pytest class

    name: str
    verdict: Verdict


@dataclass(frozen=True)
class TestReport:
    __test__ = False

    cases: tuple[TestCase, ...]

    @property
    def total(self) -> int:
        return len(self.cases)

    @property
    def failed(self) -> int:
        return sum(1 for c in self.cases if c.verdict is Verdict.FAIL)

    @property
    def failed_names(self) -> list[str]:
        return [c.name for c in self.cases if c.verdict is Verdict.FAIL]

    @property
    def failure_ratio(self) -> float:
        return self.failed / self.total

    @property
    def all_pass(self) -> bool:
        return self.failed == 0


def parse_verdict(raw) -> Verdict:
    if isinstance(raw, bool):
        return Verdict.PASS if raw else Verdict.FAIL
    v = _VERDICTS.get(str(raw).strip().lower())
    if v is None:
        raise MalformedDoc(0, f"unknown verdict {raw!r}")
    return v


def _cases_from_doc(doc) -> list[TestCase]:
    items = None
    if isinstance(doc, list):
        items = doc
    else:
        for k in _CASE_KEYS:
            if isinstance(doc.get(k), list):
                items = doc[k]
                break
    if items is None:
        raise MalformedDoc(0, "no test case list found")
    cases = []
    for n, item in enumerate(items, start=1):
        if not isinstance(item, dict):
            raise MalformedDoc(0, f"test case {n} is not an object")
        name = item.get("name") or item.get("id") or item.get("title") or f"case_{n}"
        raw = next((item[k] for k in ("verdict", "status", "result", "passed") if k in item), None)
        if raw is None:
            raise MalformedDoc(0, f"test case {name!r} has no verdict")
        cases.append(TestCase(str(name), parse_verdict(raw)))
    return cases


def parse_test_report(text: str) -> TestReport:
    """Parse a tester's verdict list.

    Accepts a JSON object with a ``test_cases`` list (or a bare list) of
    ``{name, verdict}`` items, or plain lines such as ``- [FAIL] name``.
    """
    payload = strip_fence(text)
    if payload[:1] in ("{", "["):
        try:
            doc = json.loads(payload)
        except json.JSONDecodeError as exc:
            raise MalformedDoc(exc.pos, exc.msg) from exc
        cases = _cases_from_doc(doc)
    else:
        cases = []
        for line in payload.splitlines():
            m = _LINE_CASE.match(line)
            if m:
                cases.append(TestCase(m.group(2), parse_verdict(m.group(1))))
        if not cases and payload:
            raise MalformedDoc(0, "no verdict lines found")
    if not cases:
        raise EmptyReport("test report contains no test cases")
    return TestReport(tuple(cases))


def ai_bug_rate(reports) -> float | None:
    """Failed cases over total cases across every report; None without cases."""
    total = sum(r.total for r in reports)
    if total == 0:
        return None
    return sum(r.failed for r in reports) / total
