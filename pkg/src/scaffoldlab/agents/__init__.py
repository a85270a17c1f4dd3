"""Role agents: prompt templates, model calls and output parsers."""

from .agent import AgentOutput, RoleAgent, make_agents
from .parsers import (
    CodeBundle,
    TestCase,
    TestReport,
    Verdict,
    ai_bug_rate,
    format_code_bundle,
    parse_code_bundle,
    parse_structured_doc,
    parse_test_report,
    safe_relpath,
)
from .templates import PromptTemplate, load_template, render

__all__ = [
    "AgentOutput", "RoleAgent", "make_agents",
    "CodeBundle", "TestCase", "TestReport", "Verdict", "ai_bug_rate",
    "format_code_bundle", "parse_code_bundle", "parse_structured_doc",
    "parse_test_report", "safe_relpath",
    "PromptTemplate", "load_template", "render",
]
