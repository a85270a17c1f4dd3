import pytest
from hypothesis import given
from hypothesis import strategies as st

from scaffoldlab.agents.templates import (
    PLACEHOLDERS,
    TRUNCATION_MARKER,
    PromptTemplate,
    available_templates,
    load_template,
    render,
    template_name,
)
from scaffoldlab.domain import PhaseKind, ProcessModel, RoleKind
from scaffoldlab.engines import schedule_for
from scaffoldlab.errors import ContextOverflow, MissingBinding, UnknownPlaceholder


def test_substitution():
    assert render("Design {project_name}", {"project_name": "Tetris"}) == "Design Tetris"


def test_escapes():
    assert render('{{"a": {prd}}}', {"prd": "1"}) == '{"a": 1}'


def test_missing_binding():
    with pytest.raises(MissingBinding) as exc:
        render("Use {prd}", {})
    assert exc.value.args[0] == "prd"


@pytest.mark.parametrize("body", ["{unknown}", "{prd!r}", "{prd:>10}", "{", "}x"])
def test_rejects_bad_placeholders(body):
    with pytest.raises(UnknownPlaceholder):
        PromptTemplate(RoleKind.DESIGNER, ProcessModel.WATERFALL, PhaseKind.DESIGN, body)


def test_truncates_oldest_prior_artifacts():
    body = "Context for {project_name}:\n{prior_artifacts}\nEnd."
    prior = [f"artifact-{i} " + "x" * 200 for i in range(50)]
    out = render(body, {"project_name": "P", "prior_artifacts": prior}, max_context_chars=2000)
    assert len(out) <= 2000
    assert TRUNCATION_MARKER in out
    assert "artifact-49" in out and "artifact-0 " not in out
    assert out.endswith("End.")


def test_untouched_when_within_cap():
    out = render("{prior_artifacts}", {"prior_artifacts": ["a", "b"]}, max_context_chars=100)
    assert out == "a\n\nb"


def test_overflow_without_prior_artifacts():
    with pytest.raises(ContextOverflow):
        render("{prd}", {"prd": "x" * 500}, max_context_chars=100)


@given(st.lists(st.text(max_size=300), max_size=20), st.integers(60, 3000))
def test_cap_property(prior, cap):
    body = "Head {project_name}\n{prior_artifacts}\nTail"
    out = render(body, {"project_name": "X", "prior_artifacts": prior}, max_context_chars=cap)
    assert len(out) <= cap
    assert out == render(body, {"project_name": "X", "prior_artifacts": prior}, max_context_chars=cap)


@pytest.mark.parametrize("process", list(ProcessModel))
def test_shipped_templates_cover_schedule(process):
    expected = sorted({template_name(s.actor, s.phase) for s in schedule_for(process)})
    assert available_templates(process) == expected
    for s in schedule_for(process):
        t = load_template(process, s.actor, s.phase)
        assert t.placeholders <= PLACEHOLDERS
        assert "project_name" in t.placeholders


def test_sprint_manager_template_sees_sprint_context():
    t = load_template(ProcessModel.AGILE, RoleKind.SPRINT_MANAGER, PhaseKind.SPRINT_PLANNING)
    assert {"sprint_context", "prior_artifacts", "prd"} <= t.placeholders
