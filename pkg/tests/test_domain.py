import json

import pytest

from scaffoldlab.domain import (
    CostMetrics,
    Limits,
    Phase,
    PhaseKind,
    ProcessModel,
    ProjectSpec,
    QualityMetrics,
    RoleKind,
    RunConfig,
    RunRecord,
    SizeMetrics,
    builtin_projects,
    parse_process_model,
    roles_for,
    slugify,
    tokens_per_loc,
)
from scaffoldlab.errors import ConfigError, UnknownProcessModel


@pytest.mark.parametrize("name,expected", [
    ("agile", ProcessModel.AGILE),
    ("V-Model", ProcessModel.VMODEL),
    ("vmodel", ProcessModel.VMODEL),
    ("WATERFALL", ProcessModel.WATERFALL),
    (" Agile ", ProcessModel.AGILE),
])
def test_parse_process_model(name, expected):
    assert parse_process_model(name) is expected


@pytest.mark.parametrize("name", ["scrumfall", "", "v model", "spiral"])
def test_parse_process_model_rejects(name):
    with pytest.raises(UnknownProcessModel):
        parse_process_model(name)


def test_exactly_three_process_models():
    assert len(ProcessModel) == 3


def test_roles_for_orders():
    R = RoleKind
    assert roles_for(ProcessModel.WATERFALL) == [
        R.PROJECT_MANAGER, R.DESIGNER, R.DEVELOPER, R.UNIT_TEST_EXECUTOR,
        R.INTEGRATION_TEST_EXECUTOR, R.ACCEPTANCE_TEST_EXECUTOR, R.DEPLOYER]
    assert roles_for(ProcessModel.AGILE) == [
        R.PROJECT_MANAGER, R.SPRINT_MANAGER, R.DESIGNER, R.DEVELOPER, R.TESTER, R.DEPLOYER]
    assert roles_for(ProcessModel.VMODEL) == [
        R.PROJECT_MANAGER, R.DESIGNER, R.DEVELOPER, R.UNIT_TEST_EXECUTOR,
        R.INTEGRATION_TEST_EXECUTOR, R.ACCEPTANCE_TEST_EXECUTOR]


def test_role_set_properties():
    agile = roles_for(ProcessModel.AGILE)
    assert RoleKind.SPRINT_MANAGER in agile
    assert not {RoleKind.UNIT_TEST_EXECUTOR, RoleKind.INTEGRATION_TEST_EXECUTOR,
                RoleKind.ACCEPTANCE_TEST_EXECUTOR} & set(agile)
    assert RoleKind.DEPLOYER not in roles_for(ProcessModel.VMODEL)
    for p in ProcessModel:
        roles = roles_for(p)
        assert roles == roles_for(p)
        assert len(roles) == len(set(roles))
        if p is not ProcessModel.AGILE:
            assert RoleKind.SPRINT_MANAGER not in roles
    used = set().union(*(roles_for(p) for p in ProcessModel))
    assert used == set(RoleKind)


def test_phase_sprint_index_must_be_non_negative():
    with pytest.raises(ValueError):
        Phase(PhaseKind.DESIGN, -1)
    p = Phase(PhaseKind.DESIGN, 2)
    assert Phase.from_dict(p.to_dict()) == p


def test_builtin_corpus_has_eleven_projects():
    corpus = builtin_projects()
    assert len(corpus) == 11
    labels = {p.target_language_label for p in corpus.values()}
    assert labels == {"JavaScript", "Python"}
    assert all(p.requirement_text.strip() for p in corpus.values())


def test_project_spec_validation():
    with pytest.raises(ConfigError):
        ProjectSpec("Bad Id", "t", "req")
    with pytest.raises(ConfigError):
        ProjectSpec("ok", "t", "   ")


def test_limits_defaults_and_validation():
    assert Limits() == Limits(3, 1, 24000)
    with pytest.raises(ConfigError):
        Limits(max_sprints=0)
    with pytest.raises(ConfigError):
        Limits.from_dict({"max_sprintz": 2})
    assert Limits.from_dict({"max_sprints": "2"}).max_sprints == 2


def test_tokens_per_loc():
    assert tokens_per_loc(100, 0) is None
    assert tokens_per_loc(1000, 8) == 125.0


def test_quality_ranges():
    with pytest.raises(ValueError):
        QualityMetrics(ai_bug_rate=1.5)
    with pytest.raises(ValueError):
        QualityMetrics(code_smells=-1)


def test_run_record_round_trip(snake):
    cfg = RunConfig(snake, ProcessModel.AGILE, "gpt-4o mini", seed=7)
    assert cfg.run_id == "snake-game/agile/gpt-4o-mini"
    rec = RunRecord(cfg, "Completed", SizeMetrics(3, 90, 10.0, 8), CostMetrics(900, 12.5),
                    QualityMetrics(ai_bug_rate=0.25))
    again = RunRecord.from_dict(json.loads(rec.dumps()))
    assert again == rec
    assert again.dumps() == rec.dumps()


def test_slugify():
    assert slugify("DeepSeek/Chat v2") == "DeepSeek-Chat-v2"
    assert slugify("..") == "model"
