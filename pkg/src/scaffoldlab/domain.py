"""Core vocabulary: process models, roles, phases, run identity and metric records."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any, Optional

from .errors import ConfigError, UnknownProcessModel


class ProcessModel(str, Enum):
    WATERFALL = "waterfall"
    VMODEL = "vmodel"
    AGILE = "agile"

    def __str__(self) -> str:
        return self.value


class RoleKind(str, Enum):
    PROJECT_MANAGER = "ProjectManager"
    DESIGNER = "Designer"
    DEVELOPER = "Developer"
    TESTER = "Tester"
    DEPLOYER = "Deployer"
    SPRINT_MANAGER = "SprintManager"
    UNIT_TEST_EXECUTOR = "UnitTestExecutor"
    INTEGRATION_TEST_EXECUTOR = "IntegrationTestExecutor"
    ACCEPTANCE_TEST_EXECUTOR = "AcceptanceTestExecutor"

    def __str__(self) -> str:
        return self.value


class PhaseKind(str, Enum):
    REQUIREMENTS = "Requirements"
    DESIGN = "Design"
    IMPLEMENTATION = "Implementation"
    UNIT_TESTING = "UnitTesting"
    INTEGRATION_TESTING = "IntegrationTesting"
    ACCEPTANCE_TESTING = "AcceptanceTesting"
    TESTING = "Testing"
    DEPLOYMENT = "Deployment"
    SPRINT_PLANNING = "SprintPlanning"
    SPRINT_REVIEW = "SprintReview"

    def __str__(self) -> str:
        return self.value


class MessageKind(str, Enum):
    REQUIREMENT_DOC = "RequirementDoc"
    DESIGN_DOC = "DesignDoc"
    TEST_PLAN = "TestPlan"
    CODE_BUNDLE = "CodeBundle"
    TEST_REPORT = "TestReport"
    DEPLOYMENT_NOTE = "DeploymentNote"
    SPRINT_PLAN = "SprintPlan"
    SPRINT_RETRO = "SprintRetro"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, order=True)
class Phase:
    kind: PhaseKind
    sprint_index: Optional[int] = None

    def __post_init__(self):
        if self.sprint_index is not None and self.sprint_index < 0:
            raise ValueError("sprint_index must be non-negative")

    def __str__(self) -> str:
        if self.sprint_index is None:
            return self.kind.value
        return f"{self.kind.value}[{self.sprint_index}]"

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "sprint_index": self.sprint_index}

    @classmethod
    def from_dict(cls, d: dict) -> "Phase":
        return cls(PhaseKind(d["kind"]), d.get("sprint_index"))


_PROCESS_ALIASES = {
    "waterfall": ProcessModel.WATERFALL,
    "vmodel": ProcessModel.VMODEL,
    "v-model": ProcessModel.VMODEL,
    "agile": ProcessModel.AGILE,
}


def parse_process_model(name: str) -> ProcessModel:
    if isinstance(name, ProcessModel):
        return name
    key = str(name).strip().lower()
    try:
        return _PROCESS_ALIASES[key]
    except KeyError:
        raise UnknownProcessModel(name) from None


_ROLES = {
    ProcessModel.WATERFALL: (
        RoleKind.PROJECT_MANAGER,
        RoleKind.DESIGNER,
        RoleKind.DEVELOPER,
        RoleKind.UNIT_TEST_EXECUTOR,
        RoleKind.INTEGRATION_TEST_EXECUTOR,
        RoleKind.ACCEPTANCE_TEST_EXECUTOR,
        RoleKind.DEPLOYER,
    ),
    ProcessModel.AGILE: (
        RoleKind.PROJECT_MANAGER,
        RoleKind.SPRINT_MANAGER,
        RoleKind.DESIGNER,
        RoleKind.DEVELOPER,
        RoleKind.TESTER,
        RoleKind.DEPLOYER,
    ),
    ProcessModel.VMODEL: (
        RoleKind.PROJECT_MANAGER,
        RoleKind.DESIGNER,
        RoleKind.DEVELOPER,
        RoleKind.UNIT_TEST_EXECUTOR,
        RoleKind.INTEGRATION_TEST_EXECUTOR,
        RoleKind.ACCEPTANCE_TEST_EXECUTOR,
    ),
}


def roles_for(process: ProcessModel) -> list[RoleKind]:
    """Roles taking part in a run of ``process``, in activation order."""
    return list(_ROLES[parse_process_model(process)])


# --- projects and run configuration ---------------------------------------

_SLUG_RE = re.compile(r"^[a-z0-9][a-z0-9-]*$")


@dataclass(frozen=True)
class ProjectSpec:
    id: str
    title: str
    requirement_text: str
    target_language_label: str = ""

    def __post_init__(self):
        if not _SLUG_RE.match(self.id):
            raise ConfigError(f"project id must be a short slug, got {self.id!r}")
        if not self.requirement_text.strip():
            raise ConfigError(f"project {self.id}: requirement_text is empty")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "title": self.title,
            "requirement_text": self.requirement_text,
            "target_language_label": self.target_language_label,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProjectSpec":
        try:
            return cls(
                id=d["id"],
                title=d["title"],
                requirement_text=d["requirement_text"],
                target_language_label=d.get("target_language_label", ""),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad project document: {exc}") from exc


def load_project(path: str | Path) -> ProjectSpec:
    with open(path, encoding="utf-8") as fh:
        return ProjectSpec.from_dict(json.load(fh))


def builtin_projects() -> dict[str, ProjectSpec]:
    """The shipped project corpus, keyed by id."""
    out = {}
    for entry in sorted(resources.files("scaffoldlab.data").joinpath("projects").iterdir(),
                        key=lambda p: p.name):
        if entry.name.endswith(".json"):
            spec = ProjectSpec.from_dict(json.loads(entry.read_text(encoding="utf-8")))
            out[spec.id] = spec
    return out


@dataclass(frozen=True)
class Limits:
    max_sprints: int = 3
    max_repair_attempts: int = 1
    max_context_chars: int = 24000

    def __post_init__(self):
        if self.max_sprints < 1:
            raise ConfigError("max_sprints must be positive")
        if self.max_repair_attempts < 0:
            raise ConfigError("max_repair_attempts must be non-negative")
        if self.max_context_chars < 1:
            raise ConfigError("max_context_chars must be positive")

    def to_dict(self) -> dict:
        return {
            "max_sprints": self.max_sprints,
            "max_repair_attempts": self.max_repair_attempts,
            "max_context_chars": self.max_context_chars,
        }

    @classmethod
    def from_dict(cls, d: dict | None) -> "Limits":
        d = d or {}
        unknown = set(d) - {"max_sprints", "max_repair_attempts", "max_context_chars"}
        if unknown:
            raise ConfigError(f"unknown limits: {sorted(unknown)}")
        try:
            return cls(**{k: int(v) for k, v in d.items()})
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad limits: {exc}") from exc


def slugify(label: str) -> str:
    s = re.sub(r"[^A-Za-z0-9._-]+", "-", label).strip("-.")
    return s or "model"


@dataclass(frozen=True)
class RunConfig:
    project: ProjectSpec
    process: ProcessModel
    model_label: str
    seed: int = 0
    limits: Limits = field(default_factory=Limits)
    temperature: float = 0.0

    @property
    def run_id(self) -> str:
        return f"{self.project.id}/{self.process.value}/{slugify(self.model_label)}"

    def to_dict(self) -> dict:
        return {
            "project": self.project.to_dict(),
            "process": self.process.value,
            "model_label": self.model_label,
            "seed": self.seed,
            "limits": self.limits.to_dict(),
            "temperature": self.temperature,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        return cls(
            project=ProjectSpec.from_dict(d["project"]),
            process=parse_process_model(d["process"]),
            model_label=d["model_label"],
            seed=int(d.get("seed", 0)),
            limits=Limits.from_dict(d.get("limits")),
            temperature=float(d.get("temperature", 0.0)),
        )


# --- run outcome ------------------------------------------------------------

COMPLETED = "Completed"
FAILED = "Failed"


def _check_ratio(name: str, value: Optional[float]):
    if value is not None and not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class SizeMetrics:
    files: int = 0
    loc: int = 0
    tokens_per_loc: Optional[float] = None  # None when loc == 0
    all_files: int = 0  # code plus document artifacts


@dataclass(frozen=True)
class CostMetrics:
    total_tokens: int = 0
    wall_time: float = 0.0


@dataclass(frozen=True)
class QualityMetrics:
    code_smells: Optional[int] = None
    vulnerabilities: Optional[int] = None
    ai_bug_rate: Optional[float] = None
    human_bug_rate: Optional[float] = None

    def __post_init__(self):
        _check_ratio("ai_bug_rate", self.ai_bug_rate)
        _check_ratio("human_bug_rate", self.human_bug_rate)
        for name in ("code_smells", "vulnerabilities"):
            v = getattr(self, name)
            if v is not None and (not isinstance(v, int) or v < 0):
                raise ValueError(f"{name} must be a non-negative integer")


def tokens_per_loc(total_tokens: int, loc: int) -> Optional[float]:
    # int / int is correctly rounded, so this is the nearest float to the exact ratio
    return total_tokens / loc if loc > 0 else None


@dataclass(frozen=True)
class RunRecord:
    config: RunConfig
    status: str
    size: SizeMetrics
    cost: CostMetrics
    quality: QualityMetrics
    transcript_path: str = "transcript.jsonl"
    failure_reason: Optional[str] = None

    @property
    def run_id(self) -> str:
        return self.config.run_id

    @property
    def completed(self) -> bool:
        return self.status == COMPLETED

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "config": self.config.to_dict(),
            "status": self.status,
            "failure_reason": self.failure_reason,
            "size": {
                "files": self.size.files,
                "loc": self.size.loc,
                "tokens_per_loc": self.size.tokens_per_loc,
                "all_files": self.size.all_files,
            },
            "cost": {
                "total_tokens": self.cost.total_tokens,
                "wall_time": self.cost.wall_time,
            },
            "quality": {
                "code_smells": self.quality.code_smells,
                "vulnerabilities": self.quality.vulnerabilities,
                "ai_bug_rate": self.quality.ai_bug_rate,
                "human_bug_rate": self.quality.human_bug_rate,
            },
            "transcript_path": self.transcript_path,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RunRecord":
        return cls(
            config=RunConfig.from_dict(d["config"]),
            status=d["status"],
            failure_reason=d.get("failure_reason"),
            size=SizeMetrics(**d["size"]),
            cost=CostMetrics(**d["cost"]),
            quality=QualityMetrics(**d["quality"]),
            transcript_path=d.get("transcript_path", "transcript.jsonl"),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"
