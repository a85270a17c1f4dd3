"""Experiment configuration, matrix execution, ingestion and reporting."""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import yaml

from . import engines
from .analytics.ingest import apply_issues, apply_manual, load_issue_report, load_manual_session
from .analytics.report import emit_report, run_anovas
from .domain import (
    FAILED,
    CostMetrics,
    Limits,
    ProcessModel,
    ProjectSpec,
    QualityMetrics,
    RunConfig,
    RunRecord,
    SizeMetrics,
    builtin_projects,
    load_project,
    parse_process_model,
)
from .errors import ConfigError, MalformedFile, ScaffoldError, UnknownProcessModel, UnknownRun
from .gateway import Backend, OpenAICompatBackend, PlaybackBackend

log = logging.getLogger(__name__)

_TOP_KEYS = {"projects", "processes", "models", "limits", "parallelism", "output_dir", "seed", "temperature"}
# keys that would put a secret straight into the config file
_SECRET_KEYS = {"api_key", "apikey", "key", "token", "secret", "password", "authorization"}


@dataclass(frozen=True)
class PlaybackSource:
    file: Path


@dataclass(frozen=True)
class LiveSource:
    base_url: str
    credential_env: str = "OPENAI_API_KEY"
    timeout: float = 300.0


@dataclass(frozen=True)
class ModelSpec:
    label: str
    backend: PlaybackSource | LiveSource


@dataclass
class ExperimentConfig:
    projects: list[ProjectSpec]
    processes: list[ProcessModel]
    models: list[ModelSpec]
    limits: Limits = field(default_factory=Limits)
    parallelism: int = 1
    output_dir: Path = Path("runs")
    seed: int = 0
    temperature: float = 0.0

    def cells(self, seed: Optional[int] = None) -> list[RunConfig]:
        """One RunConfig per (project, process, model), in a fixed order."""
        seed = self.seed if seed is None else seed
        return [
            RunConfig(p, proc, m.label, seed=seed, limits=self.limits, temperature=self.temperature)
            for p in self.projects
            for proc in self.processes
            for m in self.models
        ]


def _project(ref, base: Path, corpus: dict[str, ProjectSpec]) -> ProjectSpec:
    if isinstance(ref, dict):
        return ProjectSpec.from_dict(ref)
    if not isinstance(ref, str):
        raise ConfigError(f"project reference must be an id or a path, got {ref!r}")
    if ref in corpus:
        return corpus[ref]
    path = base / ref
    if path.suffix == ".json" and path.is_file():
        try:
            return load_project(path)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot load project {path}: {exc}") from exc
    raise ConfigError(f"unknown project {ref!r}")


def _model(doc, base: Path) -> ModelSpec:
    if not isinstance(doc, dict) or not isinstance(doc.get("label"), str) or not doc["label"]:
        raise ConfigError(f"model entry needs a label: {doc!r}")
    backend = doc.get("backend")
    if not isinstance(backend, dict):
        raise ConfigError(f"model {doc['label']}: backend must be a mapping")
    leaked = {k.lower() for k in backend} & _SECRET_KEYS
    if leaked:
        raise ConfigError(f"model {doc['label']}: put credentials in an environment variable "
                          f"named by credential_env, not inline ({sorted(leaked)})")
    kind = backend.get("type")
    if kind == "playback":
        if not backend.get("file"):
            raise ConfigError(f"model {doc['label']}: playback backend needs a file")
        return ModelSpec(doc["label"], PlaybackSource(base / backend["file"]))
    if kind == "live":
        if not backend.get("base_url"):
            raise ConfigError(f"model {doc['label']}: live backend needs base_url")
        return ModelSpec(doc["label"], LiveSource(
            base_url=str(backend["base_url"]),
            credential_env=str(backend.get("credential_env", "OPENAI_API_KEY")),
            timeout=float(backend.get("timeout", 300.0)),
        ))
    raise ConfigError(f"model {doc['label']}: backend type must be playback or live, got {kind!r}")


def parse_config(doc, base: Path = Path(".")) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a mapping")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in ("projects", "processes", "models"):
        if not isinstance(doc.get(key), list) or not doc[key]:
            raise ConfigError(f"{key} must be a non-empty list")
    corpus = builtin_projects()
    projects = [_project(ref, base, corpus) for ref in doc["projects"]]
    try:
        processes = [parse_process_model(str(p)) for p in doc["processes"]]
    except UnknownProcessModel as exc:
        raise ConfigError(str(exc)) from exc
    models = [_model(m, base) for m in doc["models"]]
    for what, names in (("project", [p.id for p in projects]),
                        ("process", [p.value for p in processes]),
                        ("model", [m.label for m in models])):
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate {what} in config")
    try:
        parallelism = int(doc.get("parallelism", 1))
        seed = int(doc.get("seed", 0))
        temperature = float(doc.get("temperature", 0.0))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad scalar in config: {exc}") from exc
    if parallelism < 1:
        raise ConfigError("parallelism must be a positive integer")
    return ExperimentConfig(
        projects=projects,
        processes=processes,
        models=models,
        limits=Limits.from_dict(doc.get("limits")),
        parallelism=parallelism,
        output_dir=base / str(doc.get("output_dir", "runs")),
        seed=seed,
        temperature=temperature,
    )


def load_config(path: str | Path) -> ExperimentConfig:
    """Read a JSON or YAML experiment config; relative paths resolve against its directory."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
        doc = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (OSError, ValueError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    cfg = parse_config(doc, path.parent)
    for m in cfg.models:
        if isinstance(m.backend, PlaybackSource) and not m.backend.file.is_file():
            raise ConfigError(f"model {m.label}: playback file {m.backend.file} not found")
    return cfg


def build_backend(spec: ModelSpec) -> Backend:
    if isinstance(spec.backend, PlaybackSource):
        return PlaybackBackend.load(spec.backend.file)
    return OpenAICompatBackend(spec.backend.base_url, spec.backend.credential_env, spec.backend.timeout)


def _crashed(config: RunConfig, exc: BaseException) -> RunRecord:
    return RunRecord(config, FAILED, SizeMetrics(), CostMetrics(), QualityMetrics(),
                     failure_reason=f"{type(exc).__name__}: {exc}")


def run_cell(config: RunConfig, backend: Backend, runs_dir: Path) -> RunRecord:
    """Run one cell; nothing it raises escapes, so other cells are unaffected."""
    try:
        return engines.run(config, backend, runs_dir)
    except Exception as exc:  # noqa: BLE001 - isolation boundary
        log.exception("cell %s crashed", config.run_id)
        record = _crashed(config, exc)
        out = engines.run_dir_for(config, runs_dir)
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / "record.json").write_text(record.dumps(), encoding="utf-8")
        except OSError:
            pass
        return record


def summary_line(record: RunRecord) -> str:
    line = (f"{record.run_id}: {record.status} files={record.size.files} loc={record.size.loc} "
            f"tokens={record.cost.total_tokens} time={record.cost.wall_time:.2f}")
    if record.failure_reason:
        line += f" reason={record.failure_reason}"
    return line


def run_matrix(
    cfg: ExperimentConfig,
    seed: Optional[int] = None,
    parallelism: Optional[int] = None,
    on_done: Callable[[RunRecord], None] = lambda r: None,
) -> list[RunRecord]:
    backends = {m.label: build_backend(m) for m in cfg.models}
    cells = cfg.cells(seed)
    runs_dir = Path(cfg.output_dir)
    runs_dir.mkdir(parents=True, exist_ok=True)

    def work(c: RunConfig) -> RunRecord:
        rec = run_cell(c, backends[c.model_label], runs_dir)
        on_done(rec)
        return rec

    try:
        with ThreadPoolExecutor(max_workers=parallelism or cfg.parallelism) as pool:
            return list(pool.map(work, cells))
    finally:
        for b in backends.values():
            if hasattr(b, "close"):
                b.close()


# --- persisted records -------------------------------------------------------

def record_path(runs_dir: str | Path, run_id: str) -> Path:
    return Path(runs_dir) / run_id / "record.json"


def load_record(path: str | Path) -> RunRecord:
    try:
        return RunRecord.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise MalformedFile(f"{path}: {exc}") from exc


def load_records(runs_dir: str | Path) -> list[RunRecord]:
    root = Path(runs_dir)
    if not root.is_dir():
        return []
    records = [load_record(p) for p in root.rglob("record.json")]
    return sorted(records, key=lambda r: r.run_id)


def ingest(kind: str, file: str | Path, runs_dir: str | Path) -> RunRecord:
    if kind == "issues":
        doc = load_issue_report(file)
        apply = apply_issues
    elif kind == "manual":
        doc = load_manual_session(file)
        apply = apply_manual
    else:
        raise ConfigError(f"ingest kind must be issues or manual, got {kind!r}")
    path = record_path(runs_dir, doc.run_id)
    if ".." in Path(doc.run_id).parts or not path.is_file():
        raise UnknownRun(doc.run_id)
    record = apply(load_record(path), doc)
    path.write_text(record.dumps(), encoding="utf-8")
    return record


def report(runs_dir: str | Path, out_dir: str | Path) -> list[Path]:
    records = load_records(runs_dir)
    if not records:
        raise ScaffoldError("no runs found")
    return emit_report(run_anovas(records), records, out_dir)


def digest_tree(root: str | Path) -> dict[str, str]:
    """sha256 of every file under ``root``, keyed by POSIX relative path."""
    root = Path(root)
    return {
        p.relative_to(root).as_posix(): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }
