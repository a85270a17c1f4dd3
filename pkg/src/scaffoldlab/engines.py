"""Waterfall, V-Model and Agile as explicit agent schedules.

Every engine walks a fixed list of :class:`PhasePlan` steps. A step activates
one role agent, which reads what its subscription delivered from the pool,
calls the model, and publishes one message; code goes to the workspace.
"""

from __future__ import annotations

import json
import logging
import re
import shutil
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from .agents import (
    RoleAgent,
    TestReport,
    ai_bug_rate,
    format_code_bundle,
    make_agents,
    parse_structured_doc,
)
from .agents.agent import AgentOutput
from .domain import (
    COMPLETED,
    FAILED,
    CostMetrics,
    MessageKind,
    Phase,
    PhaseKind,
    ProcessModel,
    QualityMetrics,
    RoleKind,
    RunConfig,
    RunRecord,
    SizeMetrics,
    roles_for,
    tokens_per_loc,
)
from .errors import ContextOverflow, GatewayError, MissingPlan, OutputError, RunFailed, ScaffoldError
from .gateway import Backend, TokenLedger
from .pool import Message, MessagePool, dump_transcript
from .workspace import Workspace

log = logging.getLogger(__name__)

K = MessageKind
R = RoleKind
P = PhaseKind


@dataclass(frozen=True)
class PhasePlan:
    phase: PhaseKind
    actor: RoleKind
    consumes: frozenset[MessageKind]
    produces: MessageKind
    validation_pair: Optional[PhaseKind] = None


def _plan(phase, actor, consumes, produces, pair=None) -> PhasePlan:
    return PhasePlan(phase, actor, frozenset(consumes), produces, pair)


VMODEL_PAIRS = {
    P.REQUIREMENTS: P.ACCEPTANCE_TESTING,
    P.DESIGN: P.INTEGRATION_TESTING,
    P.IMPLEMENTATION: P.UNIT_TESTING,
}
VMODEL_PAIRS.update({v: k for k, v in list(VMODEL_PAIRS.items())})


WATERFALL_SCHEDULE = (
    _plan(P.REQUIREMENTS, R.PROJECT_MANAGER, (), K.REQUIREMENT_DOC),
    _plan(P.DESIGN, R.DESIGNER, (K.REQUIREMENT_DOC,), K.DESIGN_DOC),
    _plan(P.IMPLEMENTATION, R.DEVELOPER, (K.REQUIREMENT_DOC, K.DESIGN_DOC), K.CODE_BUNDLE),
    _plan(P.UNIT_TESTING, R.UNIT_TEST_EXECUTOR, (K.DESIGN_DOC, K.CODE_BUNDLE), K.TEST_REPORT),
    _plan(P.INTEGRATION_TESTING, R.INTEGRATION_TEST_EXECUTOR,
          (K.REQUIREMENT_DOC, K.DESIGN_DOC, K.CODE_BUNDLE), K.TEST_REPORT),
    _plan(P.ACCEPTANCE_TESTING, R.ACCEPTANCE_TEST_EXECUTOR, (K.REQUIREMENT_DOC, K.CODE_BUNDLE), K.TEST_REPORT),
    _plan(P.DEPLOYMENT, R.DEPLOYER, (K.CODE_BUNDLE, K.TEST_REPORT), K.DEPLOYMENT_NOTE),
)

# descending leg authors the plans, ascending leg executes them
VMODEL_SCHEDULE = (
    _plan(P.REQUIREMENTS, R.PROJECT_MANAGER, (), K.REQUIREMENT_DOC),
    _plan(P.REQUIREMENTS, R.ACCEPTANCE_TEST_EXECUTOR, (K.REQUIREMENT_DOC,), K.TEST_PLAN, P.ACCEPTANCE_TESTING),
    _plan(P.DESIGN, R.DESIGNER, (K.REQUIREMENT_DOC,), K.DESIGN_DOC),
    _plan(P.DESIGN, R.INTEGRATION_TEST_EXECUTOR, (K.REQUIREMENT_DOC, K.DESIGN_DOC), K.TEST_PLAN,
          P.INTEGRATION_TESTING),
    _plan(P.IMPLEMENTATION, R.DEVELOPER, (K.REQUIREMENT_DOC, K.DESIGN_DOC), K.CODE_BUNDLE),
    _plan(P.IMPLEMENTATION, R.UNIT_TEST_EXECUTOR, (K.DESIGN_DOC, K.CODE_BUNDLE), K.TEST_PLAN, P.UNIT_TESTING),
    _plan(P.UNIT_TESTING, R.UNIT_TEST_EXECUTOR, (K.TEST_PLAN, K.CODE_BUNDLE), K.TEST_REPORT, P.IMPLEMENTATION),
    _plan(P.INTEGRATION_TESTING, R.INTEGRATION_TEST_EXECUTOR, (K.TEST_PLAN, K.CODE_BUNDLE), K.TEST_REPORT,
          P.DESIGN),
    _plan(P.ACCEPTANCE_TESTING, R.ACCEPTANCE_TEST_EXECUTOR, (K.TEST_PLAN, K.CODE_BUNDLE), K.TEST_REPORT,
          P.REQUIREMENTS),
)

AGILE_BACKLOG_STEP = _plan(P.REQUIREMENTS, R.PROJECT_MANAGER, (), K.REQUIREMENT_DOC)
AGILE_SPRINT = (
    _plan(P.SPRINT_PLANNING, R.SPRINT_MANAGER,
          (K.REQUIREMENT_DOC, K.SPRINT_RETRO, K.CODE_BUNDLE), K.SPRINT_PLAN),
    _plan(P.DESIGN, R.DESIGNER, (K.REQUIREMENT_DOC, K.SPRINT_PLAN, K.DESIGN_DOC), K.DESIGN_DOC),
    _plan(P.IMPLEMENTATION, R.DEVELOPER, (K.REQUIREMENT_DOC, K.DESIGN_DOC, K.SPRINT_PLAN, K.CODE_BUNDLE),
          K.CODE_BUNDLE),
    _plan(P.TESTING, R.TESTER, (K.REQUIREMENT_DOC, K.SPRINT_PLAN, K.CODE_BUNDLE), K.TEST_REPORT),
    _plan(P.DEPLOYMENT, R.DEPLOYER, (K.CODE_BUNDLE, K.TEST_REPORT), K.DEPLOYMENT_NOTE),
)

WATERFALL_PHASES = [P.REQUIREMENTS, P.DESIGN, P.IMPLEMENTATION, P.UNIT_TESTING,
                    P.INTEGRATION_TESTING, P.ACCEPTANCE_TESTING, P.DEPLOYMENT]
VMODEL_PHASES = [P.REQUIREMENTS, P.DESIGN, P.IMPLEMENTATION, P.UNIT_TESTING,
                 P.INTEGRATION_TESTING, P.ACCEPTANCE_TESTING]


def schedule_for(process: ProcessModel) -> tuple[PhasePlan, ...]:
    if process is ProcessModel.WATERFALL:
        return WATERFALL_SCHEDULE
    if process is ProcessModel.VMODEL:
        return VMODEL_SCHEDULE
    return (AGILE_BACKLOG_STEP,) + AGILE_SPRINT


def subscriptions_for(process: ProcessModel) -> dict[RoleKind, set[MessageKind]]:
    consumes = {role: set() for role in roles_for(process)}
    for plan in schedule_for(process):
        consumes[plan.actor] |= plan.consumes
    return consumes


# --- state ---------------------------------------------------------------

@dataclass
class EngineState:
    process: ProcessModel
    current_phase: Optional[Phase] = None
    completed_phases: list[Phase] = field(default_factory=list)
    sprint_index: Optional[int] = None
    halted: Optional[str] = None
    traceability: list[dict] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def enter(self, phase: Phase):
        if self.process is ProcessModel.AGILE:
            if phase.sprint_index is None:
                raise ScaffoldError("agile phases carry a sprint index")
            earlier = [p.sprint_index for p in self.completed_phases if p.kind is phase.kind]
            if earlier and phase.sprint_index <= max(earlier):
                raise ScaffoldError(f"{phase} revisits an earlier sprint")
        else:
            if phase.sprint_index is not None:
                raise ScaffoldError("sprint index is only valid under agile")
            if any(p.kind is phase.kind for p in self.completed_phases):
                raise ScaffoldError(f"{self.process} never re-enters {phase}")
        self.current_phase = phase
        self.sprint_index = phase.sprint_index

    def complete(self, phase: Phase):
        self.completed_phases.append(phase)

    def to_dict(self) -> dict:
        return {
            "process": self.process.value,
            "completed_phases": [p.to_dict() for p in self.completed_phases],
            "halted": self.halted,
            "traceability": self.traceability,
            "notes": self.notes,
        }


@dataclass
class RunContext:
    config: RunConfig
    backend: Backend
    pool: MessagePool
    workspace: Workspace
    ledger: TokenLedger = field(default_factory=TokenLedger)
    state: Optional[EngineState] = None
    reports: list[TestReport] = field(default_factory=list)
    context_cache: dict[tuple[str, str], str] = field(default_factory=dict)
    cache_hits: int = 0

    def __post_init__(self):
        if self.state is None:
            self.state = EngineState(self.config.process)

    @classmethod
    def create(cls, config: RunConfig, backend: Backend, run_dir: str | Path) -> "RunContext":
        run_dir = Path(run_dir)
        ledger = TokenLedger()
        ws = Workspace(run_dir / "workspace", run_dir / "snapshots", clock=ledger.elapsed)
        return cls(config, backend, MessagePool(), ws, ledger)


# --- step machinery ------------------------------------------------------

_DOC_PATHS = {
    K.REQUIREMENT_DOC: "docs/prd.json",
    K.DESIGN_DOC: "docs/design.json",
    K.DEPLOYMENT_NOTE: "docs/deployment.json",
    K.SPRINT_PLAN: "docs/sprint_plan.json",
}


def _code_context(ctx: RunContext) -> list[str]:
    """Current code files as fenced blocks, memoised by content hash."""
    out = []
    for art in ctx.workspace.latest_artifacts(code_only=True):
        key = (art.path, art.content_hash)
        text = ctx.context_cache.get(key)
        if text is None:
            text = format_code_bundle([(art.path, art.content.decode("utf-8", errors="replace"))])
            ctx.context_cache[key] = text
        else:
            ctx.cache_hits += 1
        out.append(text)
    return out


def _bindings(ctx: RunContext, agent: RoleAgent, sprint_context: str = "", extra: Optional[list[str]] = None) -> dict:
    prd = agent.latest(K.REQUIREMENT_DOC)
    design = agent.latest(K.DESIGN_DOC)
    prior = []
    saw_code = False
    for msg in agent.inbox:
        if msg.kind in (K.REQUIREMENT_DOC, K.DESIGN_DOC):
            continue
        if msg.kind is K.CODE_BUNDLE:
            saw_code = True
            continue
        prior.append(f"### {msg.kind.value} from {msg.sender.value} ({msg.phase})\n{msg.content}")
    prior.extend(extra or ())
    if saw_code:
        prior.extend(_code_context(ctx))
    return {
        "project_name": ctx.config.project.title,
        "requirement": ctx.config.project.requirement_text,
        "prd": prd.content if prd else "(not yet available)",
        "detailed_design": design.content if design else "(not yet available)",
        "sprint_context": sprint_context,
        "prior_artifacts": prior or ["(none)"],
    }


def _persist(ctx: RunContext, plan: PhasePlan, phase: Phase, out: AgentOutput) -> tuple[list[str], dict]:
    ws = ctx.workspace
    meta = {}
    if plan.produces is K.CODE_BUNDLE:
        arts = ws.write_bundle(out.parsed)
        meta["replaced_blocks"] = out.parsed.replaced
        return [a.path for a in arts], meta
    if plan.produces is K.TEST_REPORT:
        report: TestReport = out.parsed
        ctx.reports.append(report)
        meta.update(total_cases=report.total, failed_cases=report.failed_names)
        doc = {"test_cases": [{"name": c.name, "verdict": c.verdict.value} for c in report.cases]}
        path = f"reports/{phase.kind.value}.json"
    elif plan.produces is K.TEST_PLAN:
        doc = out.parsed
        path = f"docs/test_plan_{plan.validation_pair.value}.json"
    else:
        doc = out.parsed
        path = _DOC_PATHS[plan.produces]
    art = ws.write(path, json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n", plan.produces)
    return [art.path], meta


def _step(
    ctx: RunContext,
    agents: dict[RoleKind, RoleAgent],
    plan: PhasePlan,
    phase: Phase,
    sprint_context: str = "",
    meta: Optional[dict] = None,
    send_to=(),
    extra_context: Optional[list[str]] = None,
) -> Message:
    agent = agents[plan.actor]
    agent.observe(ctx.pool)
    hits_before = ctx.cache_hits
    bindings = _bindings(ctx, agent, sprint_context, extra_context)
    try:
        out = agent.act(phase, plan.produces, bindings, ctx.backend, ctx.ledger,
                        live_retries=ctx.config.limits.max_repair_attempts)
    except (OutputError, GatewayError, ContextOverflow) as exc:
        raise RunFailed(phase.kind, exc, phase.sprint_index) from exc
    refs, extra_meta = _persist(ctx, plan, phase, out)
    msg_meta = {"handoff_owner": R.DEVELOPER.value, "attempts": out.attempts, "prompt": out.prompt}
    msg_meta.update(extra_meta)
    if plan.actor is R.SPRINT_MANAGER:
        msg_meta["context_cache_hits"] = ctx.cache_hits - hits_before
    msg_meta.update(meta or {})
    return ctx.pool.publish(plan.actor, phase, plan.produces, out.text, refs, send_to, msg_meta)


def _walk(ctx, agents, schedule, on_step: Callable[[PhasePlan, Phase], dict] | None = None):
    """Run a linear schedule, entering each phase once."""
    state = ctx.state
    for i, plan in enumerate(schedule):
        phase = Phase(plan.phase)
        if state.current_phase != phase:
            state.enter(phase)
        kwargs = on_step(plan, phase) if on_step else {}
        if kwargs is not None:
            _step(ctx, agents, plan, phase, **kwargs)
        if i + 1 == len(schedule) or schedule[i + 1].phase is not plan.phase:
            state.complete(phase)


def finalize(ctx: RunContext, status: str = COMPLETED, reason: Optional[str] = None) -> RunRecord:
    size = ctx.workspace.measure_size()
    c1 = ctx.ledger.total_tokens()
    return RunRecord(
        config=ctx.config,
        status=status,
        failure_reason=reason,
        size=SizeMetrics(files=size.files, loc=size.loc, tokens_per_loc=tokens_per_loc(c1, size.loc),
                         all_files=size.all_files),
        cost=CostMetrics(total_tokens=c1, wall_time=ctx.ledger.total_latency()),
        quality=QualityMetrics(ai_bug_rate=ai_bug_rate(ctx.reports)),
    )


def _halt(ctx: RunContext, exc: RunFailed):
    ctx.state.halted = str(exc)
    raise exc


# --- engines -------------------------------------------------------------

def run_waterfall(ctx: RunContext) -> RunRecord:
    """Strictly sequential hand-offs; test failures are recorded, never reworked."""
    agents = make_agents(ctx.pool, ctx.config, subscriptions_for(ProcessModel.WATERFALL))
    try:
        _walk(ctx, agents, WATERFALL_SCHEDULE)
    except RunFailed as exc:
        _halt(ctx, exc)
    return finalize(ctx)


def run_vmodel(ctx: RunContext) -> RunRecord:
    agents = make_agents(ctx.pool, ctx.config, subscriptions_for(ProcessModel.VMODEL))
    state = ctx.state

    def on_step(plan: PhasePlan, phase: Phase):
        if plan.produces is K.TEST_PLAN:
            try:
                _step(ctx, agents, plan, phase, send_to=(plan.actor,),
                      meta={"plans_for": plan.validation_pair.value})
            except RunFailed as exc:
                # the gap surfaces as MissingPlan when execution starts
                state.notes.append(f"no {plan.validation_pair.value} plan: {exc.cause}")
                log.warning("%s: %s", ctx.config.run_id, state.notes[-1])
            return None
        if plan.produces is K.TEST_REPORT:
            agent = agents[plan.actor]
            agent.observe(ctx.pool)
            test_plan = agent.latest(K.TEST_PLAN, plans_for=plan.phase.value)
            if test_plan is None:
                raise MissingPlan(plan.phase)
            msg = _step(ctx, agents, plan, phase,
                        meta={"executes_plan": test_plan.id, "validates": plan.validation_pair.value})
            state.traceability.append(
                {"plan": test_plan.id, "report": msg.id, "phase": plan.phase.value,
                 "validates": plan.validation_pair.value}
            )
            return None
        return {}

    try:
        _walk(ctx, agents, VMODEL_SCHEDULE, on_step)
    except RunFailed as exc:
        _halt(ctx, exc)
    return finalize(ctx)


_PRIORITY = re.compile(r"\bP(\d)\b", re.IGNORECASE)


def _norm_key(k: str) -> str:
    return re.sub(r"[^a-z0-9]", "", k.lower())


def extract_backlog(prd: dict) -> list[list[tuple[str, str]]]:
    """Requirement-pool items grouped into priority tiers, P0 first.

    Items without a recognisable priority land in the lowest tier.
    """
    pool = next((v for k, v in prd.items() if _norm_key(k) == "requirementpool"), None)
    items: list[tuple[str, str]] = []

    def add(priority, text):
        m = _PRIORITY.search(str(priority or ""))
        items.append((f"P{m.group(1)}" if m else "", str(text).strip()))

    if isinstance(pool, dict):
        for prio, entries in pool.items():
            for e in entries if isinstance(entries, list) else [entries]:
                add(prio, e)
    elif isinstance(pool, list):
        for e in pool:
            if isinstance(e, (list, tuple)) and len(e) >= 2:
                a, b = str(e[0]), str(e[1])
                if _PRIORITY.fullmatch(a.strip()):
                    add(a, b)
                else:
                    add(b, a)
            elif isinstance(e, dict):
                prio = next((e[k] for k in e if _norm_key(k) in ("priority", "prio", "level")), "")
                text = next((e[k] for k in e if _norm_key(k) in
                             ("requirement", "description", "name", "text", "title", "feature")), None)
                add(prio, text if text is not None else json.dumps(e, sort_keys=True))
            else:
                s = str(e)
                m = _PRIORITY.search(s)
                text = _PRIORITY.sub("", s).strip(" :-()[]") if m else s
                add(m.group(0) if m else "", text)
    items = [(p, t) for p, t in items if t]
    if not items:
        return []
    lowest = max((p for p, _ in items if p), default="P2")
    items = [(p or lowest, t) for p, t in items]
    tiers = {}
    for p, t in items:
        tiers.setdefault(int(p[1:]), []).append((p, t))
    return [tiers[k] for k in sorted(tiers)]


def sprint_context_text(sprint: int, max_sprints: int, scope, carried: list[str], remaining: int) -> str:
    lines = [f"Sprint {sprint} of at most {max_sprints}."]
    if scope:
        lines.append("Sprint scope (highest priority first):")
        lines += [f"- [{p}] {t}" for p, t in scope]
    else:
        lines.append("Sprint scope: no new backlog items; stabilise the existing features.")
    if carried:
        lines.append(f"Failed test cases carried over from sprint {sprint - 1} (fix these first):")
        lines += [f"- {name}" for name in carried]
    lines.append(f"Backlog items remaining after this sprint: {remaining}")
    return "\n".join(lines)


def run_agile(ctx: RunContext) -> RunRecord:
    """Backlog once, then sprints until max_sprints or an all-pass sprint on an empty backlog."""
    cfg = ctx.config
    agents = make_agents(ctx.pool, cfg, subscriptions_for(ProcessModel.AGILE))
    state = ctx.state
    sm = agents[R.SPRINT_MANAGER]
    try:
        phase = Phase(P.REQUIREMENTS, 0)
        state.enter(phase)
        _step(ctx, agents, AGILE_BACKLOG_STEP, phase)
        state.complete(phase)
        sm.observe(ctx.pool)
        backlog = extract_backlog(parse_structured_doc(sm.latest(K.REQUIREMENT_DOC).content))
        if not backlog:
            backlog = [[("P0", cfg.project.requirement_text)]]

        for sprint in range(1, cfg.limits.max_sprints + 1):
            sm.observe(ctx.pool)
            retro = sm.latest(K.SPRINT_RETRO)
            carried = list(json.loads(retro.content).get("failed_cases", [])) if retro else []
            scope = backlog.pop(0) if backlog else []
            remaining = sum(len(t) for t in backlog)
            context = sprint_context_text(sprint, cfg.limits.max_sprints, scope, carried, remaining)

            plan_msg = None
            report = None
            for plan in AGILE_SPRINT:
                phase = Phase(plan.phase, sprint)
                state.enter(phase)
                if plan.actor is R.SPRINT_MANAGER:
                    plan_msg = _step(ctx, agents, plan, phase, sprint_context=context,
                                     meta={"scope": [t for _, t in scope], "carried_failures": carried})
                else:
                    team_context = f"{context}\n\nSprint plan:\n{plan_msg.content}"
                    n_before = len(ctx.reports)
                    _step(ctx, agents, plan, phase, sprint_context=team_context)
                    if len(ctx.reports) > n_before:
                        report = ctx.reports[-1]
                state.complete(phase)

            ctx.workspace.snapshot(sprint)
            phase = Phase(P.SPRINT_REVIEW, sprint)
            state.enter(phase)
            failed = report.failed_names if report else []
            ctx.pool.publish(
                R.SPRINT_MANAGER, phase, K.SPRINT_RETRO,
                json.dumps({"sprint": sprint, "failed_cases": failed,
                            "passed": report.total - report.failed, "total": report.total,
                            "backlog_remaining": remaining}, sort_keys=True),
                meta={"handoff_owner": R.DEVELOPER.value, "snapshot": f"snapshots/sprint-{sprint}.json"},
            )
            state.complete(phase)
            if report.all_pass and not backlog:
                state.notes.append(f"stopped after sprint {sprint}: all tests pass and backlog is empty")
                break
    except RunFailed as exc:
        _halt(ctx, exc)
    return finalize(ctx)


ENGINES: dict[ProcessModel, Callable[[RunContext], RunRecord]] = {
    ProcessModel.WATERFALL: run_waterfall,
    ProcessModel.VMODEL: run_vmodel,
    ProcessModel.AGILE: run_agile,
}


def run_dir_for(config: RunConfig, root: str | Path) -> Path:
    return Path(root) / config.run_id


def run(config: RunConfig, backend: Backend, workspace_root: str | Path) -> RunRecord:
    """Execute one experimental cell and persist its record and transcript.

    Output goes to ``<workspace_root>/<project>/<process>/<model>/``, which is
    cleared first so a rerun never mixes with stale files.
    """
    run_dir = run_dir_for(config, workspace_root)
    if run_dir.exists():
        shutil.rmtree(run_dir)
    run_dir.mkdir(parents=True)
    ctx = RunContext.create(config, backend, run_dir)
    try:
        record = ENGINES[config.process](ctx)
    except ScaffoldError as exc:
        ctx.state.halted = str(exc)
        record = finalize(ctx, FAILED, f"{type(exc).__name__}: {exc}")
    finally:
        ctx.pool.close()
        dump_transcript(ctx.pool.transcript(), run_dir / "transcript.jsonl")
        _write_json(run_dir / "ledger.json", ctx.ledger.to_dict())
        _write_json(run_dir / "state.json", ctx.state.to_dict())
    if record.cost.total_tokens != ctx.ledger.total_tokens():
        raise AssertionError("record tokens disagree with the ledger")
    (run_dir / "record.json").write_text(record.dumps(), encoding="utf-8")
    log.info("%s: %s", config.run_id, record.status)
    return record


def _write_json(path: Path, doc):
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
