from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Mapping

from ..domain import MessageKind, Phase, RoleKind, RunConfig
from ..errors import OutputError
from ..gateway import Backend, CompletionRequest, PlaybackKey, TokenLedger, complete
from ..pool import Message, MessagePool, Subscription
from .parsers import parse_code_bundle, parse_structured_doc, parse_test_report
from .templates import Binding, load_template, render

log = logging.getLogger(__name__)

SYSTEM_PROMPTS = {
    RoleKind.PROJECT_MANAGER: "You are the project manager of a software team. You turn a client's request into a precise product requirements document.",
    RoleKind.SPRINT_MANAGER: "You are the sprint manager of an agile software team. You plan each sprint's scope and keep the team's context focused.",
    RoleKind.DESIGNER: "You are the software architect of the team. You design systems that the developer can implement directly.",
    RoleKind.DEVELOPER: "You are the lead developer of the team. You write complete, working source code.",
    RoleKind.TESTER: "You are the tester of the team. You derive test cases from the requirements and judge the delivered code against them.",
    RoleKind.DEPLOYER: "You are the release engineer of the team. You prepare the delivered code for deployment.",
    RoleKind.UNIT_TEST_EXECUTOR: "You are the unit test engineer of the team. You verify individual functions and components.",
    RoleKind.INTEGRATION_TEST_EXECUTOR: "You are the integration test engineer of the team. You verify that components work together as designed.",
    RoleKind.ACCEPTANCE_TEST_EXECUTOR: "You are the acceptance test engineer of the team. You verify the product against its requirements.",
}

REPAIR_SUFFIX = (
    "\n\nYour previous answer could not be processed: {error}\n"
    "Answer again, following the required output format exactly."
)

PARSERS: dict[MessageKind, Callable[[str], object]] = {
    MessageKind.REQUIREMENT_DOC: parse_structured_doc,
    MessageKind.DESIGN_DOC: parse_structured_doc,
    MessageKind.TEST_PLAN: parse_structured_doc,
    MessageKind.DEPLOYMENT_NOTE: parse_structured_doc,
    MessageKind.SPRINT_PLAN: parse_structured_doc,
    MessageKind.SPRINT_RETRO: parse_structured_doc,
    MessageKind.CODE_BUNDLE: parse_code_bundle,
    MessageKind.TEST_REPORT: parse_test_report,
}


@dataclass
class AgentOutput:
    kind: MessageKind
    parsed: object
    text: str
    prompt: str
    attempts: int


@dataclass
class RoleAgent:
    """One role of a run: a pool subscription plus template-driven LLM calls.

    Agents keep no state beyond their inbox of observed messages.
    """

    role: RoleKind
    config: RunConfig
    subscription: Subscription
    inbox: list[Message] = field(default_factory=list)

    def observe(self, pool: MessagePool) -> list[Message]:
        fresh = pool.poll(self.subscription)
        self.inbox.extend(fresh)
        return fresh

    def latest(self, kind: MessageKind, **meta) -> Message | None:
        for msg in reversed(self.inbox):
            if msg.kind is kind and all(msg.meta.get(k) == v for k, v in meta.items()):
                return msg
        return None

    def act(
        self,
        phase: Phase,
        produces: MessageKind,
        bindings: Mapping[str, Binding],
        backend: Backend,
        ledger: TokenLedger,
        live_retries: int = 0,
    ) -> AgentOutput:
        """Render, call the model and parse; re-prompt on unparseable output.

        Every call, including repair calls, is charged to ``ledger``. Raises the
        last OutputError once ``max_repair_attempts`` repairs are used up.
        """
        cfg = self.config
        template = load_template(cfg.process, self.role, phase.kind)
        prompt = render(template, bindings, cfg.limits.max_context_chars)
        parser = PARSERS[produces]
        user_prompt = prompt
        attempt = 0
        while True:
            req = CompletionRequest(
                model_label=cfg.model_label,
                system_prompt=SYSTEM_PROMPTS[self.role],
                user_prompt=user_prompt,
                temperature=cfg.temperature,
                key=PlaybackKey(
                    cfg.project.id, cfg.process.value, self.role.value,
                    phase.kind.value, phase.sprint_index, attempt,
                ),
                seed=cfg.seed,
            )
            resp = complete(backend, req, retries=live_retries)
            ledger.record(self.role, phase, resp)
            try:
                parsed = parser(resp.text)
            except OutputError as exc:
                if attempt >= cfg.limits.max_repair_attempts:
                    raise
                log.info("%s %s: repairing unparseable output (%s)", self.role, phase, exc)
                attempt += 1
                user_prompt = prompt + REPAIR_SUFFIX.format(error=exc)
                continue
            return AgentOutput(produces, parsed, resp.text, prompt, attempt + 1)


def make_agents(pool: MessagePool, config: RunConfig, consumes: Mapping[RoleKind, set[MessageKind]]) -> dict[RoleKind, RoleAgent]:
    return {
        role: RoleAgent(role, config, pool.subscribe(role, kinds=kinds))
        for role, kinds in consumes.items()
    }

