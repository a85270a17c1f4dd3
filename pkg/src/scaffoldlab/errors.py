"""Exception hierarchy shared across the package."""

from __future__ import annotations


class ScaffoldError(Exception):
    """Base class for every error raised by scaffoldlab."""


class UnknownProcessModel(ScaffoldError, ValueError):
    def __init__(self, name: str):
        super().__init__(f"unknown process model: {name!r}")
        self.name = name


class ConfigError(ScaffoldError):
    pass


# message pool

class PoolClosed(ScaffoldError):
    pass


class UnknownSubscription(ScaffoldError, KeyError):
    pass


# llm gateway

class GatewayError(ScaffoldError):
    pass


class ProviderError(GatewayError):
    def __init__(self, status: int, body: str):
        super().__init__(f"provider returned HTTP {status}: {body[:200]}")
        self.status = status
        self.body = body

    @property
    def transient(self) -> bool:
        return self.status == 429 or self.status >= 500


class PlaybackMiss(GatewayError, KeyError):
    def __init__(self, key):
        super().__init__(f"no playback entry for {key}")
        self.key = key

    def __str__(self) -> str:
        return self.args[0]


class Timeout(GatewayError):
    pass


# agents

class MissingBinding(ScaffoldError, KeyError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self) -> str:
        return f"template placeholder {{{self.name}}} is not bound"


class UnknownPlaceholder(ScaffoldError, ValueError):
    pass


class ContextOverflow(ScaffoldError):
    pass


class OutputError(ScaffoldError):
    """Agent output that could not be turned into an artifact."""


class MalformedDoc(OutputError):
    def __init__(self, position: int, detail: str = ""):
        msg = f"malformed document at position {position}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.position = position


class NoCodeBlocks(OutputError):
    pass


class EmptyReport(OutputError):
    pass


# workspace

class PathEscape(ScaffoldError, ValueError):
    pass


class IoFailure(ScaffoldError, OSError):
    pass


class DuplicateSnapshot(ScaffoldError):
    def __init__(self, sprint_index: int):
        super().__init__(f"snapshot for sprint {sprint_index} already exists")
        self.sprint_index = sprint_index


# engines

class RunFailed(ScaffoldError):
    def __init__(self, phase, cause: BaseException | str, sprint: int | None = None):
        self.phase = phase
        self.cause = cause
        self.sprint = sprint
        where = f"sprint {sprint}, {phase}" if sprint is not None else f"{phase}"
        super().__init__(f"run failed in {where}: {cause}")


class MissingPlan(RunFailed):
    def __init__(self, phase, sprint: int | None = None):
        super().__init__(phase, f"no test plan was authored for {phase}", sprint)


# analytics

class EmptyInput(ScaffoldError, ValueError):
    pass


class InsufficientData(ScaffoldError, ValueError):
    pass


class UnknownMetric(ScaffoldError, KeyError):
    def __str__(self) -> str:
        return f"unknown metric: {self.args[0]!r}"


class ConvergenceError(ScaffoldError, ArithmeticError):
    pass


# harness

class UnknownRun(ScaffoldError, KeyError):
    def __str__(self) -> str:
        return f"no run record for run_id {self.args[0]!r}"


class MalformedFile(ScaffoldError, ValueError):
    pass
