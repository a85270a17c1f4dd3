"""Shared publish/subscribe message pool for the agents of one run.

The pool is an append-only log. Subscribers pull with :meth:`MessagePool.poll`;
each poll returns the matching messages published since the subscription's
cursor and moves the cursor to the end of the log.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .domain import MessageKind, Phase, RoleKind
from .errors import PoolClosed, UnknownSubscription


@dataclass(frozen=True)
class Message:
    id: int
    sender: RoleKind
    phase: Phase
    kind: MessageKind
    content: str
    artifact_refs: tuple[str, ...] = ()
    send_to: frozenset[RoleKind] = frozenset()
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    def addressed_to(self, role: RoleKind) -> bool:
        return not self.send_to or role in self.send_to

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "sender": self.sender.value,
            "phase": self.phase.to_dict(),
            "kind": self.kind.value,
            "content": self.content,
            "artifact_refs": list(self.artifact_refs),
            "send_to": sorted(r.value for r in self.send_to),
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Message":
        return cls(
            id=d["id"],
            sender=RoleKind(d["sender"]),
            phase=Phase.from_dict(d["phase"]),
            kind=MessageKind(d["kind"]),
            content=d["content"],
            artifact_refs=tuple(d.get("artifact_refs", ())),
            send_to=frozenset(RoleKind(r) for r in d.get("send_to", ())),
            meta=d.get("meta", {}),
        )


@dataclass
class Subscription:
    subscriber: RoleKind
    kinds: Optional[frozenset[MessageKind]] = None  # None = any kind
    senders: Optional[frozenset[RoleKind]] = None  # None = any sender
    cursor: int = 0
    sub_id: int = 0

    def matches(self, msg: Message) -> bool:
        if self.kinds is not None and msg.kind not in self.kinds:
            return False
        if self.senders is not None and msg.sender not in self.senders:
            return False
        return msg.addressed_to(self.subscriber)


class MessagePool:
    def __init__(self):
        self._lock = threading.Lock()
        self._log: list[Message] = []
        self._subs: dict[int, Subscription] = {}
        self._closed = False

    def publish(
        self,
        sender: RoleKind,
        phase: Phase,
        kind: MessageKind,
        content: str,
        artifact_refs: Iterable[str] = (),
        send_to: Iterable[RoleKind] = (),
        meta: Optional[dict] = None,
    ) -> Message:
        with self._lock:
            if self._closed:
                raise PoolClosed("run has completed; pool is closed")
            msg = Message(
                id=len(self._log) + 1,
                sender=sender,
                phase=phase,
                kind=kind,
                content=content,
                artifact_refs=tuple(artifact_refs),
                send_to=frozenset(send_to),
                meta=dict(meta or {}),
            )
            self._log.append(msg)
            return msg

    def subscribe(
        self,
        subscriber: RoleKind,
        kinds: Optional[Iterable[MessageKind]] = None,
        senders: Optional[Iterable[RoleKind]] = None,
    ) -> Subscription:
        with self._lock:
            sub = Subscription(
                subscriber=subscriber,
                kinds=frozenset(kinds) if kinds is not None else None,
                senders=frozenset(senders) if senders is not None else None,
                sub_id=len(self._subs) + 1,
            )
            self._subs[sub.sub_id] = sub
            return sub

    def poll(self, sub: Subscription) -> list[Message]:
        with self._lock:
            if self._subs.get(sub.sub_id) is not sub:
                raise UnknownSubscription(sub.sub_id)
            fresh = self._log[sub.cursor:]
            sub.cursor = len(self._log)
        return [m for m in fresh if sub.matches(m)]

    def transcript(self) -> list[Message]:
        with self._lock:
            return list(self._log)

    def close(self):
        with self._lock:
            self._closed = True

    @property
    def closed(self) -> bool:
        return self._closed

    def __len__(self) -> int:
        return len(self._log)


def dump_transcript(messages: Iterable[Message], path: str | Path):
    """Write messages as JSON Lines, one message per line."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for msg in messages:
            fh.write(json.dumps(msg.to_dict(), sort_keys=True, ensure_ascii=False))
            fh.write("\n")


def load_transcript(path: str | Path) -> list[Message]:
    with open(path, encoding="utf-8") as fh:
        return [Message.from_dict(json.loads(line)) for line in fh if line.strip()]
