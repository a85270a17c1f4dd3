import json
import math

import httpx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scaffoldlab.domain import Phase, PhaseKind, RoleKind
from scaffoldlab.errors import PlaybackMiss, ProviderError, Timeout
from scaffoldlab.gateway import (
    CompletionRequest,
    CompletionResponse,
    OpenAICompatBackend,
    PlaybackBackend,
    PlaybackKey,
    TokenLedger,
    approx_tokens,
    complete,
    record,
)

KEY = PlaybackKey("snake-game", "waterfall", "Designer", "Design", None, 0)


def req(key=KEY, **kw):
    return CompletionRequest("mock", "sys", "user prompt", key=key, **kw)


def entry(**kw):
    base = {"project": "snake-game", "process": "waterfall", "role": "Designer",
            "phase": "Design", "sprint": None, "attempt": 0}
    return {**base, **kw}


def test_playback_with_counts():
    be = PlaybackBackend.from_entries([entry(text="hello", prompt_tokens=5, completion_tokens=2)])
    resp = be.complete(req())
    assert (resp.text, resp.prompt_tokens, resp.completion_tokens) == ("hello", 5, 2)


def test_playback_fallback_heuristic():
    be = PlaybackBackend.from_entries([entry(text="12345678")])
    resp = be.complete(req())
    assert resp.completion_tokens == 2
    assert resp.prompt_tokens == approx_tokens("sys" + "user prompt")
    assert resp.latency == 0.0


@pytest.mark.parametrize("n,expected", [(0, 0), (1, 1), (4, 1), (5, 2), (8, 2), (9, 3)])
def test_approx_tokens(n, expected):
    assert approx_tokens("x" * n) == expected


def test_playback_miss():
    be = PlaybackBackend.from_entries([entry(text="a")])
    with pytest.raises(PlaybackMiss):
        be.complete(req(PlaybackKey("snake-game", "waterfall", "Designer", "Design", None, 1)))
    with pytest.raises(PlaybackMiss):
        be.complete(req(key=None))


def test_playback_load(tmp_path):
    f = tmp_path / "pb.json"
    f.write_text(json.dumps({"model": "m", "entries": [entry(text="hi", latency=1.5)]}))
    be = PlaybackBackend.load(f)
    assert be.label == "m"
    assert be.complete(req()).latency == 1.5


def test_request_validation():
    with pytest.raises(ValueError):
        CompletionRequest("m", "", "u")
    with pytest.raises(ValueError):
        CompletionRequest("m", "s", "u", temperature=-0.1)


def _live(handler, monkeypatch, key="sk-test"):
    monkeypatch.setenv("TEST_LLM_KEY", key)
    return OpenAICompatBackend("https://llm.example/v1/", "TEST_LLM_KEY",
                               transport=httpx.MockTransport(handler))


def test_live_wire_format(monkeypatch):
    seen = {}

    def handler(request: httpx.Request):
        seen["url"] = str(request.url)
        seen["auth"] = request.headers.get("authorization")
        seen["body"] = json.loads(request.content)
        return httpx.Response(200, json={
            "choices": [{"message": {"role": "assistant", "content": "done"}}],
            "usage": {"prompt_tokens": 11, "completion_tokens": 4},
        })

    be = _live(handler, monkeypatch)
    resp = be.complete(req(temperature=0.0, seed=3))
    assert seen["url"] == "https://llm.example/v1/chat/completions"
    assert seen["auth"] == "Bearer sk-test"
    body = seen["body"]
    assert body["messages"] == [{"role": "system", "content": "sys"}, {"role": "user", "content": "user prompt"}]
    assert body["model"] == "mock" and body["seed"] == 3 and body["temperature"] == 0.0
    assert (resp.text, resp.prompt_tokens, resp.completion_tokens) == ("done", 11, 4)
    assert resp.latency >= 0
    assert "sk-test" not in repr(be.__dict__)


def test_live_provider_error(monkeypatch):
    be = _live(lambda r: httpx.Response(401, text="bad key"), monkeypatch)
    with pytest.raises(ProviderError) as exc:
        be.complete(req())
    assert exc.value.status == 401 and not exc.value.transient


def test_live_timeout(monkeypatch):
    def handler(r):
        raise httpx.ReadTimeout("slow", request=r)

    with pytest.raises(Timeout):
        _live(handler, monkeypatch).complete(req())


def test_retries_transient_then_succeeds(monkeypatch):
    calls = []

    def handler(r):
        calls.append(1)
        if len(calls) < 3:
            return httpx.Response(503, text="busy")
        return httpx.Response(200, json={"choices": [{"message": {"content": "ok"}}], "usage": {}})

    delays = []
    resp = complete(_live(handler, monkeypatch), req(), retries=2, backoff=0.5, sleep=delays.append)
    assert resp.text == "ok"
    assert delays == [0.5, 1.0]


def test_retries_exhausted_and_permanent(monkeypatch):
    be = _live(lambda r: httpx.Response(429, text="slow down"), monkeypatch)
    with pytest.raises(ProviderError):
        complete(be, req(), retries=1, sleep=lambda s: None)
    calls = []

    def bad(r):
        calls.append(1)
        return httpx.Response(400, text="bad request")

    with pytest.raises(ProviderError):
        complete(_live(bad, monkeypatch), req(), retries=5, sleep=lambda s: None)
    assert len(calls) == 1


PH = Phase(PhaseKind.DESIGN)


def resp(p, c, lat=0.0):
    return CompletionResponse("t", p, c, lat)


def test_ledger_examples():
    led = record(TokenLedger(), RoleKind.DESIGNER, PH, resp(10, 20))
    assert led.total_tokens() == 30
    led = TokenLedger()
    for p, c in ((10, 20), (5, 5), (0, 0)):
        led.record(RoleKind.DESIGNER, PH, resp(p, c))
    assert led.total_tokens() == 40
    led = TokenLedger()
    led.record(RoleKind.DESIGNER, PH, resp(0, 0, 1.0))
    led.record(RoleKind.DESIGNER, PH, resp(0, 0, 2.5))
    assert led.total_latency() == 3.5


@settings(max_examples=300)
@given(st.lists(st.tuples(st.integers(0, 10**6), st.integers(0, 10**6),
                          st.floats(0, 1e4, allow_nan=False)), max_size=50))
def test_ledger_is_a_fold(items):
    led = TokenLedger()
    for p, c, lat in items:
        led.record(RoleKind.TESTER, PH, resp(p, c, lat))
    assert led.total_tokens() == sum(p + c for p, c, _ in items)
    assert led.total_latency() == math.fsum(lat for *_, lat in items)
    assert led.to_dict()["total_tokens"] == led.total_tokens()
