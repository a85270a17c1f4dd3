import threading

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scaffoldlab.domain import MessageKind, Phase, PhaseKind, RoleKind
from scaffoldlab.errors import PoolClosed, UnknownSubscription
from scaffoldlab.pool import MessagePool, dump_transcript, load_transcript

PH = Phase(PhaseKind.DESIGN)
kinds = st.sampled_from(list(MessageKind))
roles = st.sampled_from(list(RoleKind))


def pub(pool, kind=MessageKind.DESIGN_DOC, sender=RoleKind.DESIGNER, **kw):
    return pool.publish(sender, PH, kind, "x", **kw)


def test_ids_start_at_one_and_increase():
    pool = MessagePool()
    assert pub(pool).id == 1
    assert pub(pool).id == 2


def test_publish_after_close():
    pool = MessagePool()
    pool.close()
    with pytest.raises(PoolClosed):
        pub(pool)


def test_poll_filter_and_cursor():
    pool = MessagePool()
    sub = pool.subscribe(RoleKind.DEVELOPER, kinds={MessageKind.DESIGN_DOC})
    assert pool.poll(sub) == []
    pub(pool, MessageKind.REQUIREMENT_DOC, RoleKind.PROJECT_MANAGER)
    d = pub(pool)
    assert pool.poll(sub) == [d]
    assert sub.cursor == 2
    assert pool.poll(sub) == []


def test_sender_filter_and_routing():
    pool = MessagePool()
    only_pm = pool.subscribe(RoleKind.DESIGNER, senders={RoleKind.PROJECT_MANAGER})
    tester = pool.subscribe(RoleKind.TESTER)
    a = pub(pool, MessageKind.REQUIREMENT_DOC, RoleKind.PROJECT_MANAGER)
    pub(pool, send_to=[RoleKind.DEVELOPER])
    assert pool.poll(only_pm) == [a]
    assert pool.poll(tester) == [a]


def test_unknown_subscription():
    other = MessagePool().subscribe(RoleKind.TESTER)
    with pytest.raises(UnknownSubscription):
        MessagePool().poll(other)


def test_transcript_round_trip(tmp_path):
    pool = MessagePool()
    for k in (MessageKind.REQUIREMENT_DOC, MessageKind.DESIGN_DOC, MessageKind.CODE_BUNDLE):
        pub(pool, k, artifact_refs=["a.js"], meta={"n": 1})
    assert [m.id for m in pool.transcript()] == [1, 2, 3]
    dump_transcript(pool.transcript(), tmp_path / "t.jsonl")
    assert load_transcript(tmp_path / "t.jsonl") == pool.transcript()
    assert MessagePool().transcript() == []


# an operation is either a publish of (kind, sender) or a poll of subscription i
ops = st.lists(
    st.one_of(
        st.tuples(st.just("pub"), kinds, roles),
        st.tuples(st.just("poll"), st.integers(0, 2), st.none()),
    ),
    max_size=40,
)


@settings(max_examples=1000, deadline=None)
@given(ops=ops, filters=st.lists(st.one_of(st.none(), st.sets(kinds, min_size=1)), min_size=3, max_size=3))
def test_pool_properties(ops, filters):
    pool = MessagePool()
    subs = [pool.subscribe(RoleKind.DEVELOPER, kinds=f) for f in filters]
    seen = [[] for _ in subs]
    previous = []
    n_pub = 0
    for op, a, b in ops:
        if op == "pub":
            pool.publish(b, PH, a, "c")
            n_pub += 1
        else:
            before = subs[a].cursor
            seen[a].extend(pool.poll(subs[a]))
            assert subs[a].cursor >= before
        now = pool.transcript()
        assert now[: len(previous)] == previous  # append-only prefix
        previous = now
    log = pool.transcript()
    assert len(log) == n_pub
    assert [m.id for m in log] == list(range(1, n_pub + 1))
    for sub, got in zip(subs, seen):
        got.extend(pool.poll(sub))
        expected = [m for m in log if sub.kinds is None or m.kind in sub.kinds]
        assert got == expected  # nothing lost, nothing twice, id order


def test_concurrent_publishers_and_pollers():
    pool = MessagePool()
    sub = pool.subscribe(RoleKind.DEVELOPER)
    got = []
    n_threads, per_thread = 8, 250
    done = threading.Event()

    def publisher(i):
        for j in range(per_thread):
            pool.publish(RoleKind.DESIGNER, PH, MessageKind.DESIGN_DOC, f"{i}-{j}")

    def poller():
        while not done.is_set():
            got.extend(pool.poll(sub))
        got.extend(pool.poll(sub))

    reader = threading.Thread(target=poller)
    reader.start()
    writers = [threading.Thread(target=publisher, args=(i,)) for i in range(n_threads)]
    for w in writers:
        w.start()
    for w in writers:
        w.join()
    done.set()
    reader.join()
    log = pool.transcript()
    assert [m.id for m in log] == list(range(1, n_threads * per_thread + 1))
    assert got == log
    assert len({m.content for m in log}) == n_threads * per_thread
