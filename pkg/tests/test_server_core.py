import random

import pytest

from vaudience import wire
from vaudience.server import (
    NameTooLong,
    PresenterCannotReact,
    Session,
    SessionConfig,
    SessionFull,
)
from vaudience.state import (
    AudienceState,
    Mode,
    Role,
    UnknownParticipant,
    aggregate,
    apply_delta,
    StateDelta,
)


def make_session(**overrides):
    cfg = SessionConfig(**overrides)
    return Session(cfg, now_ms=0.0)


class TestJoin:
    def test_first_audience_join(self):
        s = make_session()
        pid, welcome = s.join(Role.AUDIENCE, "alice", now_ms=0)
        assert pid == 1
        assert s.state.entries == {1: 0x00}
        assert s.state.version == 1
        assert welcome == wire.Welcome(1, 200, Mode.AGGREGATE)

    def test_presenter_join_leaves_state_alone(self):
        s = make_session()
        s.join(Role.AUDIENCE, "alice", now_ms=0)
        v = s.state.version
        pid, _ = s.join(Role.PRESENTER, "host", now_ms=0)
        assert pid == 2
        assert s.state.version == v
        assert aggregate(s.state).total == 1

    def test_name_too_long(self):
        s = make_session()
        with pytest.raises(NameTooLong):
            s.join(Role.AUDIENCE, "x" * 300, now_ms=0)

    def test_session_full(self):
        s = make_session(max_participants=2)
        s.join(Role.AUDIENCE, "a", 0)
        s.join(Role.AUDIENCE, "b", 0)
        with pytest.raises(SessionFull):
            s.join(Role.AUDIENCE, "c", 0)

    def test_ids_never_reused(self):
        s = make_session()
        pid1, _ = s.join(Role.AUDIENCE, "a", 0)
        s.leave(pid1, 0)
        pid2, _ = s.join(Role.AUDIENCE, "b", 0)
        assert pid2 == pid1 + 1


class TestHandleUpdate:
    def test_debounce_coalesces_last_writer(self):
        s = make_session()  # debounce 100 ms
        pid, _ = s.join(Role.AUDIENCE, "a", 0)
        s.tick_broadcast(0)
        s.handle_update(pid, 0x01, now_ms=0)
        assert s.state.entries[pid] == 0x01  # first update applies immediately
        s.handle_update(pid, 0x03, now_ms=50)
        assert s.state.entries[pid] == 0x01  # inside debounce: held as pending
        msgs = s.tick_broadcast(now_ms=200)
        assert s.state.entries[pid] == 0x03
        (_, msg), *rest = msgs
        assert isinstance(msg, wire.Broadcast)
        assert msg.counts == (1, 1, 0, 0)

    def test_pending_superseded_by_later_immediate_update(self):
        s = make_session()
        pid, _ = s.join(Role.AUDIENCE, "a", 0)
        s.handle_update(pid, 0x01, 0)
        s.handle_update(pid, 0x03, 50)   # pending
        s.handle_update(pid, 0x08, 150)  # outside debounce: applies, drops pending
        assert s.state.entries[pid] == 0x08
        s.tick_broadcast(400)
        assert s.state.entries[pid] == 0x08

    def test_presenter_cannot_react(self):
        s = make_session()
        pid, _ = s.join(Role.PRESENTER, "host", 0)
        with pytest.raises(PresenterCannotReact):
            s.handle_update(pid, 0x01, 0)

    def test_unknown_participant(self):
        s = make_session()
        with pytest.raises(UnknownParticipant):
            s.handle_update(99, 0x01, 0)

    def test_noop_update_keeps_version(self):
        s = make_session()
        pid, _ = s.join(Role.AUDIENCE, "a", 0)
        s.handle_update(pid, 0x01, 0)
        v = s.state.version
        s.handle_update(pid, 0x01, 500)
        assert s.state.version == v
        s.tick_broadcast(600)
        last = s.last_broadcast_version
        assert s.tick_broadcast(800) == []  # no change, no keepalive yet
        assert s.last_broadcast_version == last


class TestTickBroadcast:
    def test_suppressed_when_unchanged(self):
        s = make_session()
        s.join(Role.AUDIENCE, "a", 0)
        assert s.tick_broadcast(0) != []
        assert s.tick_broadcast(300) == []

    def test_broadcast_counts_match_recount(self):
        s = make_session()
        ids = [s.join(Role.AUDIENCE, f"p{i}", 0)[0] for i in range(3)]
        s.tick_broadcast(0)
        s.handle_update(ids[0], 0x01, 0)
        s.handle_update(ids[1], 0x09, 0)
        msgs = s.tick_broadcast(200)
        assert len(msgs) == 3
        for _, msg in msgs:
            assert msg.counts == (2, 0, 0, 1)
            assert msg.total == 3
            assert msg.version == s.state.version

    def test_keepalive_after_quiet_period(self):
        s = make_session()
        s.join(Role.AUDIENCE, "a", 0)
        s.tick_broadcast(0)
        assert s.tick_broadcast(300) == []
        msgs = s.tick_broadcast(2100)
        assert len(msgs) == 1
        assert msgs[0][1].version == s.state.version

    def test_presenter_receives_broadcasts(self):
        s = make_session()
        s.join(Role.PRESENTER, "host", 0)
        aud, _ = s.join(Role.AUDIENCE, "a", 0)
        msgs = s.tick_broadcast(0)
        assert {pid for pid, _ in msgs} == {1, 2}

    def test_emitted_summary_equals_aggregate_oracle(self):
        rng = random.Random(7)
        s = make_session()
        ids = [s.join(Role.AUDIENCE, f"p{i}", 0)[0] for i in range(20)]
        now = 0.0
        for _ in range(30):
            now += 150
            s.handle_update(rng.choice(ids), rng.randrange(16), now)
            for _, msg in s.tick_broadcast(now):
                expected = aggregate(s.state)
                assert msg.counts == expected.counts
                assert msg.total == expected.total
                assert msg.version == expected.version

    def test_version_never_regresses(self):
        rng = random.Random(3)
        s = make_session()
        ids = [s.join(Role.AUDIENCE, f"p{i}", 0)[0] for i in range(5)]
        now, seen = 0.0, 0
        for _ in range(50):
            now += rng.choice([120, 250, 2500])
            s.handle_update(rng.choice(ids), rng.randrange(16), now)
            msgs = s.tick_broadcast(now)
            if msgs:
                v = msgs[0][1].version
                assert v >= seen
                seen = v


class TestRosterMode:
    def test_fresh_client_gets_full_state(self):
        s = make_session(mode=Mode.ROSTER)
        pid, _ = s.join(Role.AUDIENCE, "a", 0)
        msgs = s.tick_broadcast(0)
        assert isinstance(msgs[0][1], wire.FullState)

    def test_deltas_reconstruct_state(self):
        rng = random.Random(11)
        s = make_session(mode=Mode.ROSTER)
        ids = [s.join(Role.AUDIENCE, f"p{i}", 0)[0] for i in range(8)]
        shadow = None
        now = 0.0
        for _ in range(40):
            now += 250
            s.handle_update(rng.choice(ids), rng.randrange(16), now)
            for pid, msg in s.tick_broadcast(now):
                if pid != ids[0]:
                    continue
                if isinstance(msg, wire.FullState):
                    shadow = AudienceState(dict(msg.entries), msg.version)
                else:
                    delta = StateDelta(msg.from_version, msg.to_version, msg.changes)
                    shadow = apply_delta(shadow, delta)
        assert shadow is not None
        assert shadow.entries == s.state.entries
        assert shadow.version == s.state.version

    def test_keepalive_restates_full_state(self):
        s = make_session(mode=Mode.ROSTER)
        s.join(Role.AUDIENCE, "a", 0)
        s.tick_broadcast(0)
        msgs = s.tick_broadcast(2100)
        assert isinstance(msgs[0][1], wire.FullState)


class TestExpireStale:
    def test_silent_client_removed(self):
        s = make_session()
        pid, _ = s.join(Role.AUDIENCE, "a", 0)
        s.join(Role.AUDIENCE, "b", 0)
        assert s.expire_stale(16_000) == [pid, 2]

    def test_heartbeats_keep_member_alive(self):
        s = make_session()
        pid, _ = s.join(Role.AUDIENCE, "a", 0)
        for t in range(2000, 30_000, 2000):
            s.handle_heartbeat(pid, t)
            assert s.expire_stale(t) == []

    def test_expiry_clears_reactions_and_bumps_version(self):
        s = make_session()
        pid, _ = s.join(Role.AUDIENCE, "a", 0)
        s.handle_update(pid, 0x0F, 0)
        v = s.state.version
        removed = s.expire_stale(16_000)
        assert removed == [pid]
        assert pid not in s.state.entries
        assert s.state.version == v + 1
        msgs = s.tick_broadcast(16_100)
        assert msgs == []  # nobody left to notify
        assert s.last_broadcast_version == s.state.version

    def test_presenter_expiry_leaves_entries(self):
        s = make_session()
        pid, _ = s.join(Role.PRESENTER, "host", 0)
        aud, _ = s.join(Role.AUDIENCE, "a", 1000)
        v = s.state.version
        assert s.expire_stale(16_000) == [pid]
        assert s.state.version == v
        assert aud in s.state.entries


class TestWelcomeState:
    def test_aggregate_snapshot(self):
        s = make_session()
        pid, _ = s.join(Role.AUDIENCE, "a", 0)
        msg = s.welcome_state(pid)
        assert isinstance(msg, wire.Broadcast)
        assert msg.total == 1

    def test_roster_snapshot_sets_base(self):
        s = make_session(mode=Mode.ROSTER)
        pid, _ = s.join(Role.AUDIENCE, "a", 0)
        msg = s.welcome_state(pid)
        assert isinstance(msg, wire.FullState)
        assert s.roster[pid].base_version == s.state.version


class TestConfigValidation:
    def test_interval_ordering_enforced(self):
        with pytest.raises(ValueError):
            SessionConfig(debounce_ms=300)
        with pytest.raises(ValueError):
            SessionConfig(broadcast_interval_ms=5)
        with pytest.raises(ValueError):
            SessionConfig(keepalive_interval_ms=20_000)

    def test_max_participants_bound(self):
        with pytest.raises(ValueError):
            SessionConfig(max_participants=70_000)
