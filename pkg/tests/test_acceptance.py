"""Acceptance gate: every release-blocking criterion at its stated tolerance.

Each test is marked with the criterion it verifies; the terminal summary
prints one PASS/FAIL line per criterion. Budgeted runtimes are asserted
where the criterion states one.
"""

import random
import time

import numpy as np
import pytest

from vaudience import wire
from vaudience.client import ClientView, apply_server_message
from vaudience.harness import (
    Scenario,
    ScenarioEvent,
    NetworkProfile,
    run_scenario,
)
from vaudience.server import Session, SessionConfig
from vaudience.state import (
    AudienceState,
    Mode,
    ReactionKind,
    Role,
    StateDelta,
    apply_delta,
    diff,
)
from vaudience.synth import CrowdRenderer, SynthesisParams, build_prompt
from vaudience.state import AggregateSummary

SR = 48000


# --- criterion 1: wire overhead at scale ------------------------------------


def _toggle_scenario(n_clients: int, duration_s: float) -> Scenario:
    """Every client toggles one reaction once per second, staggered."""
    events = []
    for i in range(n_clients):
        kind = ReactionKind(i % 4)
        offset = 0.5 + (i % 100) * 0.009
        t, active = offset, True
        while t < duration_s - 0.6:
            events.append(ScenarioEvent(round(t, 3), i, kind, active))
            active = not active
            t += 1.0
    events.sort(key=lambda ev: ev.time_s)
    return Scenario(n_clients, duration_s, tuple(events))


@pytest.mark.criterion("overhead: <=10 B/s upstream per client, 19-byte broadcasts, N=100")
def test_overhead_at_100_clients():
    scenario = _toggle_scenario(100, 60.0)
    started = time.monotonic()
    report = run_scenario(scenario, SessionConfig(mode=Mode.AGGREGATE), seed=1)
    elapsed = time.monotonic() - started
    assert report.final_state_matches_oracle
    assert report.upstream_bytes_per_client_per_s <= 10.0, report.to_kv_text()
    assert report.broadcast_frame_sizes, "no broadcasts captured"
    assert all(size == 19 for size in report.broadcast_frame_sizes)
    # fan-out per client is bounded by the tick rate alone, independent of N
    assert report.broadcast_bytes_per_client_per_s <= 19 * (1000 / 200) + 2
    assert elapsed <= 90.0, f"run took {elapsed:.1f} s"


# --- criterion 2: merge/broadcast correctness against the replay oracle -----


def _random_session_trial(trial_seed: int) -> None:
    rng = random.Random(trial_seed)
    n = rng.choice([rng.randint(1, 20), rng.randint(1, 80), rng.randint(100, 200)])
    mode = Mode.AGGREGATE if trial_seed % 2 == 0 else Mode.ROSTER
    config = SessionConfig(mode=mode)
    session = Session(config, now_ms=0.0)
    now = 0.0

    views: dict[int, ClientView] = {}
    for i in range(n):
        pid, welcome = session.join(Role.AUDIENCE, f"p{i}", now)
        view = ClientView(my_id=pid, mode=welcome.mode, connection_state="joined")
        apply_server_message(view, session.welcome_state(pid))
        views[pid] = view
    if rng.random() < 0.3:
        pid, welcome = session.join(Role.PRESENTER, "host", now)
        view = ClientView(my_id=pid, role=Role.PRESENTER, mode=welcome.mode,
                          connection_state="joined")
        apply_server_message(view, session.welcome_state(pid))
        views[pid] = view

    def deliver(messages):
        for pid, msg in messages:
            apply_server_message(views[pid], wire.decode_message(wire.encode_message(msg)))

    audience_ids = sorted(session.state.entries)
    final_masks = {pid: 0 for pid in audience_ids}
    for _ in range(rng.randint(0, 50)):
        now += rng.choice([5.0, 40.0, 130.0, 300.0])
        pid = rng.choice(audience_ids)
        mask = rng.randrange(16)
        session.handle_update(pid, mask, now)
        final_masks[pid] = mask  # oracle: last write per participant wins
        if rng.random() < 0.4:
            deliver(session.tick_broadcast(now))

    # quiesce: run ticks past the debounce window until everything settles
    now += config.debounce_ms + 1
    deliver(session.tick_broadcast(now))
    now += config.broadcast_interval_ms
    deliver(session.tick_broadcast(now))

    expected_counts = tuple(
        sum(1 for m in final_masks.values() if m >> k & 1) for k in range(4)
    )
    expected_total = len(audience_ids)
    for pid, view in views.items():
        assert view.latest_summary.counts == expected_counts, (trial_seed, pid)
        assert view.latest_summary.total == expected_total
        if mode == Mode.ROSTER:
            assert dict(view.latest_roster.entries) == {
                p: m for p, m in final_masks.items()
            }


@pytest.mark.criterion("merge/broadcast: 1000 random sessions equal the replay oracle")
def test_merge_correctness_1000_random_sessions():
    started = time.monotonic()
    for trial in range(1000):
        _random_session_trial(trial)
    elapsed = time.monotonic() - started
    assert elapsed <= 120.0, f"suite took {elapsed:.1f} s"


# --- criterion 3: codec and delta round-trips --------------------------------


def _random_message(rng: random.Random) -> wire.Message:
    pick = rng.randrange(9)
    if pick == 0:
        name = "".join(rng.choice("abcdef ghij") for _ in range(rng.randrange(20)))
        return wire.Join(rng.choice([Role.AUDIENCE, Role.PRESENTER]), name)
    if pick == 1:
        return wire.Update(rng.randrange(16))
    if pick == 2:
        return wire.Heartbeat()
    if pick == 3:
        return wire.Leave()
    if pick == 4:
        return wire.Welcome(rng.randrange(1, 2**32), rng.randrange(2**16),
                            rng.choice([Mode.AGGREGATE, Mode.ROSTER]))
    if pick == 5:
        total = rng.randrange(2**16)
        counts = tuple(rng.randint(0, total) for _ in range(4))
        return wire.Broadcast(rng.randrange(2**64), total, counts)
    if pick == 6:
        ids = rng.sample(range(1, 10_000), rng.randrange(40))
        changes = tuple(
            (pid, 0xFF if rng.random() < 0.2 else rng.randrange(16)) for pid in ids
        )
        base = rng.randrange(2**32)
        return wire.RosterDelta(base, base + rng.randrange(100), changes)
    if pick == 7:
        ids = rng.sample(range(1, 10_000), rng.randrange(40))
        entries = tuple(sorted((pid, rng.randrange(16)) for pid in ids))
        return wire.FullState(rng.randrange(2**64), entries)
    return wire.ErrorMessage(rng.randrange(256))


def _random_state(rng: random.Random, size: int, version: int) -> AudienceState:
    ids = rng.sample(range(1, 200_000), size)
    return AudienceState({pid: rng.randrange(16) for pid in ids}, version)


@pytest.mark.criterion("round-trip: codec decode(encode(m)) == m and delta identity")
def test_codec_and_delta_round_trips():
    rng = random.Random(2024)
    for _ in range(600):
        msg = _random_message(rng)
        assert wire.decode_message(wire.encode_message(msg)) == msg
    for trial in range(120):
        size_a = rng.randint(0, 1000)
        size_b = rng.randint(0, 1000)
        a = _random_state(rng, size_a, version=rng.randrange(1000))
        b = _random_state(rng, size_b, version=a.version + rng.randrange(1000))
        result = apply_delta(a, diff(a, b))
        assert result.entries == b.entries
        assert result.version == b.version
    # the empty delta is the identity
    a = _random_state(rng, 1000, version=7)
    assert apply_delta(a, diff(a, a)).entries == a.entries


# --- criterion 4: synthesis invariants ---------------------------------------


def _params(clap=0, whistle=0, boo=0, laugh=0, seed=42):
    counts = (clap, whistle, boo, laugh)
    return SynthesisParams(counts=counts, total=max(counts), sample_rate=SR, seed=seed)


def _band_fraction(x, lo, hi):
    spec = np.abs(np.fft.rfft(x)) ** 2
    freqs = np.fft.rfftfreq(len(x), 1 / SR)
    return spec[(freqs >= lo) & (freqs <= hi)].sum() / spec.sum()


@pytest.mark.criterion("synthesis: silence, determinism, loudness, limits, spectra, continuity")
def test_synthesis_invariant_suite():
    started = time.monotonic()

    # (a) all-zero state is exact digital silence
    silent = CrowdRenderer(_params()).render_block(SR).samples
    assert np.all(silent == 0.0)

    # (b) bit-identical determinism for a fixed seed
    p = _params(clap=3, whistle=2, boo=1, laugh=2)
    assert np.array_equal(
        CrowdRenderer(p).render_block(SR).samples,
        CrowdRenderer(p).render_block(SR).samples,
    )

    # (c) RMS strictly increasing over counts, per reaction
    for kind in ReactionKind:
        rms = []
        for count in (1, 2, 4, 8, 16, 32):
            out = CrowdRenderer(_params(**{kind.name.lower(): count})).render_block(SR).samples
            rms.append(float(np.sqrt(np.mean(out * out))))
        assert all(a < b for a, b in zip(rms, rms[1:])), (kind, rms)

    # (d) peak stays at or under 0.99 at the worst possible counts
    extreme = SynthesisParams(counts=(65535,) * 4, total=65535, sample_rate=SR, seed=42)
    worst = CrowdRenderer(extreme).render_block(SR).samples
    assert np.max(np.abs(worst)) <= 0.99

    # (e) band energy via the transform oracle
    whistle = CrowdRenderer(_params(whistle=4)).render_block(SR).samples
    assert _band_fraction(whistle, 1200, 3500) >= 0.80
    boo = CrowdRenderer(_params(boo=4)).render_block(SR).samples
    assert _band_fraction(boo, 0, 1500) >= 0.80

    # (f) transition continuity: no successive-sample jump above 0.25
    r = CrowdRenderer(_params(clap=4))
    first = r.render_block(SR // 2).samples
    r.transition(_params())
    second = r.render_block(SR // 2).samples
    joined = np.concatenate([first, second])
    assert np.max(np.abs(np.diff(joined))) <= 0.25
    assert np.all(joined[len(first) + int(0.2 * SR):] == 0.0)

    r = CrowdRenderer(_params())
    first = r.render_block(SR // 2).samples
    r.transition(_params(laugh=2))
    second = r.render_block(SR // 2).samples
    assert np.max(np.abs(np.diff(np.concatenate([first, second])))) <= 0.25

    elapsed = time.monotonic() - started
    assert elapsed <= 60.0, f"suite took {elapsed:.1f} s"


# --- criterion 5: prompt builder over every threshold boundary ---------------


@pytest.mark.criterion("prompt: exact strings at all threshold boundaries")
def test_prompt_boundaries_all_reactions():
    quantities = {
        0: "",
        1: "one person",
        2: "a few people",
        3: "a few people",
        4: "several people",
        10: "several people",
        11: "many people",
    }
    gerunds = ["clapping", "whistling", "booing", "laughing"]
    for kind in ReactionKind:
        for count, phrase in quantities.items():
            counts = [0, 0, 0, 0]
            counts[kind] = count
            summary = AggregateSummary(tuple(counts), total=max(count, 0), version=0)
            expected = f"{phrase} {gerunds[kind]}" if phrase else ""
            assert build_prompt(summary) == expected, (kind, count)
    mixed = AggregateSummary((2, 1, 0, 0), total=3, version=1)
    assert build_prompt(mixed) == "a few people clapping and one person whistling"
    assert build_prompt(AggregateSummary((5, 0, 0, 12), 12, 1)) == (
        "several people clapping and many people laughing"
    )


# --- criterion 6: convergence under loss and latency --------------------------


@pytest.mark.criterion("resilience: 5% loss, 50±20 ms latency, convergence < 3 s")
def test_resilience_under_impairment():
    events = []
    for i in range(20):
        kind = ReactionKind(i % 4)
        events.append(ScenarioEvent(0.3 + i * 0.05, i, kind, True))
    for i in range(0, 20, 2):
        events.append(ScenarioEvent(2.5 + i * 0.05, i, ReactionKind(i % 4), False))
    events.sort(key=lambda ev: ev.time_s)
    scenario = Scenario(20, 6.0, tuple(events), NetworkProfile(50.0, 20.0, 5.0))
    report = run_scenario(scenario, SessionConfig(mode=Mode.AGGREGATE), seed=7)
    assert report.final_state_matches_oracle
    assert report.convergence_latency_ms_max < 3000.0, report.to_kv_text()
