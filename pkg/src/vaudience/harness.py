"""Scripted crowd simulator: replays reaction scenarios against a real
server, measures wire overhead and convergence, and checks final state
against an independent replay oracle.

Network impairment is a transport shim, not a kernel tool, so runs are
reproducible anywhere. The protocol rides a reliable ordered stream, so
"loss" behaves the way packet loss behaves under such a stream: the
affected message is retransmitted after a timeout, delaying it and
everything behind it, never silently vanishing.
"""

from __future__ import annotations

import asyncio
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path

from .client import ClientConfig, HeadlessClient
from .server import SessionConfig
from .service import AudienceServer
from .state import (
    REACTION_NAMES,
    AudienceError,
    Mode,
    ReactionKind,
    Role,
    set_bit,
)
from .transport import CountingTransport, TcpFramedTransport

log = logging.getLogger(__name__)


class ParseError(AudienceError):
    pass


class ValidationError(AudienceError):
    pass


class ServerBootFailure(AudienceError):
    pass


class ConvergenceTimeout(AudienceError):
    pass


@dataclass(frozen=True)
class NetworkProfile:
    latency_ms_mean: float = 0.0
    latency_ms_jitter: float = 0.0
    loss_pct: float = 0.0


@dataclass(frozen=True)
class ScenarioEvent:
    time_s: float
    participant: int
    kind: ReactionKind
    active: bool


@dataclass(frozen=True)
class Scenario:
    participants: int
    duration_s: float
    events: tuple[ScenarioEvent, ...] = ()
    network: NetworkProfile = NetworkProfile()

    def __post_init__(self) -> None:
        if self.participants < 1:
            raise ValidationError("need at least one participant")
        if self.duration_s <= 0:
            raise ValidationError("duration must be positive")
        last = -1.0
        for ev in self.events:
            if ev.time_s < last:
                raise ValidationError(f"events out of order at t={ev.time_s}")
            last = ev.time_s
            if not 0 <= ev.participant < self.participants:
                raise ValidationError(
                    f"participant index {ev.participant} outside 0..{self.participants - 1}"
                )
            if ev.time_s < 0 or ev.time_s > self.duration_s:
                raise ValidationError(f"event time {ev.time_s} outside the run")


def parse_scenario(text: str) -> Scenario:
    """Parse the line format: header keys, then '<t> <idx> <kind> <on|off>'."""
    participants = None
    duration = None
    latency = NetworkProfile().latency_ms_mean, NetworkProfile().latency_ms_jitter
    loss = 0.0
    events = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            if tokens[0] == "participants":
                participants = int(tokens[1])
            elif tokens[0] == "duration":
                duration = float(tokens[1])
            elif tokens[0] == "latency":
                latency = float(tokens[1]), float(tokens[2])
            elif tokens[0] == "loss":
                loss = float(tokens[1])
            else:
                if len(tokens) != 4:
                    raise ParseError(f"line {lineno}: expected '<t> <idx> <kind> <on|off>'")
                kind = REACTION_NAMES.get(tokens[2])
                if kind is None:
                    raise ParseError(f"line {lineno}: unknown reaction {tokens[2]!r}")
                if tokens[3] not in ("on", "off"):
                    raise ParseError(f"line {lineno}: expected on|off, got {tokens[3]!r}")
                events.append(
                    ScenarioEvent(float(tokens[0]), int(tokens[1]), kind, tokens[3] == "on")
                )
        except ParseError:
            raise
        except (ValueError, IndexError) as exc:
            raise ParseError(f"line {lineno}: {exc}") from exc
    if participants is None or duration is None:
        raise ParseError("scenario needs 'participants N' and 'duration S' headers")
    return Scenario(
        participants,
        duration,
        tuple(events),
        NetworkProfile(latency[0], latency[1], loss),
    )


def load_scenario(path: str | Path) -> Scenario:
    return parse_scenario(Path(path).read_text())


def replay_oracle(scenario: Scenario) -> list[tuple[float, tuple[int, int, int, int]]]:
    """Brute-force mask replay: expected counts after each event time.

    Ignores debounce and transport, so it is only comparable at quiescent
    points, which is exactly where the harness samples.
    """
    masks = [0] * scenario.participants
    trace = [(0.0, (0, 0, 0, 0))]
    for ev in scenario.events:
        masks[ev.participant] = set_bit(masks[ev.participant], ev.kind, ev.active)
        counts = tuple(
            sum(1 for m in masks if m >> k & 1) for k in range(4)
        )
        trace.append((ev.time_s, counts))
    return trace


def oracle_final_counts(scenario: Scenario) -> tuple[int, int, int, int]:
    return replay_oracle(scenario)[-1][1]


def oracle_final_masks(scenario: Scenario) -> list[int]:
    masks = [0] * scenario.participants
    for ev in scenario.events:
        masks[ev.participant] = set_bit(masks[ev.participant], ev.kind, ev.active)
    return masks


def oracle_peak_counts(scenario: Scenario) -> tuple[int, int, int, int]:
    trace = replay_oracle(scenario)
    return tuple(max(step[1][k] for step in trace) for k in range(4))


class ImpairedTransport:
    """Adds latency, jitter, and loss-as-retransmission around a transport.

    Delivery order is preserved per direction (reliable-stream semantics):
    a delayed message delays everything behind it.
    """

    def __init__(self, inner, profile: NetworkProfile, rng: random.Random):
        self.inner = inner
        self.profile = profile
        self.rng = rng
        self.rto_s = (200.0 + 2.0 * profile.latency_ms_mean) / 1000.0
        self._send_queue: asyncio.Queue = asyncio.Queue()
        self._recv_queue: asyncio.Queue = asyncio.Queue()
        self._send_clock = 0.0
        self._recv_clock = 0.0
        self._pump_out = asyncio.ensure_future(self._pump_send())
        self._pump_in = asyncio.ensure_future(self._pump_recv())

    def _delay_s(self) -> float:
        p = self.profile
        delay = p.latency_ms_mean / 1000.0
        if p.latency_ms_jitter:
            delay += self.rng.uniform(-p.latency_ms_jitter, p.latency_ms_jitter) / 1000.0
        while self.rng.random() * 100.0 < p.loss_pct:
            delay += self.rto_s  # dropped on the wire, resent after the timeout
        return max(0.0, delay)

    def _delivery_time(self, clock_attr: str) -> float:
        loop = asyncio.get_running_loop()
        t = loop.time() + self._delay_s()
        t = max(t, getattr(self, clock_attr))  # no reordering within a direction
        setattr(self, clock_attr, t)
        return t

    async def send(self, payload: bytes) -> None:
        await self._send_queue.put((self._delivery_time("_send_clock"), payload))

    async def _pump_send(self) -> None:
        loop = asyncio.get_running_loop()
        try:
            while True:
                due, payload = await self._send_queue.get()
                delay = due - loop.time()
                if delay > 0:
                    await asyncio.sleep(delay)
                await self.inner.send(payload)
        except asyncio.CancelledError:
            pass
        except Exception:
            pass

    async def _pump_recv(self) -> None:
        loop = asyncio.get_running_loop()
        try:
            while True:
                payload = await self.inner.recv()
                await self._recv_queue.put((self._delivery_time("_recv_clock"), payload))
        except asyncio.CancelledError:
            pass
        except Exception:
            await self._recv_queue.put((0.0, None))  # propagate close

    async def recv(self) -> bytes:
        loop = asyncio.get_running_loop()
        due, payload = await self._recv_queue.get()
        if payload is None:
            from .transport import TransportClosed

            raise TransportClosed("underlying transport closed")
        delay = due - loop.time()
        if delay > 0:
            await asyncio.sleep(delay)
        return payload

    async def close(self) -> None:
        self._pump_out.cancel()
        self._pump_in.cancel()
        await self.inner.close()


@dataclass
class MetricsReport:
    n_clients: int
    duration_s: float
    mode: str
    upstream_bytes_per_client_per_s: float
    upstream_framing_bytes_per_client_per_s: float
    broadcast_bytes_per_client_per_s: float
    broadcast_framing_bytes_per_client_per_s: float
    convergence_latency_ms_mean: float
    convergence_latency_ms_max: float
    final_state_matches_oracle: bool
    peak_counts: tuple[int, int, int, int]
    broadcast_frame_sizes: tuple[int, ...] = ()
    wall_time_s: float = 0.0

    def to_kv_text(self) -> str:
        lines = [
            f"n_clients={self.n_clients}",
            f"duration_s={self.duration_s}",
            f"mode={self.mode}",
            f"upstream_bytes_per_client_per_s={self.upstream_bytes_per_client_per_s:.3f}",
            f"upstream_framing_bytes_per_client_per_s={self.upstream_framing_bytes_per_client_per_s:.3f}",
            f"broadcast_bytes_per_client_per_s={self.broadcast_bytes_per_client_per_s:.3f}",
            f"broadcast_framing_bytes_per_client_per_s={self.broadcast_framing_bytes_per_client_per_s:.3f}",
            f"convergence_latency_ms_mean={self.convergence_latency_ms_mean:.1f}",
            f"convergence_latency_ms_max={self.convergence_latency_ms_max:.1f}",
            f"final_state_matches_oracle={str(self.final_state_matches_oracle).lower()}",
            f"peak_clap={self.peak_counts[0]}",
            f"peak_whistle={self.peak_counts[1]}",
            f"peak_boo={self.peak_counts[2]}",
            f"peak_laugh={self.peak_counts[3]}",
            f"wall_time_s={self.wall_time_s:.1f}",
        ]
        return "\n".join(lines) + "\n"

    def table(self) -> str:
        rows = [
            ("clients", str(self.n_clients)),
            ("mode", self.mode),
            ("scenario duration", f"{self.duration_s:.1f} s"),
            ("upstream payload / client", f"{self.upstream_bytes_per_client_per_s:.2f} B/s"),
            ("upstream framing / client", f"{self.upstream_framing_bytes_per_client_per_s:.2f} B/s"),
            ("broadcast payload / client", f"{self.broadcast_bytes_per_client_per_s:.2f} B/s"),
            ("broadcast framing / client", f"{self.broadcast_framing_bytes_per_client_per_s:.2f} B/s"),
            ("convergence mean", f"{self.convergence_latency_ms_mean:.0f} ms"),
            ("convergence max", f"{self.convergence_latency_ms_max:.0f} ms"),
            ("matches oracle", str(self.final_state_matches_oracle)),
            ("peak counts", "/".join(str(c) for c in self.peak_counts)),
        ]
        width = max(len(r[0]) for r in rows)
        return "\n".join(f"{name:<{width}}  {value}" for name, value in rows)


async def _run_scenario_async(
    scenario: Scenario, config: SessionConfig, seed: int
) -> MetricsReport:
    loop = asyncio.get_running_loop()
    t_start = loop.time()
    try:
        server = AudienceServer(config, ws_address=None, tcp_address="127.0.0.1:0")
        await server.start()
    except OSError as exc:
        raise ServerBootFailure(str(exc)) from exc

    peak = [0, 0, 0, 0]
    clients: list[HeadlessClient] = []
    counters = []

    def note_summary(summary):
        for k in range(4):
            peak[k] = max(peak[k], summary.counts[k])

    try:
        for i in range(scenario.participants):
            rng = random.Random((seed << 16) ^ i)

            def factory(rng=rng):
                async def connect():
                    inner = await TcpFramedTransport.connect("127.0.0.1", server.tcp_port)
                    counted = CountingTransport(inner)
                    counters.append(counted.counters)
                    return ImpairedTransport(counted, scenario.network, rng)

                return connect

            client = HeadlessClient(
                ClientConfig(role=Role.AUDIENCE, name=f"sim{i}", heartbeat_ms=2000),
                transport_factory=factory(),
                on_summary=note_summary,
            )
            await client.connect_and_join()
            clients.append(client)

        t0 = loop.time()
        last_event_at = t0 + (scenario.events[-1].time_s if scenario.events else 0.0)

        async def fire_events():
            for ev in scenario.events:
                delay = (t0 + ev.time_s) - loop.time()
                if delay > 0:
                    await asyncio.sleep(delay)
                await clients[ev.participant].set_reaction(ev.kind, ev.active)

        firing = asyncio.create_task(fire_events())

        expected_counts = oracle_final_counts(scenario)
        expected_masks = oracle_final_masks(scenario)
        expected_entries = {
            clients[i].view.my_id: m for i, m in enumerate(expected_masks)
        }
        matched_at = [None] * len(clients)

        def matched(client) -> bool:
            summary = client.view.latest_summary
            if summary.counts != expected_counts or summary.total != len(clients):
                return False
            if config.mode == Mode.ROSTER:
                roster = client.view.latest_roster
                return roster is not None and dict(roster.entries) == expected_entries
            return True

        deadline = t0 + scenario.duration_s + 5.0
        stable_since = None
        while True:
            now = loop.time()
            all_ok = True
            for i, client in enumerate(clients):
                if matched(client):
                    if matched_at[i] is None:
                        matched_at[i] = now
                else:
                    matched_at[i] = None
                    all_ok = False
            if firing.done() and all_ok:
                if stable_since is None:
                    stable_since = now
                elif now - stable_since >= 2 * config.broadcast_interval_ms / 1000.0:
                    break
            else:
                stable_since = None
            if now > deadline:
                firing.cancel()
                raise ConvergenceTimeout(
                    f"clients did not match the oracle within {scenario.duration_s + 5:.0f} s"
                )
            await asyncio.sleep(0.02)

        await firing
        # hold the session open for the scenario's full duration so rate
        # denominators are honest even when events finish early
        remaining = (t0 + scenario.duration_s) - loop.time()
        if remaining > 0:
            await asyncio.sleep(remaining)

        latencies = [max(0.0, (m - last_event_at)) * 1000.0 for m in matched_at]
        up_payload = sum(c.payload_sent for c in counters)
        up_framing = sum(c.framing_sent for c in counters)
        down_payload = sum(c.payload_received for c in counters)
        down_framing = sum(c.framing_received for c in counters)
        frame_sizes = tuple(
            size
            for c in counters
            for kind, size in c.frames_received
            if kind == 0x82  # aggregate broadcast frames
        )
        n = len(clients)
        dur = scenario.duration_s
        report = MetricsReport(
            n_clients=n,
            duration_s=dur,
            mode=config.mode.name.lower(),
            upstream_bytes_per_client_per_s=up_payload / n / dur,
            upstream_framing_bytes_per_client_per_s=up_framing / n / dur,
            broadcast_bytes_per_client_per_s=down_payload / n / dur,
            broadcast_framing_bytes_per_client_per_s=down_framing / n / dur,
            convergence_latency_ms_mean=sum(latencies) / n,
            convergence_latency_ms_max=max(latencies),
            final_state_matches_oracle=all(matched(c) for c in clients),
            peak_counts=tuple(peak),
            broadcast_frame_sizes=frame_sizes,
            wall_time_s=loop.time() - t_start,
        )
        return report
    finally:
        for client in clients:
            try:
                await client.close()
            except Exception:
                pass
        await server.stop()


def run_scenario(
    scenario: Scenario,
    server_config: SessionConfig | None = None,
    mode: Mode = Mode.AGGREGATE,
    seed: int = 0,
) -> MetricsReport:
    """Boot a server, drive the scenario with simulated clients, measure."""
    config = server_config or SessionConfig(mode=mode)
    return asyncio.run(_run_scenario_async(scenario, config, seed))
