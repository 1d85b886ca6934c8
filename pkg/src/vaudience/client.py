"""Participant/presenter runtime: join, react, track broadcasts, render audio.

The view update logic is plain functions over a ClientView so it can be
tested without sockets. HeadlessClient wires those functions to a real
transport and drives the render loop; the transport reader is the only
writer to the view, and the render loop only ever reads snapshots, so a
stalled network never stalls audio.
"""

from __future__ import annotations

import asyncio
import logging
from dataclasses import dataclass, field

from . import wire
from .audio_io import AudioBlock, open_sink
from .state import (
    AggregateSummary,
    AudienceError,
    AudienceState,
    Mode,
    ReactionKind,
    Role,
    StateDelta,
    aggregate,
    apply_delta,
    set_bit,
)
from .synth import CrowdRenderer, SynthesisParams, VoiceBankConfig, params_from_summary
from .transport import ConnectFailed, open_transport

log = logging.getLogger(__name__)


class NotJoined(AudienceError):
    pass


class PresenterCannotReact(AudienceError):
    pass


class JoinRejected(AudienceError):
    def __init__(self, code: int):
        super().__init__(wire.ERROR_NAMES.get(code, f"error code {code}"))
        self.code = code


class ProtocolViolation(AudienceError):
    pass


@dataclass
class ClientConfig:
    server_address: str = "127.0.0.1:8765"
    role: Role = Role.AUDIENCE
    name: str = "guest"
    sink: str | None = None
    block_ms: int = 10
    heartbeat_ms: int = 2000
    connect_timeout_ms: int = 5000
    sample_rate: int = 48000


@dataclass
class ClientView:
    """What this client currently knows about itself and the audience."""

    my_id: int = 0
    my_mask: int = 0
    role: Role = Role.AUDIENCE
    mode: Mode = Mode.AGGREGATE
    broadcast_interval_ms: int = 0
    latest_summary: AggregateSummary = field(default_factory=AggregateSummary)
    latest_roster: AudienceState | None = None
    connection_state: str = "connecting"  # connecting | joined | closed
    needs_resync: bool = False


def apply_server_message(view: ClientView, msg: wire.Message) -> bool:
    """Fold one server message into the view; True if the summary changed.

    Versions at or below the view's current one are stale repeats
    (keepalives, reordering) and are ignored. Version 0 always describes the
    empty state, which is what a fresh view already holds.
    """
    if isinstance(msg, wire.Broadcast):
        if msg.version <= view.latest_summary.version:
            return False
        view.latest_summary = AggregateSummary(msg.counts, msg.total, msg.version)
        return True
    if isinstance(msg, wire.FullState):
        if view.latest_roster is not None and msg.version <= view.latest_roster.version:
            return False
        view.latest_roster = AudienceState(dict(msg.entries), msg.version)
        view.latest_summary = aggregate(view.latest_roster)
        view.needs_resync = False
        return True
    if isinstance(msg, wire.RosterDelta):
        if view.latest_roster is None or msg.from_version != view.latest_roster.version:
            if msg.to_version > view.latest_summary.version:
                view.needs_resync = True  # base lost; a reconnect or full state heals it
            return False
        delta = StateDelta(msg.from_version, msg.to_version, msg.changes)
        view.latest_roster = apply_delta(view.latest_roster, delta)
        view.latest_summary = aggregate(view.latest_roster)
        return True
    return False


def toggled_mask(view: ClientView, kind: ReactionKind, active: bool) -> int:
    if view.connection_state != "joined":
        raise NotJoined("cannot react before the welcome arrives")
    if view.role == Role.PRESENTER:
        raise PresenterCannotReact("presenters only listen")
    return set_bit(view.my_mask, kind, active)


class HeadlessClient:
    """Network client suitable for terminals, tests, and the simulator."""

    def __init__(self, config: ClientConfig, transport_factory=None, on_summary=None):
        self.config = config
        self.view = ClientView(role=config.role)
        self._transport_factory = transport_factory
        self._transport = None
        self._reader_task: asyncio.Task | None = None
        self._heartbeat_task: asyncio.Task | None = None
        self.on_summary = on_summary
        self.updates_sent = 0
        self._closed = asyncio.Event()

    async def connect_and_join(self) -> ClientView:
        if self._transport_factory is not None:
            self._transport = await self._transport_factory()
        else:
            self._transport = await open_transport(
                self.config.server_address, self.config.connect_timeout_ms / 1000.0
            )
        await self._transport.send(
            wire.encode_message(wire.Join(self.config.role, self.config.name))
        )
        try:
            first = wire.decode_message(await self._transport.recv())
        except wire.CodecError as exc:
            raise ProtocolViolation(f"undecodable welcome: {exc}") from exc
        except Exception as exc:
            raise ConnectFailed(f"connection lost during join: {exc}") from exc
        if isinstance(first, wire.ErrorMessage):
            raise JoinRejected(first.code)
        if not isinstance(first, wire.Welcome):
            raise ProtocolViolation(f"expected welcome, got {type(first).__name__}")
        self.view.my_id = first.participant_id
        self.view.mode = first.mode
        self.view.broadcast_interval_ms = first.broadcast_interval_ms
        self.view.connection_state = "joined"
        self._reader_task = asyncio.create_task(self._read_loop())
        self._heartbeat_task = asyncio.create_task(self._heartbeat_loop())
        return self.view

    async def set_reaction(self, kind: ReactionKind, active: bool) -> None:
        mask = toggled_mask(self.view, kind, active)
        if mask == self.view.my_mask:
            return  # no change, nothing on the wire
        self.view.my_mask = mask
        await self._transport.send(wire.encode_message(wire.Update(mask)))
        self.updates_sent += 1

    async def _read_loop(self) -> None:
        try:
            while True:
                payload = await self._transport.recv()
                try:
                    msg = wire.decode_message(payload)
                except wire.CodecError as exc:
                    log.error("closing on undecodable frame: %s", exc)
                    break
                if isinstance(msg, wire.ErrorMessage):
                    log.warning("server error: %s", wire.ERROR_NAMES.get(msg.code, msg.code))
                    continue
                if apply_server_message(self.view, msg) and self.on_summary is not None:
                    self.on_summary(self.view.latest_summary)
        except Exception:
            pass
        finally:
            self.view.connection_state = "closed"
            self._closed.set()

    async def _heartbeat_loop(self) -> None:
        payload = wire.encode_message(wire.Heartbeat())
        while True:
            await asyncio.sleep(self.config.heartbeat_ms / 1000.0)
            try:
                await self._transport.send(payload)
            except Exception:
                return

    async def run_render_loop(
        self,
        sink=None,
        duration_s: float | None = None,
        voice_config: VoiceBankConfig | None = None,
        pace: bool = True,
    ) -> int:
        """Feed the local renderer from the latest summary until closed.

        Audio is gapless by construction: every block is rendered from the
        most recent snapshot without waiting on the network. Returns the
        number of samples written.
        """
        if self.view.connection_state != "joined":
            raise NotJoined("render loop needs a joined session")
        sr = self.config.sample_rate
        own_sink = sink is None
        if own_sink:
            sink = open_sink(self.config.sink, sr)
        block = max(1, int(self.config.block_ms * sr / 1000))
        params = params_from_summary(self.view.latest_summary, sample_rate=sr,
                                     seed=self.view.my_id)
        renderer = CrowdRenderer(params, voice_config)
        total = duration_s and int(duration_s * sr)
        written = 0
        loop = asyncio.get_running_loop()
        next_deadline = loop.time()
        try:
            while total is None or written < total:
                if self.view.connection_state == "closed" and total is None:
                    break
                n = block if total is None else min(block, total - written)
                params = params_from_summary(self.view.latest_summary, sample_rate=sr,
                                             seed=self.view.my_id)
                sink.write(renderer.render_block(n, params=params))
                written += n
                if pace:
                    next_deadline += n / sr
                    delay = next_deadline - loop.time()
                    if delay > 0:
                        await asyncio.sleep(delay)
                else:
                    await asyncio.sleep(0)
        finally:
            if own_sink:
                sink.close()
        return written

    async def close(self) -> None:
        if self._heartbeat_task is not None:
            self._heartbeat_task.cancel()
        if self._transport is not None:
            try:
                await self._transport.send(wire.encode_message(wire.Leave()))
            except Exception:
                pass
            await self._transport.close()
        if self._reader_task is not None:
            self._reader_task.cancel()
            try:
                await self._reader_task
            except asyncio.CancelledError:
                pass
        self.view.connection_state = "closed"
