"""Session core for the central audience server.

Holds the roster and the authoritative state, applies debounced updates,
and decides what each connected client should receive on a broadcast tick.
All methods take the current time explicitly, so the logic is deterministic
and directly testable; the network service supplies real clocks and sockets.

Mutations must be serialized by the caller (the asyncio service runs
everything on one loop). Snapshots handed out are immutable values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import wire
from .state import (
    AudienceError,
    AudienceState,
    Mode,
    Role,
    UnknownParticipant,
    add_participant,
    aggregate,
    apply_update,
    check_mask,
    diff,
    remove_participant,
)


class SessionFull(AudienceError):
    pass


class NameTooLong(AudienceError):
    pass


class PresenterCannotReact(AudienceError):
    pass


MAX_NAME_BYTES = 64


@dataclass
class SessionConfig:
    broadcast_interval_ms: int = 200
    keepalive_interval_ms: int = 2000
    client_timeout_ms: int = 15000
    debounce_ms: int = 100
    mode: Mode = Mode.AGGREGATE
    max_participants: int = 65535
    listen_address: str = "127.0.0.1:8765"

    def __post_init__(self) -> None:
        if self.broadcast_interval_ms < 10:
            raise ValueError("broadcast interval must be at least 10 ms")
        if self.broadcast_interval_ms > 0xFFFF:
            raise ValueError("broadcast interval must fit in 16 bits")
        if not (
            self.debounce_ms
            < self.broadcast_interval_ms
            <= self.keepalive_interval_ms
            < self.client_timeout_ms
        ):
            raise ValueError(
                "intervals must satisfy debounce < broadcast <= keepalive < timeout"
            )
        if not 1 <= self.max_participants <= 0xFFFF:
            raise ValueError("max participants must be in 1..65535")
        self.mode = Mode(self.mode)


@dataclass
class RosterMember:
    role: Role
    name: str
    last_seen_ms: float
    # time the member's mask last actually changed state (debounce basis)
    last_applied_ms: float = -math.inf
    pending_mask: int | None = None
    # version of the last state message sent to this client (roster mode)
    base_version: int | None = None


class Session:
    """One event's roster plus authoritative audience state."""

    def __init__(self, config: SessionConfig | None = None, now_ms: float = 0.0):
        self.config = config or SessionConfig()
        self.state = AudienceState()
        self.roster: dict[int, RosterMember] = {}
        self.last_broadcast_version = 0
        self.last_broadcast_ms = now_ms
        self._broadcast_base = self.state  # snapshot behind the last sent delta
        self._next_id = 1

    def join(self, role: Role, name: str, now_ms: float) -> tuple[int, wire.Welcome]:
        if len(self.roster) >= self.config.max_participants:
            raise SessionFull(f"session holds {len(self.roster)} participants")
        if len(name.encode("utf-8")) > MAX_NAME_BYTES:
            raise NameTooLong(f"name exceeds {MAX_NAME_BYTES} bytes")
        pid = self._next_id
        self._next_id += 1
        self.roster[pid] = RosterMember(Role(role), name, last_seen_ms=now_ms)
        if role == Role.AUDIENCE:
            self.state = add_participant(self.state, pid)
        welcome = wire.Welcome(pid, self.config.broadcast_interval_ms, self.config.mode)
        return pid, welcome

    def leave(self, pid: int, now_ms: float) -> None:
        member = self.roster.pop(pid, None)
        if member is None:
            return
        if member.role == Role.AUDIENCE and pid in self.state.entries:
            self.state = remove_participant(self.state, pid)

    def welcome_state(self, pid: int) -> wire.Message:
        """Snapshot message sent right after WELCOME so joiners start current."""
        if self.config.mode == Mode.ROSTER:
            member = self.roster[pid]
            member.base_version = self.state.version
            return wire.FullState(self.state.version, tuple(sorted(self.state.entries.items())))
        summary = aggregate(self.state)
        return wire.Broadcast(summary.version, summary.total, summary.counts)

    def handle_update(self, pid: int, mask: int, now_ms: float) -> None:
        member = self.roster.get(pid)
        if member is None:
            raise UnknownParticipant(f"participant {pid} has not joined")
        if member.role == Role.PRESENTER:
            raise PresenterCannotReact(f"participant {pid} is the presenter")
        check_mask(mask)
        member.last_seen_ms = now_ms
        if now_ms - member.last_applied_ms < self.config.debounce_ms:
            # Too soon after the last applied change: coalesce, last writer wins.
            member.pending_mask = mask
            return
        member.pending_mask = None
        self.state = apply_update(self.state, pid, mask)
        member.last_applied_ms = now_ms

    def handle_heartbeat(self, pid: int, now_ms: float) -> None:
        member = self.roster.get(pid)
        if member is None:
            raise UnknownParticipant(f"participant {pid} has not joined")
        member.last_seen_ms = now_ms

    def tick_broadcast(self, now_ms: float) -> list[tuple[int, wire.Message]]:
        """Apply pending coalesced masks, then fan out state if due.

        Emits when the version moved past the last broadcast, or as a
        keepalive repeat once keepalive_interval_ms has elapsed. Returns
        (recipient id, message) pairs; presenters are recipients too.
        """
        for pid, member in self.roster.items():
            if member.pending_mask is not None:
                self.state = apply_update(self.state, pid, member.pending_mask)
                member.pending_mask = None
                member.last_applied_ms = now_ms

        changed = self.state.version != self.last_broadcast_version
        keepalive_due = now_ms - self.last_broadcast_ms >= self.config.keepalive_interval_ms
        if not changed and not keepalive_due:
            return []

        messages: list[tuple[int, wire.Message]] = []
        if self.config.mode == Mode.AGGREGATE:
            summary = aggregate(self.state)
            msg = wire.Broadcast(summary.version, summary.total, summary.counts)
            messages = [(pid, msg) for pid in self.roster]
        else:
            full = wire.FullState(self.state.version, tuple(sorted(self.state.entries.items())))
            delta_msg = None
            if changed:
                delta = diff(self._broadcast_base, self.state)
                delta_msg = wire.RosterDelta(delta.from_version, delta.to_version, delta.changes)
            for pid, member in self.roster.items():
                if changed and member.base_version == self._broadcast_base.version:
                    messages.append((pid, delta_msg))
                else:
                    # No usable base (fresh join or keepalive): restate everything.
                    messages.append((pid, full))
                member.base_version = self.state.version

        self.last_broadcast_version = self.state.version
        self.last_broadcast_ms = now_ms
        self._broadcast_base = self.state
        return messages

    def expire_stale(self, now_ms: float) -> list[int]:
        """Drop members silent longer than the client timeout."""
        timeout = self.config.client_timeout_ms
        stale = sorted(
            pid for pid, m in self.roster.items() if now_ms - m.last_seen_ms > timeout
        )
        for pid in stale:
            self.leave(pid, now_ms)
        return stale
