"""Audience state model: per-participant reaction bitmasks with versioned
merge, aggregate, and delta semantics.

Everything here is a value type. Mutation helpers return new states and bump
the version exactly once per observable change, so callers can rely on
``version`` as a change detector. Sequencing of concurrent mutations is the
server's job; these functions are pure and thread-safe.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterator, Mapping

MASK_ALL = 0x0F
TOMBSTONE = 0xFF  # delta entry marking a departed participant
INVALID_ID = 0  # participant id 0 is the reserved sentinel
MAX_PARTICIPANT_ID = 0xFFFF_FFFF
MAX_TOTAL = 0xFFFF


class AudienceError(Exception):
    """Base class for state and protocol errors."""


class InvalidMask(AudienceError):
    """Reaction mask has bits outside 0x00..0x0F set."""


class UnknownParticipant(AudienceError):
    """Participant id is not present in the state."""


class DuplicateParticipant(AudienceError):
    """Participant id is already present in the state."""


class VersionOrder(AudienceError):
    """diff() called with the newer state first."""


class VersionMismatch(AudienceError):
    """Delta does not start at the state's version."""


class ReactionKind(IntEnum):
    CLAP = 0
    WHISTLE = 1
    BOO = 2
    LAUGH = 3

    @property
    def bit(self) -> int:
        return 1 << self.value

    @property
    def gerund(self) -> str:
        return _GERUNDS[self.value]


_GERUNDS = ("clapping", "whistling", "booing", "laughing")

REACTION_NAMES = {k.name.lower(): k for k in ReactionKind}


class Role(IntEnum):
    """Presenters receive broadcasts but never contribute to the state."""

    AUDIENCE = 0
    PRESENTER = 1


class Mode(IntEnum):
    """Broadcast mode: fixed-size count summary vs per-participant deltas."""

    AGGREGATE = 0
    ROSTER = 1


def check_mask(mask: int) -> int:
    if not 0 <= mask <= MASK_ALL:
        raise InvalidMask(f"mask {mask:#04x} outside 0x00..0x0f")
    return mask


def set_bit(mask: int, kind: ReactionKind, active: bool) -> int:
    check_mask(mask)
    return mask | kind.bit if active else mask & ~kind.bit


@dataclass(frozen=True)
class AudienceState:
    """Map of participant id to reaction mask plus a monotonic version."""

    entries: Mapping[int, int] = field(default_factory=dict)
    version: int = 0

    def __post_init__(self) -> None:
        for pid, mask in self.entries.items():
            if pid == INVALID_ID or pid > MAX_PARTICIPANT_ID:
                raise AudienceError(f"participant id {pid} out of range")
            check_mask(mask)
        if self.version < 0:
            raise AudienceError("version must be non-negative")

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(sorted(self.entries.items()))


@dataclass(frozen=True)
class AggregateSummary:
    """Per-reaction active counts and the audience total for one version."""

    counts: tuple[int, int, int, int] = (0, 0, 0, 0)
    total: int = 0
    version: int = 0

    def __post_init__(self) -> None:
        if len(self.counts) != 4:
            raise AudienceError("summary needs exactly four counts")
        if not 0 <= self.total <= MAX_TOTAL:
            raise AudienceError(f"total {self.total} outside 0..{MAX_TOTAL}")
        for c in self.counts:
            if not 0 <= c <= self.total:
                raise AudienceError(f"count {c} exceeds total {self.total}")


@dataclass(frozen=True)
class StateDelta:
    """Ordered changes taking one state version to a later one.

    A change value of TOMBSTONE removes the participant; anything else
    upserts. An empty delta with from_version == to_version is the identity.
    """

    from_version: int
    to_version: int
    changes: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        if self.to_version < self.from_version:
            raise VersionOrder(
                f"delta runs backwards: {self.from_version} -> {self.to_version}"
            )
        seen = set()
        for pid, mask in self.changes:
            if pid in seen:
                raise AudienceError(f"participant {pid} repeated in delta")
            seen.add(pid)
            if mask != TOMBSTONE:
                check_mask(mask)


def apply_update(state: AudienceState, pid: int, mask: int) -> AudienceState:
    """Set a joined participant's mask. No-op updates keep the same state."""
    check_mask(mask)
    current = state.entries.get(pid)
    if current is None:
        raise UnknownParticipant(f"participant {pid} has not joined")
    if current == mask:
        return state
    entries = dict(state.entries)
    entries[pid] = mask
    return AudienceState(entries, state.version + 1)


def add_participant(state: AudienceState, pid: int) -> AudienceState:
    if pid in state.entries:
        raise DuplicateParticipant(f"participant {pid} already present")
    entries = dict(state.entries)
    entries[pid] = 0
    return AudienceState(entries, state.version + 1)


def remove_participant(state: AudienceState, pid: int) -> AudienceState:
    if pid not in state.entries:
        raise UnknownParticipant(f"participant {pid} not present")
    entries = dict(state.entries)
    del entries[pid]
    return AudienceState(entries, state.version + 1)


def aggregate(state: AudienceState) -> AggregateSummary:
    """Count active participants per reaction; total is the audience size."""
    counts = [0, 0, 0, 0]
    for mask in state.entries.values():
        for k in range(4):
            if mask >> k & 1:
                counts[k] += 1
    return AggregateSummary(tuple(counts), len(state.entries), state.version)


def diff(a: AudienceState, b: AudienceState) -> StateDelta:
    """Delta such that apply_delta(a, diff(a, b)) reproduces b exactly."""
    if b.version < a.version:
        raise VersionOrder(f"cannot diff to older version {b.version} < {a.version}")
    changes = []
    for pid in sorted(a.entries.keys() | b.entries.keys()):
        if pid not in b.entries:
            changes.append((pid, TOMBSTONE))
        elif a.entries.get(pid) != b.entries[pid]:
            changes.append((pid, b.entries[pid]))
    return StateDelta(a.version, b.version, tuple(changes))


def apply_delta(a: AudienceState, delta: StateDelta) -> AudienceState:
    if a.version != delta.from_version:
        raise VersionMismatch(
            f"delta starts at {delta.from_version}, state is at {a.version}"
        )
    entries = dict(a.entries)
    for pid, mask in delta.changes:
        if mask == TOMBSTONE:
            entries.pop(pid, None)
        else:
            entries[pid] = mask
    return AudienceState(entries, delta.to_version)
