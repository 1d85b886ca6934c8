"""Binary wire codec: one message per transport frame, little-endian, no padding.

Client to server:
    JOIN      [0x01][role:1][name_len:1][name: UTF-8]
    UPDATE    [0x02][mask:1]
    HEARTBEAT [0x03]
    LEAVE     [0x04]
Server to client:
    WELCOME      [0x81][participant_id:4][broadcast_interval_ms:2][mode:1]
    BROADCAST    [0x82][version:8][total:2][clap:2][whistle:2][boo:2][laugh:2]
    ROSTER_DELTA [0x83][from_version:8][to_version:8][n:2]([id:4][mask:1])*n
    FULL_STATE   [0x84][version:8][n:2]([id:4][mask:1])*n
    ERROR        [0xFF][code:1]
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Union

from .state import (
    MASK_ALL,
    TOMBSTONE,
    AudienceError,
    InvalidMask,
    Mode,
    Role,
    check_mask,
)

MSG_JOIN = 0x01
MSG_UPDATE = 0x02
MSG_HEARTBEAT = 0x03
MSG_LEAVE = 0x04
MSG_WELCOME = 0x81
MSG_BROADCAST = 0x82
MSG_ROSTER_DELTA = 0x83
MSG_FULL_STATE = 0x84
MSG_ERROR = 0xFF

# ERROR payload codes
ERR_SESSION_FULL = 1
ERR_NAME_TOO_LONG = 2
ERR_UNKNOWN_PARTICIPANT = 3
ERR_PRESENTER_CANNOT_REACT = 4
ERR_INVALID_MASK = 5
ERR_PROTOCOL = 6

ERROR_NAMES = {
    ERR_SESSION_FULL: "session full",
    ERR_NAME_TOO_LONG: "name too long",
    ERR_UNKNOWN_PARTICIPANT: "unknown participant",
    ERR_PRESENTER_CANNOT_REACT: "presenter cannot react",
    ERR_INVALID_MASK: "invalid mask",
    ERR_PROTOCOL: "protocol violation",
}

BROADCAST_SIZE = 19  # fixed regardless of audience size
UPDATE_SIZE = 2


class CodecError(AudienceError):
    """Base class for encode/decode failures."""


class UnknownMessageType(CodecError):
    pass


class TruncatedMessage(CodecError):
    """Frame length does not match the message's declared layout."""


class InvalidField(CodecError):
    """A field holds a value outside its legal range (role, mode, id, name)."""


class NameTooLong(CodecError):
    pass


@dataclass(frozen=True)
class Join:
    role: Role
    name: str = ""


@dataclass(frozen=True)
class Update:
    mask: int


@dataclass(frozen=True)
class Heartbeat:
    pass


@dataclass(frozen=True)
class Leave:
    pass


@dataclass(frozen=True)
class Welcome:
    participant_id: int
    broadcast_interval_ms: int
    mode: Mode


@dataclass(frozen=True)
class Broadcast:
    version: int
    total: int
    counts: tuple[int, int, int, int]


@dataclass(frozen=True)
class RosterDelta:
    from_version: int
    to_version: int
    changes: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class FullState:
    version: int
    entries: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class ErrorMessage:
    code: int


Message = Union[
    Join, Update, Heartbeat, Leave, Welcome, Broadcast, RosterDelta, FullState, ErrorMessage
]

_PAIR = struct.Struct("<IB")


def _pack_pairs(pairs: tuple[tuple[int, int], ...]) -> bytes:
    return b"".join(_PAIR.pack(pid, mask) for pid, mask in pairs)


def encode_message(msg: Message) -> bytes:
    if isinstance(msg, Join):
        name = msg.name.encode("utf-8")
        if len(name) > 255:
            raise NameTooLong(f"name is {len(name)} bytes, wire limit is 255")
        return struct.pack("<BBB", MSG_JOIN, int(msg.role), len(name)) + name
    if isinstance(msg, Update):
        return struct.pack("<BB", MSG_UPDATE, check_mask(msg.mask))
    if isinstance(msg, Heartbeat):
        return struct.pack("<B", MSG_HEARTBEAT)
    if isinstance(msg, Leave):
        return struct.pack("<B", MSG_LEAVE)
    if isinstance(msg, Welcome):
        return struct.pack(
            "<BIHB", MSG_WELCOME, msg.participant_id, msg.broadcast_interval_ms, int(msg.mode)
        )
    if isinstance(msg, Broadcast):
        return struct.pack("<BQH4H", MSG_BROADCAST, msg.version, msg.total, *msg.counts)
    if isinstance(msg, RosterDelta):
        head = struct.pack(
            "<BQQH", MSG_ROSTER_DELTA, msg.from_version, msg.to_version, len(msg.changes)
        )
        return head + _pack_pairs(msg.changes)
    if isinstance(msg, FullState):
        head = struct.pack("<BQH", MSG_FULL_STATE, msg.version, len(msg.entries))
        return head + _pack_pairs(msg.entries)
    if isinstance(msg, ErrorMessage):
        return struct.pack("<BB", MSG_ERROR, msg.code)
    raise UnknownMessageType(f"cannot encode {type(msg).__name__}")


def _need(data: bytes, size: int) -> None:
    if len(data) != size:
        raise TruncatedMessage(f"expected {size} bytes, got {len(data)}")


def _unpack_pairs(data: bytes, offset: int, n: int, allow_tombstone: bool) -> tuple[tuple[int, int], ...]:
    if len(data) != offset + n * _PAIR.size:
        raise TruncatedMessage(
            f"expected {offset + n * _PAIR.size} bytes for {n} entries, got {len(data)}"
        )
    pairs = []
    for i in range(n):
        pid, mask = _PAIR.unpack_from(data, offset + i * _PAIR.size)
        if pid == 0:
            raise InvalidField("participant id 0 is reserved")
        if mask > MASK_ALL and not (allow_tombstone and mask == TOMBSTONE):
            raise InvalidMask(f"mask {mask:#04x} outside 0x00..0x0f")
        pairs.append((pid, mask))
    return tuple(pairs)


def decode_message(data: bytes) -> Message:
    if not data:
        raise TruncatedMessage("empty frame")
    kind = data[0]
    if kind == MSG_JOIN:
        if len(data) < 3:
            raise TruncatedMessage("JOIN header needs 3 bytes")
        role_byte, name_len = data[1], data[2]
        if role_byte not in (int(Role.AUDIENCE), int(Role.PRESENTER)):
            raise InvalidField(f"unknown role byte {role_byte:#04x}")
        _need(data, 3 + name_len)
        try:
            name = data[3:].decode("utf-8")
        except UnicodeDecodeError as exc:
            raise InvalidField("name is not valid UTF-8") from exc
        return Join(Role(role_byte), name)
    if kind == MSG_UPDATE:
        _need(data, UPDATE_SIZE)
        return Update(check_mask(data[1]))
    if kind == MSG_HEARTBEAT:
        _need(data, 1)
        return Heartbeat()
    if kind == MSG_LEAVE:
        _need(data, 1)
        return Leave()
    if kind == MSG_WELCOME:
        _need(data, 8)
        _, pid, interval, mode_byte = struct.unpack("<BIHB", data)
        if mode_byte not in (int(Mode.AGGREGATE), int(Mode.ROSTER)):
            raise InvalidField(f"unknown mode byte {mode_byte:#04x}")
        if pid == 0:
            raise InvalidField("participant id 0 is reserved")
        return Welcome(pid, interval, Mode(mode_byte))
    if kind == MSG_BROADCAST:
        _need(data, BROADCAST_SIZE)
        _, version, total, c0, c1, c2, c3 = struct.unpack("<BQH4H", data)
        return Broadcast(version, total, (c0, c1, c2, c3))
    if kind == MSG_ROSTER_DELTA:
        if len(data) < 19:
            raise TruncatedMessage("ROSTER_DELTA header needs 19 bytes")
        _, from_v, to_v, n = struct.unpack_from("<BQQH", data)
        return RosterDelta(from_v, to_v, _unpack_pairs(data, 19, n, allow_tombstone=True))
    if kind == MSG_FULL_STATE:
        if len(data) < 11:
            raise TruncatedMessage("FULL_STATE header needs 11 bytes")
        _, version, n = struct.unpack_from("<BQH", data)
        return FullState(version, _unpack_pairs(data, 11, n, allow_tombstone=False))
    if kind == MSG_ERROR:
        _need(data, 2)
        return ErrorMessage(data[1])
    raise UnknownMessageType(f"unknown message type byte {kind:#04x}")
