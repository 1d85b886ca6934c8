"""Message transports: length-prefixed TCP frames and websocket binary frames.

Both carry exactly one protocol message per frame. The TCP framing is
[len:4 little-endian][payload] and exists so headless tools avoid the
websocket handshake; browsers use the websocket listener. Counting
wrappers observe payload and framing bytes without changing behavior.
"""

from __future__ import annotations

import asyncio
from dataclasses import dataclass, field
from urllib.parse import urlparse

from .state import AudienceError

TCP_FRAME_OVERHEAD = 4
MAX_FRAME = 1 << 20  # generous: largest real message is a full roster


class ConnectFailed(AudienceError):
    pass


class TransportClosed(AudienceError):
    pass


def parse_address(address: str) -> tuple[str, str, int]:
    """Split 'host:port', 'tcp://host:port', or 'ws://host:port' into parts."""
    if "//" not in address:
        address = "ws://" + address
    parsed = urlparse(address)
    if parsed.scheme not in ("ws", "tcp"):
        raise ConnectFailed(f"unsupported scheme {parsed.scheme!r}")
    if parsed.hostname is None or parsed.port is None:
        raise ConnectFailed(f"address {address!r} needs host and port")
    return parsed.scheme, parsed.hostname, parsed.port


class TcpFramedTransport:
    """One asyncio stream speaking [len:4][payload] frames."""

    def __init__(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        self._reader = reader
        self._writer = writer

    @classmethod
    async def connect(cls, host: str, port: int, timeout_s: float = 5.0) -> "TcpFramedTransport":
        try:
            reader, writer = await asyncio.wait_for(
                asyncio.open_connection(host, port), timeout_s
            )
        except (OSError, asyncio.TimeoutError) as exc:
            raise ConnectFailed(f"cannot reach {host}:{port}: {exc}") from exc
        return cls(reader, writer)

    async def send(self, payload: bytes) -> None:
        try:
            self._writer.write(len(payload).to_bytes(4, "little") + payload)
            await self._writer.drain()
        except (OSError, ConnectionError) as exc:
            raise TransportClosed(str(exc)) from exc

    async def recv(self) -> bytes:
        try:
            header = await self._reader.readexactly(4)
            length = int.from_bytes(header, "little")
            if length > MAX_FRAME:
                raise TransportClosed(f"frame of {length} bytes exceeds limit")
            return await self._reader.readexactly(length)
        except (asyncio.IncompleteReadError, OSError, ConnectionError) as exc:
            raise TransportClosed(str(exc)) from exc

    async def close(self) -> None:
        try:
            self._writer.close()
            await self._writer.wait_closed()
        except (OSError, ConnectionError):
            pass


class WebSocketTransport:
    """Binary websocket frames, one message per frame."""

    def __init__(self, connection):
        self._conn = connection

    @classmethod
    async def connect(cls, host: str, port: int, timeout_s: float = 5.0) -> "WebSocketTransport":
        import websockets.asyncio.client

        try:
            conn = await asyncio.wait_for(
                websockets.asyncio.client.connect(f"ws://{host}:{port}"), timeout_s
            )
        except (OSError, asyncio.TimeoutError, Exception) as exc:
            raise ConnectFailed(f"cannot reach ws://{host}:{port}: {exc}") from exc
        return cls(conn)

    async def send(self, payload: bytes) -> None:
        import websockets.exceptions

        try:
            await self._conn.send(payload)
        except websockets.exceptions.ConnectionClosed as exc:
            raise TransportClosed(str(exc)) from exc

    async def recv(self) -> bytes:
        import websockets.exceptions

        try:
            frame = await self._conn.recv()
        except websockets.exceptions.ConnectionClosed as exc:
            raise TransportClosed(str(exc)) from exc
        if isinstance(frame, str):
            frame = frame.encode("utf-8")
        return frame

    async def close(self) -> None:
        await self._conn.close()


async def open_transport(address: str, timeout_s: float = 5.0):
    scheme, host, port = parse_address(address)
    if scheme == "tcp":
        return await TcpFramedTransport.connect(host, port, timeout_s)
    return await WebSocketTransport.connect(host, port, timeout_s)


@dataclass
class ByteCounters:
    payload_sent: int = 0
    payload_received: int = 0
    framing_sent: int = 0
    framing_received: int = 0
    messages_sent: int = 0
    messages_received: int = 0
    # (first payload byte, payload size) per received frame
    frames_received: list[tuple[int, int]] = field(default_factory=list)


class CountingTransport:
    """Counts payload and framing bytes crossing an inner transport."""

    def __init__(self, inner, overhead: int = TCP_FRAME_OVERHEAD):
        self.inner = inner
        self.overhead = overhead
        self.counters = ByteCounters()

    async def send(self, payload: bytes) -> None:
        await self.inner.send(payload)
        self.counters.payload_sent += len(payload)
        self.counters.framing_sent += self.overhead
        self.counters.messages_sent += 1

    async def recv(self) -> bytes:
        payload = await self.inner.recv()
        self.counters.payload_received += len(payload)
        self.counters.framing_received += self.overhead
        self.counters.messages_received += 1
        self.counters.frames_received.append((payload[0] if payload else -1, len(payload)))
        return payload

    async def close(self) -> None:
        await self.inner.close()
