"""Asyncio network front end for a Session.

All session mutations run on one event loop, which is the serialization
point the core relies on. Each connection gets a read task; a single timer
task drives expiry and broadcast ticks. Fan-out encodes each distinct
message once and never lets one slow client stall the tick.
"""

from __future__ import annotations

import asyncio
import logging
import os

from . import wire
from .server import NameTooLong, PresenterCannotReact, Session, SessionConfig, SessionFull
from .state import InvalidMask, Mode, Role, UnknownParticipant
from .transport import TcpFramedTransport, WebSocketTransport, parse_address

log = logging.getLogger(__name__)


def configure_logging() -> None:
    level = os.environ.get("VA_LOG_LEVEL", "INFO").upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO),
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")


class AudienceServer:
    """Serves one session over websocket and/or framed-TCP listeners."""

    def __init__(self, config: SessionConfig | None = None,
                 ws_address: str | None = None, tcp_address: str | None = None):
        self.config = config or SessionConfig()
        if ws_address is None and tcp_address is None:
            ws_address = self.config.listen_address
        self.ws_address = ws_address
        self.tcp_address = tcp_address
        self.session: Session | None = None
        self.connections: dict[int, object] = {}
        self._ws_server = None
        self._tcp_server = None
        self._timer_task: asyncio.Task | None = None
        self._loop: asyncio.AbstractEventLoop | None = None
        self.ws_port: int | None = None
        self.tcp_port: int | None = None

    def now_ms(self) -> float:
        return self._loop.time() * 1000.0

    async def start(self) -> None:
        self._loop = asyncio.get_running_loop()
        self.session = Session(self.config, now_ms=self.now_ms())
        if self.ws_address is not None:
            import websockets.asyncio.server

            _, host, port = parse_address(self.ws_address)
            self._ws_server = await websockets.asyncio.server.serve(
                self._handle_ws, host, port
            )
            self.ws_port = next(iter(self._ws_server.sockets)).getsockname()[1]
            log.info("websocket listener on %s:%d", host, self.ws_port)
        if self.tcp_address is not None:
            scheme, host, port = parse_address(
                self.tcp_address if "//" in self.tcp_address else "tcp://" + self.tcp_address
            )
            self._tcp_server = await asyncio.start_server(self._handle_tcp, host, port)
            self.tcp_port = self._tcp_server.sockets[0].getsockname()[1]
            log.info("tcp listener on %s:%d", host, self.tcp_port)
        self._timer_task = asyncio.create_task(self._timer_loop())

    async def stop(self) -> None:
        if self._timer_task is not None:
            self._timer_task.cancel()
            try:
                await self._timer_task
            except asyncio.CancelledError:
                pass
        for transport in list(self.connections.values()):
            await _quiet_close(transport)
        self.connections.clear()
        if self._ws_server is not None:
            self._ws_server.close()
            await self._ws_server.wait_closed()
        if self._tcp_server is not None:
            self._tcp_server.close()
            await self._tcp_server.wait_closed()

    async def __aenter__(self) -> "AudienceServer":
        await self.start()
        return self

    async def __aexit__(self, *exc) -> None:
        await self.stop()

    async def _handle_ws(self, connection) -> None:
        await self._serve_connection(WebSocketTransport(connection))

    async def _handle_tcp(self, reader, writer) -> None:
        await self._serve_connection(TcpFramedTransport(reader, writer))

    async def _serve_connection(self, transport) -> None:
        pid = None
        try:
            pid = await self._join_handshake(transport)
            if pid is None:
                return
            while True:
                try:
                    payload = await transport.recv()
                except Exception:
                    break  # transport closed: treated as LEAVE below
                if not await self._dispatch(pid, payload, transport):
                    break
        finally:
            if pid is not None:
                self.connections.pop(pid, None)
                self.session.leave(pid, self.now_ms())
                log.info("participant %d left (%d remain)", pid, len(self.session.roster))
            await _quiet_close(transport)

    async def _join_handshake(self, transport) -> int | None:
        try:
            payload = await transport.recv()
            msg = wire.decode_message(payload)
        except Exception:
            await _send_error(transport, wire.ERR_PROTOCOL)
            return None
        if not isinstance(msg, wire.Join):
            await _send_error(transport, wire.ERR_PROTOCOL)
            return None
        try:
            pid, welcome = self.session.join(msg.role, msg.name, self.now_ms())
        except SessionFull:
            await _send_error(transport, wire.ERR_SESSION_FULL)
            return None
        except NameTooLong:
            await _send_error(transport, wire.ERR_NAME_TOO_LONG)
            return None
        self.connections[pid] = transport
        await transport.send(wire.encode_message(welcome))
        await transport.send(wire.encode_message(self.session.welcome_state(pid)))
        log.info("participant %d joined as %s (%d total)",
                 pid, msg.role.name.lower(), len(self.session.roster))
        return pid

    async def _dispatch(self, pid: int, payload: bytes, transport) -> bool:
        """Apply one client message; False closes the connection."""
        try:
            msg = wire.decode_message(payload)
        except wire.CodecError:
            await _send_error(transport, wire.ERR_PROTOCOL)
            return False
        now = self.now_ms()
        try:
            if isinstance(msg, wire.Update):
                self.session.handle_update(pid, msg.mask, now)
            elif isinstance(msg, wire.Heartbeat):
                self.session.handle_heartbeat(pid, now)
            elif isinstance(msg, wire.Leave):
                return False
            else:
                await _send_error(transport, wire.ERR_PROTOCOL)
                return False
        except PresenterCannotReact:
            await _send_error(transport, wire.ERR_PRESENTER_CANNOT_REACT)
        except InvalidMask:
            await _send_error(transport, wire.ERR_INVALID_MASK)
        except UnknownParticipant:
            await _send_error(transport, wire.ERR_UNKNOWN_PARTICIPANT)
            return False
        return True

    async def _timer_loop(self) -> None:
        interval = self.config.broadcast_interval_ms / 1000.0
        while True:
            await asyncio.sleep(interval)
            now = self.now_ms()
            for pid in self.session.expire_stale(now):
                transport = self.connections.pop(pid, None)
                log.info("participant %d timed out", pid)
                if transport is not None:
                    asyncio.ensure_future(_quiet_close(transport))
            self._fan_out(self.session.tick_broadcast(now))

    def _fan_out(self, messages) -> None:
        encoded: dict[int, bytes] = {}
        for pid, msg in messages:
            transport = self.connections.get(pid)
            if transport is None:
                continue
            payload = encoded.get(id(msg))
            if payload is None:
                payload = wire.encode_message(msg)
                encoded[id(msg)] = payload
            asyncio.ensure_future(self._send_or_drop(pid, transport, payload))

    async def _send_or_drop(self, pid, transport, payload: bytes) -> None:
        try:
            await transport.send(payload)
        except Exception:
            # broken pipe: the read task will observe the close and clean up
            pass


async def _send_error(transport, code: int) -> None:
    try:
        await transport.send(wire.encode_message(wire.ErrorMessage(code)))
    except Exception:
        pass


async def _quiet_close(transport) -> None:
    try:
        await transport.close()
    except Exception:
        pass


async def run_server(config: SessionConfig, ws_address: str | None,
                     tcp_address: str | None) -> None:
    server = AudienceServer(config, ws_address=ws_address, tcp_address=tcp_address)
    await server.start()
    log.info("session up: mode=%s interval=%dms", config.mode.name.lower(),
             config.broadcast_interval_ms)
    try:
        await asyncio.Event().wait()
    finally:
        await server.stop()
