"""Command line entry points: va-server, va-client, va-sim."""

from __future__ import annotations

import argparse
import asyncio
import logging
import sys
from pathlib import Path

from .client import ClientConfig, HeadlessClient
from .harness import load_scenario, run_scenario
from .server import SessionConfig
from .service import configure_logging, run_server
from .state import REACTION_NAMES, Mode, Role
from .synth import load_voice_config

log = logging.getLogger(__name__)


def _mode(value: str) -> Mode:
    return Mode.AGGREGATE if value == "aggregate" else Mode.ROSTER


def server_main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="va-server", description="Run the central virtual audience server."
    )
    parser.add_argument("--listen", default="127.0.0.1:8765", metavar="HOST:PORT",
                        help="websocket listener address (default %(default)s)")
    parser.add_argument("--tcp-listen", default=None, metavar="HOST:PORT",
                        help="optional length-prefixed TCP listener for headless tools")
    parser.add_argument("--mode", choices=["aggregate", "roster"], default="aggregate")
    parser.add_argument("--broadcast-interval-ms", type=int, default=200)
    parser.add_argument("--timeout-ms", type=int, default=15000)
    parser.add_argument("--debounce-ms", type=int, default=100)
    parser.add_argument("--max-participants", type=int, default=65535)
    args = parser.parse_args(argv)
    configure_logging()
    config = SessionConfig(
        broadcast_interval_ms=args.broadcast_interval_ms,
        client_timeout_ms=args.timeout_ms,
        debounce_ms=args.debounce_ms,
        mode=_mode(args.mode),
        max_participants=args.max_participants,
        listen_address=args.listen,
    )
    try:
        asyncio.run(run_server(config, args.listen, args.tcp_listen))
    except KeyboardInterrupt:
        pass
    return 0


async def _client_session(args) -> int:
    config = ClientConfig(
        server_address=args.server,
        role=Role.PRESENTER if args.role == "presenter" else Role.AUDIENCE,
        name=args.name,
        sink=args.sink,
        block_ms=args.block_ms,
    )
    if args.voice_config:
        voice_config = load_voice_config(args.voice_config)
    else:
        voice_config = None
    client = HeadlessClient(config)
    view = await client.connect_and_join()
    log.info("joined as participant %d (%s)", view.my_id, args.role)

    async def read_commands():
        """Interactive toggles: '+clap', '-laugh', 'quit'."""
        loop = asyncio.get_running_loop()
        while True:
            line = await loop.run_in_executor(None, sys.stdin.readline)
            if not line:
                return
            line = line.strip().lower()
            if line in ("quit", "exit", "q"):
                return
            if len(line) > 1 and line[0] in "+-" and line[1:] in REACTION_NAMES:
                try:
                    await client.set_reaction(REACTION_NAMES[line[1:]], line[0] == "+")
                except Exception as exc:
                    print(f"cannot react: {exc}", file=sys.stderr)
            elif line:
                print("commands: +clap -clap +whistle +boo +laugh ... or quit",
                      file=sys.stderr)

    command_task = None
    if args.interactive and sys.stdin.isatty():
        command_task = asyncio.create_task(read_commands())
    try:
        await client.run_render_loop(duration_s=args.duration_s,
                                     voice_config=voice_config)
    finally:
        if command_task is not None:
            command_task.cancel()
        await client.close()
    return 0


def client_main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="va-client", description="Join a session and synthesize the crowd locally."
    )
    parser.add_argument("--server", default="127.0.0.1:8765", metavar="HOST:PORT",
                        help="server address; prefix tcp:// for the raw framing")
    parser.add_argument("--role", choices=["audience", "presenter"], default="audience")
    parser.add_argument("--name", default="guest")
    parser.add_argument("--sink", default="none", metavar="PATH.wav|device|none",
                        help="where the synthesized crowd goes")
    parser.add_argument("--duration-s", type=float, default=None,
                        help="stop after this many seconds (headless runs)")
    parser.add_argument("--block-ms", type=int, default=10)
    parser.add_argument("--voice-config", default=None, metavar="FILE",
                        help="key=value overrides for the voice bank")
    parser.add_argument("--no-interactive", dest="interactive", action="store_false",
                        help="disable stdin reaction commands")
    args = parser.parse_args(argv)
    configure_logging()
    try:
        return asyncio.run(_client_session(args))
    except KeyboardInterrupt:
        return 0


def sim_main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="va-sim", description="Replay a crowd scenario and measure the protocol."
    )
    parser.add_argument("--scenario", required=True, metavar="FILE")
    parser.add_argument("--mode", choices=["aggregate", "roster"], default="aggregate")
    parser.add_argument("--report", default=None, metavar="FILE",
                        help="write the flat key=value report here")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    configure_logging()
    scenario = load_scenario(args.scenario)
    report = run_scenario(scenario, mode=_mode(args.mode), seed=args.seed)
    print(report.table())
    if args.report:
        Path(args.report).write_text(report.to_kv_text())
        log.info("report written to %s", args.report)
    return 0 if report.final_state_matches_oracle else 1
