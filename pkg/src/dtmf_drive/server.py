"""Live teleoperation service: JSON frames over a websocket.

One interactive session at a time; additional connections receive a busy
error. Incoming key events are queued and applied at the tick on which
they are drained, so a session's event log replayed through the scenario
runner reproduces the same trace exactly.

Client -> server messages::

    {"type": "key_down", "key": "2"}
    {"type": "key_up"}
    {"type": "reset"}
    {"type": "set_config", "scenario": {...partial scenario document...}}

Server -> client: a ``hello`` frame on connect, then ``state`` frames at a
fixed tick cadence, and ``error`` frames for malformed input.
"""

from __future__ import annotations

import asyncio
import json
import logging
import time
from dataclasses import replace
from pathlib import Path
from typing import Optional

from aiohttp import WSMsgType, web

from dtmf_drive.session import Scenario, TickEngine, TraceRecord, trace_to_csv
from dtmf_drive.signal import KEYS

logger = logging.getLogger(__name__)

_FALLBACK_PAGE = """<!doctype html>
<html><head><title>dtmf-drive</title></head>
<body><h1>dtmf-drive teleoperation service</h1>
<p>No UI assets configured. Connect a websocket client to <code>/ws</code>,
or restart with <code>--static-dir</code> pointing at the built console.</p>
</body></html>
"""


def _state_frame(engine: TickEngine, record: TraceRecord) -> dict:
    energies = engine.last_energies
    if energies is None:
        low = [0.0, 0.0, 0.0, 0.0]
        high = [0.0, 0.0, 0.0, 0.0]
    else:
        low = [float(v) for v in energies.e_low]
        high = [float(v) for v in energies.e_high]
    return {
        "type": "state",
        "t_ms": record.t_ms,
        "call": record.call.value,
        "est": record.est,
        "std": engine.steer.std_active,
        "latched": None if record.latched is None else f"0x{record.latched:02X}",
        "port": f"0x{record.port:02X}",
        "wheels": {"left": record.drive.left.value, "right": record.drive.right.value},
        "pose": {"x": record.x, "y": record.y, "theta": record.theta},
        "energies": {"low": low, "high": high},
    }


class TeleopServer:
    """Owns the single live session and its tick loop."""

    def __init__(
        self,
        scenario_defaults: Optional[Scenario] = None,
        broadcast_every: int = 4,
        speed: float = 1.0,
        record_dir: Optional[Path] = None,
    ):
        base = scenario_defaults or Scenario()
        # A live session has no pre-scripted keys and no fixed end.
        self.defaults = replace(base, script=(), duration_ms=None)
        if broadcast_every < 1:
            raise ValueError("broadcast_every must be >= 1")
        if speed <= 0:
            raise ValueError("speed must be positive")
        self.broadcast_every = broadcast_every
        self.speed = speed
        self.record_dir = Path(record_dir) if record_dir else None
        self.active_ws: Optional[web.WebSocketResponse] = None
        self.session_count = 0
        self.last_trace: list[TraceRecord] = []
        self.last_events: list[dict] = []
        self.last_scenario: Optional[Scenario] = None

    def build_app(self, static_dir: Optional[Path] = None) -> web.Application:
        app = web.Application()
        app.router.add_get("/ws", self.websocket_handler)
        if static_dir is not None:
            static_dir = Path(static_dir)
            index = static_dir / "index.html"

            async def serve_index(_request):
                return web.FileResponse(index)

            app.router.add_get("/", serve_index)
            app.router.add_static("/", static_dir)
        else:
            async def fallback(_request):
                return web.Response(text=_FALLBACK_PAGE, content_type="text/html")

            app.router.add_get("/", fallback)
        return app

    async def websocket_handler(self, request: web.Request) -> web.WebSocketResponse:
        ws = web.WebSocketResponse()
        await ws.prepare(request)
        if self.active_ws is not None:
            await ws.send_json({"type": "error", "code": "busy"})
            await ws.close()
            return ws

        self.active_ws = ws
        scenario = self.defaults
        engine = TickEngine(scenario)
        pending_key: Optional[str] = None
        queue: asyncio.Queue = asyncio.Queue()
        trace: list[TraceRecord] = []

        await ws.send_json(
            {
                "type": "hello",
                "tick_ms": engine.tick_ms,
                "broadcast_every": self.broadcast_every,
                "profile": scenario.profile,
            }
        )

        async def tick_loop() -> None:
            nonlocal engine, pending_key, trace
            tick_wall = engine.tick_s / self.speed
            deadline = time.monotonic()
            while not ws.closed:
                deadline += tick_wall
                delay = deadline - time.monotonic()
                if delay <= 0:
                    deadline = time.monotonic()
                    delay = 0.0
                # sleep(0) still yields, so a fast loop cannot starve intake
                await asyncio.sleep(delay)
                while not queue.empty():
                    msg = queue.get_nowait()
                    kind = msg.get("type")
                    if kind == "key_down":
                        pending_key = msg["key"]
                    elif kind == "key_up":
                        pending_key = None
                    elif kind == "reset":
                        engine = TickEngine(scenario)
                        pending_key = None
                        trace = []
                    elif kind == "set_config":
                        try:
                            merged = scenario.to_dict()
                            merged.update(msg.get("scenario") or {})
                            merged["script"] = []
                            merged["duration_ms"] = None
                            new_scenario = Scenario.from_dict(merged)
                            TickEngine(new_scenario)  # validate before adopting
                        except (ValueError, KeyError, TypeError) as exc:
                            await ws.send_json(
                                {"type": "error", "code": "bad_config", "detail": str(exc)}
                            )
                            continue
                        engine = TickEngine(new_scenario)
                        pending_key = None
                        trace = []
                record = engine.tick(pending_key)
                trace.append(record)
                if engine.tick_index % self.broadcast_every == 0 and not ws.closed:
                    try:
                        await ws.send_json(_state_frame(engine, record))
                    except ConnectionResetError:
                        break

        loop_task = asyncio.create_task(tick_loop())
        try:
            async for msg in ws:
                if msg.type != WSMsgType.TEXT:
                    continue
                try:
                    data = json.loads(msg.data)
                    if not isinstance(data, dict):
                        raise ValueError("not an object")
                except (json.JSONDecodeError, ValueError):
                    await ws.send_json({"type": "error", "code": "bad_message"})
                    continue
                kind = data.get("type")
                if kind in ("key_up", "reset", "set_config"):
                    queue.put_nowait(data)
                elif kind == "key_down":
                    key = data.get("key")
                    if not isinstance(key, str) or key not in KEYS:
                        await ws.send_json({"type": "error", "code": "bad_key"})
                        continue
                    queue.put_nowait(data)
                else:
                    await ws.send_json({"type": "error", "code": "bad_message"})
        finally:
            loop_task.cancel()
            try:
                await loop_task
            except asyncio.CancelledError:
                pass
            self.session_count += 1
            self.last_trace = trace
            self.last_events = list(engine.events)
            self.last_scenario = engine.scenario
            self._write_session_record(engine, trace)
            self.active_ws = None
        return ws

    def _write_session_record(self, engine: TickEngine, trace: list[TraceRecord]) -> None:
        if self.record_dir is None or not trace:
            return
        self.record_dir.mkdir(parents=True, exist_ok=True)
        stem = f"session_{self.session_count:03d}"
        (self.record_dir / f"{stem}_trace.csv").write_text(trace_to_csv(trace))
        (self.record_dir / f"{stem}_events.json").write_text(
            json.dumps(engine.events, indent=2)
        )
        (self.record_dir / f"{stem}_scenario.json").write_text(
            engine.scenario.to_json()
        )


def serve(
    host: str = "127.0.0.1",
    port: int = 8765,
    scenario_defaults: Optional[Scenario] = None,
    static_dir: Optional[Path] = None,
    broadcast_every: int = 4,
    speed: float = 1.0,
    record_dir: Optional[Path] = None,
) -> None:
    """Run the teleoperation service until interrupted."""
    server = TeleopServer(
        scenario_defaults=scenario_defaults,
        broadcast_every=broadcast_every,
        speed=speed,
        record_dir=record_dir,
    )
    app = server.build_app(static_dir=static_dir)
    logger.info("serving on http://%s:%d (websocket at /ws)", host, port)
    web.run_app(app, host=host, port=port, print=None)
