"""Live simulation sessions over WebSocket.

One JSON document per message.  A ``start`` message spawns a session whose
straight vehicle is driven by ``control`` messages (acceleration commands,
zero-order hold, clamped to the documented range); the server streams a
``state`` message per tick and an ``end`` message with the episode metrics.
Ticks are wall-paced at the simulation rate by default; lockstep mode
(one tick per control message) serves replay and testing.

The exact message schemas live in docs/protocol.md.
"""

import asyncio
import dataclasses
import json
import logging
from dataclasses import replace

from websockets.asyncio.server import serve as ws_serve
from websockets.exceptions import ConnectionClosed

from .expert import ExpertLibrary
from .simulator import (
    CONTROL_BOUNDS,
    ExternalPolicy,
    SimConfig,
    Simulation,
    episode_metrics,
)

log = logging.getLogger(__name__)

__all__ = ["SessionServer", "run_server", "CONTROL_BOUNDS"]

START_OVERRIDES = ("seed", "v0_left", "v0_straight", "timeout")


def _state_message(sim: Simulation, record) -> dict:
    poses = {}
    for name, path, state in (
        ("left", sim.geometry.left_path, sim.left),
        ("straight", sim.geometry.straight_path, sim.straight),
    ):
        p = path.point_at(state.s)
        poses[name] = {
            "s": state.s, "v": state.v, "a": state.a,
            "x": p.x, "y": p.y, "heading": path.heading_at(state.s),
            "length": state.length, "width": state.width,
        }
    return {
        "type": "state",
        "tick": record.tick,
        "t": record.t,
        "left": poses["left"],
        "straight": poses["straight"],
        "d_l": record.d_l,
        "d_s": record.d_s,
        "io": record.io,
        "itsi": record.itsi,
        "s_norm": record.s_norm,
        "p_l": list(record.p_l),
        "p_s": list(record.p_s),
        "av_decision": record.av_decision,
        "expert_category": record.category,
    }


def _end_message(sim: Simulation) -> dict:
    metrics = dataclasses.asdict(episode_metrics(sim))
    return {"type": "end", "reason": sim.terminal_reason, "metrics": metrics}


def _scene_message(sim: Simulation) -> dict:
    geo = sim.geometry
    cg = geo.conflict
    return {
        "type": "scene",
        "lane_width": geo.config.lane_width,
        "box_half": geo.box_half,
        "conflict_point": {"x": cg.point.x, "y": cg.point.y},
        "tick_seconds": sim.config.dt,
        "control_bounds": list(CONTROL_BOUNDS),
    }


class SessionServer:
    """Per-connection session handling; one controlling client per session."""

    def __init__(
        self,
        library: ExpertLibrary | None,
        config: SimConfig | None = None,
        paced: bool = True,
    ):
        self.library = library
        base = config or SimConfig()
        self.base_config = replace(base, hv_policy=ExternalPolicy())
        self.paced = paced

    async def handler(self, ws) -> None:
        sim: Simulation | None = None
        control: dict = {"value": None}
        tick_task: asyncio.Task | None = None

        async def send(doc: dict) -> None:
            await ws.send(json.dumps(doc))

        async def run_ticks(active: Simulation) -> None:
            loop = asyncio.get_running_loop()
            next_at = loop.time()
            try:
                while not active.terminal:
                    next_at += active.config.dt
                    await asyncio.sleep(max(0.0, next_at - loop.time()))
                    latest, control["value"] = control["value"], None
                    record = active.step(latest)
                    await send(_state_message(active, record))
                await send(_end_message(active))
            except ConnectionClosed:
                pass

        try:
            async for raw in ws:
                try:
                    doc = json.loads(raw)
                    kind = doc["type"]
                except (json.JSONDecodeError, KeyError, TypeError):
                    await send({"type": "error", "code": "bad-message",
                                "message": "expected a JSON object with a 'type' field"})
                    continue
                if kind == "start":
                    if sim is not None and not sim.terminal:
                        await send({"type": "error", "code": "session-active",
                                    "message": "finish or disconnect before restarting"})
                        continue
                    overrides = {
                        key: doc[key] for key in START_OVERRIDES if key in doc
                    }
                    try:
                        config = replace(self.base_config, **overrides)
                        sim = Simulation(config, self.library)
                    except (TypeError, ValueError) as exc:
                        await send({"type": "error", "code": "bad-config",
                                    "message": str(exc)})
                        continue
                    control["value"] = None
                    await send(_scene_message(sim))
                    if self.paced:
                        tick_task = asyncio.create_task(run_ticks(sim))
                elif kind == "control":
                    if sim is None:
                        await send({"type": "error", "code": "no-session",
                                    "message": "send 'start' first"})
                        continue
                    accel = doc.get("accel")
                    if not isinstance(accel, (int, float)):
                        await send({"type": "error", "code": "bad-control",
                                    "message": "'accel' must be a number"})
                        continue
                    if sim.terminal:
                        await send({"type": "error", "code": "session-terminated",
                                    "message": "episode already ended"})
                        continue
                    if self.paced:
                        control["value"] = float(accel)
                    else:
                        record = sim.step(float(accel))
                        await send(_state_message(sim, record))
                        if sim.terminal:
                            await send(_end_message(sim))
                else:
                    await send({"type": "error", "code": "unknown-type",
                                "message": f"unknown message type {kind!r}"})
        except ConnectionClosed:
            log.info("client disconnected; session aborted")
        finally:
            if tick_task is not None:
                tick_task.cancel()


async def start_server(
    host: str,
    port: int,
    library: ExpertLibrary | None,
    config: SimConfig | None = None,
    paced: bool = True,
):
    """Bind and return the server object (``server.sockets`` has the port)."""
    server = SessionServer(library, config, paced)
    return await ws_serve(server.handler, host, port)


def run_server(
    host: str,
    port: int,
    library: ExpertLibrary | None,
    config: SimConfig | None = None,
    paced: bool = True,
) -> None:
    async def main():
        server = await start_server(host, port, library, config, paced)
        log.info("serving on %s:%d (paced=%s)", host, port, paced)
        await server.serve_forever()

    asyncio.run(main())
