import asyncio
import json

import pytest

from socialgame.service import start_server
from socialgame.simulator import ExternalPolicy, SimConfig, Simulation

from websockets.asyncio.client import connect


def run(coro):
    return asyncio.run(coro)


async def _open_session(paced=False, config=None, **start_fields):
    server = await start_server("127.0.0.1", 0, library=None, config=config, paced=paced)
    port = server.sockets[0].getsockname()[1]
    ws = await connect(f"ws://127.0.0.1:{port}")
    await ws.send(json.dumps({"type": "start", **start_fields}))
    scene = json.loads(await ws.recv())
    assert scene["type"] == "scene"
    return server, ws


class TestLockstep:
    def test_control_steps_and_state_fields(self):
        async def body():
            server, ws = await _open_session(seed=7)
            try:
                await ws.send(json.dumps({"type": "control", "accel": -2.0}))
                state = json.loads(await ws.recv())
                assert state["type"] == "state"
                assert state["tick"] == 1
                assert state["straight"]["a"] == -2.0
                assert abs(state["p_l"][0] + state["p_l"][1] - 1.0) < 1e-9
                assert abs(state["p_s"][0] + state["p_s"][1] - 1.0) < 1e-9
                # held command decelerates 0.2 m/s per tick
                v0 = state["straight"]["v"]
                await ws.send(json.dumps({"type": "control", "accel": -2.0}))
                state2 = json.loads(await ws.recv())
                assert state2["tick"] == 2
                assert state2["straight"]["v"] == pytest.approx(v0 - 0.2)
            finally:
                await ws.close()
                server.close()
                await server.wait_closed()

        run(body())

    def test_wire_transparency_against_direct_run(self):
        async def body():
            # Long enough to finish the episode under any outcome.
            trace = [0.5] * 10 + [-3.0] * 30 + [2.0] * 500
            config = SimConfig(hv_policy=ExternalPolicy(), seed=11, timeout=30.0)
            direct = Simulation(config, None)
            direct_records = []
            for accel in trace:
                direct_records.append(direct.step(accel))
                if direct.terminal:
                    break
            assert direct.terminal, "trace must drive the episode to completion"
            server, ws = await _open_session(seed=11, config=config)
            wire_records = []
            try:
                for accel in trace:
                    await ws.send(json.dumps({"type": "control", "accel": accel}))
                    msg = json.loads(await ws.recv())
                    assert msg["type"] == "state"
                    wire_records.append(msg)
                    if msg["tick"] == len(direct_records):
                        break
                end = json.loads(await ws.recv())
                assert end["type"] == "end"
                assert end["reason"] == direct.terminal_reason
            finally:
                await ws.close()
                server.close()
                await server.wait_closed()
            assert len(wire_records) == len(direct_records)
            for rec, msg in zip(direct_records, wire_records):
                assert msg["left"]["s"] == rec.s_l
                assert msg["left"]["v"] == rec.v_l
                assert msg["straight"]["s"] == rec.s_s
                assert msg["straight"]["v"] == rec.v_s
                assert msg["io"] == rec.io
                assert msg["p_l"] == list(rec.p_l)
                assert msg["av_decision"] == rec.av_decision

        run(body())

    def test_malformed_message_preserves_session(self):
        async def body():
            server, ws = await _open_session(seed=1)
            try:
                await ws.send("this is not json")
                err = json.loads(await ws.recv())
                assert err["type"] == "error" and err["code"] == "bad-message"
                await ws.send(json.dumps({"type": "control", "accel": 0.0}))
                state = json.loads(await ws.recv())
                assert state["type"] == "state" and state["tick"] == 1
            finally:
                await ws.close()
                server.close()
                await server.wait_closed()

        run(body())

    def test_control_before_start_is_an_error(self):
        async def body():
            server = await start_server("127.0.0.1", 0, library=None, paced=False)
            port = server.sockets[0].getsockname()[1]
            ws = await connect(f"ws://127.0.0.1:{port}")
            try:
                await ws.send(json.dumps({"type": "control", "accel": 1.0}))
                err = json.loads(await ws.recv())
                assert err["code"] == "no-session"
            finally:
                await ws.close()
                server.close()
                await server.wait_closed()

        run(body())

    def test_bad_control_payload(self):
        async def body():
            server, ws = await _open_session(seed=1)
            try:
                await ws.send(json.dumps({"type": "control", "accel": "fast"}))
                err = json.loads(await ws.recv())
                assert err["code"] == "bad-control"
            finally:
                await ws.close()
                server.close()
                await server.wait_closed()

        run(body())

    def test_unknown_type_reported(self):
        async def body():
            server, ws = await _open_session(seed=1)
            try:
                await ws.send(json.dumps({"type": "telemetry"}))
                err = json.loads(await ws.recv())
                assert err["code"] == "unknown-type"
            finally:
                await ws.close()
                server.close()
                await server.wait_closed()

        run(body())


class TestPaced:
    def test_states_stream_without_controls(self):
        async def body():
            server, ws = await _open_session(paced=True, seed=3)
            try:
                ticks = []
                for _ in range(3):
                    msg = json.loads(await asyncio.wait_for(ws.recv(), timeout=2.0))
                    assert msg["type"] == "state"
                    ticks.append(msg["tick"])
                assert ticks == [1, 2, 3]
            finally:
                await ws.close()
                server.close()
                await server.wait_closed()

        run(body())
