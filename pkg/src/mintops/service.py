"""Live operator sessions over WebSocket JSON frames.

One connection is one episode: after a ``hello`` handshake the server streams
``state`` frames, pushes each selected query, blocks until the matching
``answer`` arrives, and finishes with ``plan`` and ``done``.  The server adds
no decision logic of its own; it drives the same MintSession the offline
runner uses, so a replayed answer sequence yields the identical plan.
Ground-truth fields (region truth, truth goals) never leave the process.
"""

from __future__ import annotations

import asyncio
import json
import math
import uuid

from websockets.asyncio.server import serve as ws_serve
from websockets.exceptions import ConnectionClosed

from .elicitation import parse_answer, phrase_query
from .mint import Config, MintTree, MissionInfeasibleError
from .runner import MintSession, execute_plan
from .world import Scenario

PROTOCOL_VERSION = 1


def tree_summary(tree: MintTree) -> list[dict]:
    """Flat node list: branch nodes carry gap_id, leaves carry cost and cells."""
    nodes: list[dict] = []
    stack = [tree.root]
    while stack:
        node = stack.pop()
        if node.is_leaf:
            nodes.append(
                {
                    "kind": "leaf",
                    "mass": node.mass,
                    "cost": None if math.isinf(node.cost) else node.cost,
                    "cells": None if node.plan is None else [list(c) for c in node.plan.path],
                }
            )
        else:
            nodes.append({"kind": "branch", "gap_id": node.gap_id, "mass": node.mass})
            stack.extend(reversed(node.children))
    return nodes


def state_payload(scenario: Scenario, session: MintSession) -> dict:
    return {
        "grid": {
            "width": scenario.grid.width,
            "height": scenario.grid.height,
            "obstacles": [list(c) for c in sorted(scenario.grid.obstacles)],
        },
        "objects": [
            {"id": o.id, "label": o.label, "attributes": dict(sorted(o.attributes.items())), "cell": list(o.cell)}
            for o in scenario.objects
        ],
        "regions": [
            {
                "id": r.id,
                "cells": [list(c) for c in sorted(r.cells)],
                "hypotheses": [{"name": h.name, "traversable": h.traversable, "prior": h.prior} for h in r.hypotheses],
            }
            for r in scenario.regions
        ],
        "beliefs": {
            gap_id: {"dist": {str(k): w for k, w in sorted(b.dist.items(), key=lambda kv: str(kv[0]))}, "resolved": b.resolved}
            for gap_id, b in sorted(session.beliefs.gaps.items())
        },
        "tree": tree_summary(session.tree),
    }


async def run_operator_session(connection, scenario: Scenario, config: Config) -> None:
    """Drive one episode over an accepted connection."""
    session_id = uuid.uuid4().hex[:12]
    sequence = 0

    async def send(frame_type: str, payload: dict) -> None:
        nonlocal sequence
        sequence += 1
        frame = {"type": frame_type, "session_id": session_id, "sequence": sequence, "payload": payload}
        await connection.send(json.dumps(frame, sort_keys=True))

    def parse_frame(raw) -> dict | None:
        try:
            frame = json.loads(raw)
        except (json.JSONDecodeError, TypeError):
            return None
        return frame if isinstance(frame, dict) else None

    try:
        hello = parse_frame(await connection.recv())
    except ConnectionClosed:
        return
    if hello is None or hello.get("type") != "hello":
        await send("error", {"code": "MALFORMED", "detail": "expected hello frame first"})
        await connection.close()
        return
    if hello.get("protocol_version") != PROTOCOL_VERSION:
        await send("error", {"code": "VERSION", "detail": f"server speaks protocol {PROTOCOL_VERSION}"})
        await connection.close()
        return

    session = MintSession(scenario, config)
    await send("state", state_payload(scenario, session))

    while (query := session.pending_query) is not None:
        await send(
            "query",
            {
                "query_id": query.query_id,
                "text": phrase_query(query, scenario),
                "ig_bits": session.pending_ig(),
            },
        )
        while True:
            try:
                frame = parse_frame(await connection.recv())
            except ConnectionClosed:
                return  # disconnect mid-query aborts the episode
            if frame is None or frame.get("type") != "answer" or not isinstance(frame.get("payload"), dict):
                await send("error", {"code": "MALFORMED", "detail": "expected an answer frame"})
                continue
            payload = frame["payload"]
            if payload.get("query_id") != query.query_id:
                await send("error", {"code": "STALE_ANSWER", "detail": f"outstanding query is {query.query_id}"})
                continue
            answer = parse_answer(str(payload.get("value", "")))
            if answer is None:
                await send("error", {"code": "MALFORMED", "detail": "value must be yes, no, or unknown"})
                continue
            break
        session.submit(answer)
        await send("state", state_payload(scenario, session))

    try:
        plan = session.final_plan()
    except MissionInfeasibleError:
        plan = None
    if plan is not None:
        await send("plan", {"cells": [list(c) for c in plan.path], "cost": plan.total_cost})
    success, cost, reason = execute_plan(scenario, plan)
    await send(
        "done",
        {
            "result": {
                "success": success,
                "queries_asked": session.asked,
                "executed_cost": None if math.isinf(cost) else cost,
                "failure_reason": None if reason is None else reason.value,
            }
        },
    )
    await connection.close()


class SessionServer:
    """Hosts operator sessions; each connection runs an independent episode."""

    def __init__(self, scenario: Scenario, config: Config, host: str = "127.0.0.1", port: int = 0):
        self.scenario = scenario
        self.config = config
        self.host = host
        self.port = port
        self._server = None
        self._completed = 0
        self._completion = asyncio.Event()

    async def start(self) -> "SessionServer":
        async def handler(connection):
            try:
                await run_operator_session(connection, self.scenario, self.config)
            finally:
                self._completed += 1
                self._completion.set()

        self._server = await ws_serve(handler, self.host, self.port)
        self.port = self._server.sockets[0].getsockname()[1]
        return self

    async def wait_for_sessions(self, count: int = 1) -> None:
        while self._completed < count:
            self._completion.clear()
            await self._completion.wait()

    async def close(self) -> None:
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()

    @property
    def url(self) -> str:
        return f"ws://{self.host}:{self.port}"


def serve(scenario: Scenario, config: Config, port: int, host: str = "127.0.0.1", sessions: int = 1) -> None:
    """Blocking entry point: host ``sessions`` episodes, then shut down.

    ``sessions=0`` serves forever (until interrupted).
    """

    async def main() -> None:
        server = await SessionServer(scenario, config, host=host, port=port).start()
        print(f"session server listening on {server.url}")
        try:
            if sessions:
                await server.wait_for_sessions(sessions)
            else:
                await asyncio.Future()
        finally:
            await server.close()

    asyncio.run(main())
