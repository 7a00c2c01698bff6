"""Command/telemetry relay between the mission loop and operator clients.

HTTP POST for commands and ratings, server-push (SSE) for telemetry frames.
All mutation funnels through one queue drained at tick boundaries by the
single loop thread; reads are snapshot-based. Every accepted input is
persisted (commands.jsonl) before it is acknowledged, and events, ratings and
the final trajectory land in the same output directory, so scenario + seed +
command log reproduce the run bit-exactly.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from pathlib import Path
from typing import Iterator, Literal

from fastapi import FastAPI, Query
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel, ConfigDict

from . import sim
from .scenario import ScenarioSpec
from .sim import canonical_json

logger = logging.getLogger(__name__)

WORLD_KINDS = ("move", "scan", "assist", "recharge", "idle")
CONTROL_KINDS = ("pause", "resume", "override-gate")


class CommandMessage(BaseModel):
    model_config = ConfigDict(extra="forbid")

    v: Literal[1] = 1
    kind: Literal[
        "move", "scan", "assist", "recharge", "idle", "pause", "resume", "override-gate"
    ]
    issuer: str
    target_agent: str
    params: dict = {}
    client_ts: float | None = None


class RatingMessage(BaseModel):
    model_config = ConfigDict(extra="forbid")

    v: Literal[1] = 1
    rater: str
    ratee: str
    expectation: Literal["selfish-goal", "team-goal", "unsure"]
    client_ts: float | None = None


class Rejected(Exception):
    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)


class CommandQueue:
    """FIFO of pending inputs; a tick drains every control input but at most
    one world action per target agent, leaving the rest queued."""

    def __init__(self):
        self._items: list[dict] = []

    def push(self, entry: dict) -> None:
        self._items.append(entry)

    def pending(self) -> list[dict]:
        return list(self._items)

    def drain_for_tick(self) -> list[dict]:
        drained, kept, seen_agents = [], [], set()
        for entry in self._items:
            kind = entry["kind"]
            if kind in WORLD_KINDS:
                agent = entry["target_agent"]
                if agent in seen_agents:
                    kept.append(entry)
                    continue
                seen_agents.add(agent)
            drained.append(entry)
        self._items = kept
        return drained


class MissionRuntime:
    """Owns the simulation state and the loop thread."""

    def __init__(
        self,
        spec: ScenarioSpec,
        seed: int | None = None,
        ticks: int = 200,
        out_dir: Path | str = "out",
        tick_seconds: float = 0.5,
    ):
        self.spec = spec
        self.ticks = ticks
        self.tick_seconds = tick_seconds
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)

        self.state = sim.init(spec, seed)
        self.lock = threading.RLock()
        self.frame_ready = threading.Condition(self.lock)
        self.queue = CommandQueue()
        self.paused = False
        self.ended = False
        self.next_command_seq = 1
        self._persisted_events = 0
        self._answered_windows: set[tuple[str, int]] = set()
        self._thread: threading.Thread | None = None

        self._commands_path = self.out_dir / "commands.jsonl"
        self._events_path = self.out_dir / "events.jsonl"
        self._ratings_path = self.out_dir / "ratings.jsonl"
        for path in (self._commands_path, self._events_path, self._ratings_path):
            path.write_text("", encoding="utf-8")

    # -- frames -----------------------------------------------------------

    @property
    def frames(self) -> list[dict]:
        return self.state.snapshots

    def latest_frame(self) -> dict:
        with self.lock:
            return self.frames[-1]

    def scenario_document(self) -> dict:
        return {
            "digest": self.spec.digest,
            "seed": self.state.seed,
            "ticks": self.ticks,
            "roster": [
                {"id": a.id, "kind": a.kind, "controlled_by": a.controlled_by}
                for a in self.spec.agents
            ],
            "rating_interval": self.spec.rating_interval,
            "thresholds": self.spec.thresholds,
            "required_edges": [list(e) for e in self.spec.required_edges],
            "grid": {
                "width": self.spec.grid.width,
                "height": self.spec.grid.height,
                "hazards": sorted(list(c) for c in self.spec.grid.hazards),
                "recharge_exits": [list(c) for c in self.spec.grid.recharge_exits],
            },
        }

    # -- intake -------------------------------------------------------------

    def _persist_command(self, entry: dict) -> None:
        with self._commands_path.open("a", encoding="utf-8") as fh:
            fh.write(canonical_json(entry) + "\n")
            fh.flush()

    def enqueue_command(self, msg: CommandMessage) -> int:
        with self.lock:
            if self.ended:
                raise Rejected("mission-ended")
            roster = set(self.spec.roster())
            if msg.target_agent not in roster:
                raise Rejected("unknown-agent")
            if msg.kind == "move":
                to = msg.params.get("to")
                if (
                    not isinstance(to, list)
                    or len(to) != 2
                    or not all(isinstance(x, int) for x in to)
                ):
                    raise Rejected("malformed-params")
            elif msg.kind == "scan" and not isinstance(msg.params.get("tag"), str):
                raise Rejected("malformed-params")
            elif msg.kind == "assist" and not isinstance(msg.params.get("agent"), str):
                raise Rejected("malformed-params")

            seq = self.next_command_seq
            self.next_command_seq += 1
            entry = {
                "seq": seq,
                "received_tick": self.state.world.tick,
                "kind": msg.kind,
                "issuer": msg.issuer,
                "target_agent": msg.target_agent,
                "params": msg.params,
                "client_ts": msg.client_ts,
            }
            self._persist_command(entry)
            if msg.kind == "pause":
                self.paused = True
            elif msg.kind == "resume":
                self.paused = False
            else:
                self.queue.push(entry)
            return seq

    def submit_rating(self, msg: RatingMessage) -> int:
        with self.lock:
            if self.ended:
                raise Rejected("mission-ended")
            tick = self.state.world.tick
            window = None
            for (rater, start) in self.state.open_prompts:
                if rater == msg.rater and start <= tick < start + self.spec.rating_interval:
                    window = start
                    break
            if window is not None and (msg.rater, window) in self._answered_windows:
                window = None
            if window is None:
                answered_recently = any(
                    rater == msg.rater for (rater, _) in self._answered_windows
                )
                raise Rejected("already-rated" if answered_recently else "no-open-prompt")
            if msg.ratee not in set(self.spec.roster()):
                raise Rejected("unknown-agent")
            self._answered_windows.add((msg.rater, window))
            seq = self.next_command_seq
            self.next_command_seq += 1
            entry = {
                "seq": seq,
                "received_tick": tick,
                "kind": "rating",
                "issuer": msg.rater,
                "target_agent": msg.rater,
                "params": {
                    "rater": msg.rater,
                    "ratee": msg.ratee,
                    "expectation": msg.expectation,
                },
                "client_ts": msg.client_ts,
            }
            self._persist_command(entry)
            self.queue.push(entry)
            return seq

    # -- loop ---------------------------------------------------------------

    def _persist_tick_outputs(self) -> None:
        log = self.state.log
        if len(log) > self._persisted_events:
            with self._events_path.open("a", encoding="utf-8") as fh:
                for record in log[self._persisted_events:]:
                    fh.write(canonical_json(record.to_dict()) + "\n")
            self._persisted_events = len(log)
        ratings = self.frames[-1]["ratings"]
        if ratings:
            with self._ratings_path.open("a", encoding="utf-8") as fh:
                for rating in ratings:
                    fh.write(canonical_json(rating) + "\n")

    def tick_once(self) -> None:
        with self.frame_ready:
            if self.ended:
                return
            commands = self.queue.drain_for_tick()
            sim.step(self.state, commands)
            self._persist_tick_outputs()
            if self.state.world.tick >= self.ticks:
                self._finish_locked()
            self.frame_ready.notify_all()

    def _finish_locked(self) -> None:
        self.ended = True
        trajectory = sim.trajectory_of(self.state)
        (self.out_dir / "trajectory.json").write_text(
            trajectory.to_json(), encoding="utf-8"
        )
        sim.export_metrics(trajectory, "csv", self.out_dir)

    def finish(self) -> None:
        with self.frame_ready:
            if not self.ended:
                self._finish_locked()
            self.frame_ready.notify_all()

    def _loop(self) -> None:
        while True:
            with self.lock:
                if self.ended:
                    return
                paused = self.paused
            if paused:
                time.sleep(self.tick_seconds / 4)
                continue
            self.tick_once()
            time.sleep(self.tick_seconds)

    def start(self) -> None:
        if self._thread is None:
            self._thread = threading.Thread(target=self._loop, daemon=True)
            self._thread.start()

    def stop(self) -> None:
        self.finish()
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None

    # -- streaming ------------------------------------------------------------

    def frames_from(self, since: int) -> Iterator[dict]:
        """Frames with tick >= since, then live frames until the mission ends.
        No gaps, no duplicates."""
        idx = max(0, since)
        while True:
            with self.frame_ready:
                while idx >= len(self.frames) and not self.ended:
                    self.frame_ready.wait(timeout=1.0)
                if idx < len(self.frames):
                    frame = self.frames[idx]
                    idx += 1
                else:
                    return
            yield frame


def reproduce_from_command_log(
    spec: ScenarioSpec, seed: int | None, ticks: int, entries: list[dict]
) -> sim.SimState:
    """Re-run a gateway mission from its persisted command log: feed each
    recorded input at its recorded tick through the same draining rules."""
    state = sim.init(spec, seed)
    queue = CommandQueue()
    pending = sorted(entries, key=lambda e: e["seq"])
    i = 0
    for _ in range(ticks):
        tick = state.world.tick
        while i < len(pending) and pending[i]["received_tick"] <= tick:
            entry = pending[i]
            if entry["kind"] not in ("pause", "resume"):
                queue.push(entry)
            i += 1
        sim.step(state, queue.drain_for_tick())
    return state


def create_app(runtime: MissionRuntime) -> FastAPI:
    app = FastAPI(title="trust-ladder gateway", docs_url=None, redoc_url=None)

    @app.post("/api/command")
    def post_command(msg: CommandMessage):
        try:
            seq = runtime.enqueue_command(msg)
        except Rejected as exc:
            return JSONResponse({"status": "rejected", "reason": exc.reason}, status_code=400)
        return {"status": "accepted", "seq": seq}

    @app.post("/api/rating")
    def post_rating(msg: RatingMessage):
        try:
            seq = runtime.submit_rating(msg)
        except Rejected as exc:
            return JSONResponse({"status": "rejected", "reason": exc.reason}, status_code=400)
        return {"status": "accepted", "seq": seq}

    @app.get("/api/state")
    def get_state():
        return runtime.latest_frame()

    @app.get("/api/trust")
    def get_trust():
        frame = runtime.latest_frame()
        return frame["trust"]

    @app.get("/api/scenario")
    def get_scenario():
        return runtime.scenario_document()

    @app.get("/api/stream")
    def get_stream(since: int = Query(default=0, ge=0)):
        def gen():
            for frame in runtime.frames_from(since):
                yield f"data: {canonical_json(frame)}\n\n"
            yield "event: end\ndata: {}\n\n"

        return StreamingResponse(gen(), media_type="text/event-stream")

    return app
