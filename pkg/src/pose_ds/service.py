"""Realtime simulation sessions over WebSocket.

Each connecting client owns one paused session: a fixed-rate
integration loop over the loaded model that streams State frames and
accepts goal updates, perturbations, resets and pause control. Extra
connections can attach to an existing session read-only with
``/ws?observe=<session_id>``.

The tick applies the same step and event helpers in the same order as
the offline rollout. A client that schedules its messages with the
optional ``at`` sim-time therefore gets the exact trajectory, bit for
bit, that ``rollout`` produces from the equivalent schedule; the
service adds transport, not a second integrator.

Client frames without ``at`` take effect at the next tick boundary in
arrival order; ``Pause``/``Resume`` without ``at`` act immediately.
``Reset`` re-seeds the robot state and leaves the clock and goal
alone. The sim advances dt per tick (default 100 Hz) and broadcasts at
30 Hz, plus one frame at every boundary where an event fired or the
converged flag flipped, so clients never miss the interesting sample.
"""

import asyncio
import json
import logging
import time
import uuid
from collections import deque
from importlib import resources
from pathlib import Path

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from jsonschema import Draft7Validator

from . import quat
from .demo import Pose
from .ds import (
    MODEL_FMT,
    DSState,
    angular_velocity,
    apply_goal_change,
    apply_world_jump,
    is_converged,
    latent_linear_velocity,
    lyapunov_values,
    pushforward_to_task,
    step,
    to_latent,
)
from .errors import PoseDsError

log = logging.getLogger("pose_ds.service")

BROADCAST_DT = 1.0 / 30.0
CLIENT_TAGS = ("SetTarget", "Perturb", "Reset", "Pause", "Resume")
# Boundary tie order mirrors the offline rollout: goal moves before
# jumps, control last.
_RANK = {"SetTarget": 0, "Perturb": 1, "Reset": 2, "Pause": 3, "Resume": 3}


def wire_schema():
    path = resources.files("pose_ds").joinpath("schema/wire_messages.schema.json")
    with path.open() as f:
        return json.load(f)


_SCHEMA = wire_schema()
_CLIENT_VALIDATOR = Draft7Validator(
    {
        "definitions": _SCHEMA["definitions"],
        "oneOf": [{"$ref": f"#/definitions/{t}"} for t in CLIENT_TAGS],
    }
)


def model_info(model):
    return {
        "fmt": MODEL_FMT,
        "beta": model.beta,
        "gamma2": model.gamma2,
        "meta": model.meta,
    }


class Connection:
    """One WebSocket with its own outbound queue and writer task, so
    the session loop and per-message error replies never interleave
    writes on the socket."""

    def __init__(self, ws, observer):
        self.ws = ws
        self.observer = observer
        self.out = asyncio.Queue()
        self.server_seq = 0
        self.last_client_seq = -1
        self.writer = asyncio.create_task(self._write_loop())

    def send(self, doc):
        framed = dict(doc)
        framed["seq"] = self.server_seq
        self.server_seq += 1
        self.out.put_nowait(json.dumps(framed))

    def send_error(self, code, text):
        self.send({"type": "Error", "code": int(code), "text": text})

    async def _write_loop(self):
        try:
            while True:
                await self.ws.send_text(await self.out.get())
        except Exception:
            pass

    async def close(self):
        self.writer.cancel()
        try:
            await self.ws.close()
        except Exception:
            pass


class Session:
    def __init__(self, model, dt, pacing):
        self.id = uuid.uuid4().hex[:12]
        self.model = model
        self.dt = float(dt)
        self.pacing = max(0.0, float(pacing))
        self.goal = Pose.identity()
        start = model.demo_start()
        self.x, self.q = to_latent(model, start, self.goal)
        self.tick = 0
        self.started = False
        self.paused = True
        self.conns = []
        self.queue = asyncio.Queue()
        self.scheduled = []  # (at, rank, client_seq, kind, payload), kept sorted
        self.live = deque()  # (kind, payload) in arrival order
        self.closing = False
        self.was_converged = False
        self._wall_anchor = None
        self._sim_anchor = 0.0
        self._pace_ratio = 0.0
        self._next_bcast = 0.0
        self.task = None

    @property
    def sim_time(self):
        return self.tick * self.dt

    # -- message intake (called from the session loop only) ----------

    def _enqueue(self, doc):
        kind = doc["type"]
        if "at" in doc:
            entry = (float(doc["at"]), _RANK[kind], doc["seq"], kind, doc)
            self.scheduled.append(entry)
            self.scheduled.sort()
        elif kind == "Pause":
            self.paused = True
        elif kind == "Resume":
            self._resume()
        else:
            self.live.append((kind, doc))

    def _resume(self):
        self.paused = False
        self._wall_anchor = time.monotonic()
        self._sim_anchor = self.sim_time
        self._next_bcast = self.sim_time

    async def _drain(self, block):
        if block:
            doc = await self.queue.get()
            if doc is not None:
                self._enqueue(doc)
        while True:
            try:
                doc = self.queue.get_nowait()
            except asyncio.QueueEmpty:
                return
            if doc is not None:
                self._enqueue(doc)

    # -- event application at a tick boundary ------------------------

    def _apply_event(self, kind, doc):
        if kind == "SetTarget":
            new_goal = Pose(
                np.array(doc["pose"]["x"], dtype=float),
                quat.normalize(np.array(doc["pose"]["q"], dtype=float)),
            )
            self.x, self.q = apply_goal_change(
                self.model, self.x, self.q, self.goal, new_goal
            )
            self.goal = new_goal
        elif kind == "Perturb":
            self.x, self.q = apply_world_jump(
                self.model,
                self.x,
                self.q,
                self.goal,
                np.array(doc["dx"], dtype=float),
                np.array(doc["dq"], dtype=float),
            )
        elif kind == "Reset":
            start = Pose(
                np.array(doc["start"]["x"], dtype=float),
                quat.normalize(np.array(doc["start"]["q"], dtype=float)),
            )
            self.x, self.q = to_latent(self.model, start, self.goal)
        elif kind == "Pause":
            self.paused = True
        elif kind == "Resume":
            self._resume()

    def _apply_boundary(self, t):
        """Scheduled events due at sim time t (rollout tie order), then
        live events in arrival order. Returns whether any state event
        fired."""
        fired = False
        while self.scheduled and self.scheduled[0][0] <= t + 1e-12:
            _, _, _, kind, doc = self.scheduled.pop(0)
            self._apply_event(kind, doc)
            fired = fired or kind in ("SetTarget", "Perturb", "Reset")
        while self.live:
            kind, doc = self.live.popleft()
            self._apply_event(kind, doc)
            fired = True
        return fired

    # -- output -------------------------------------------------------

    def _state_doc(self):
        x, q = self.x, self.q
        xd = latent_linear_velocity(self.model, x)
        w = angular_velocity(self.model, x, q, xd)
        vpos, vori = lyapunov_values(self.model, x, q)
        ty, tq, tv, tw = pushforward_to_task(self.model, x, q, xd, w)
        gq, gx = self.goal.q, self.goal.x
        doc = {
            "type": "State",
            "t": self.sim_time,
            "x": [float(v) for v in quat.rotate(gq, ty) + gx],
            "q": [float(v) for v in quat.product(gq, tq)],
            "v": [float(v) for v in quat.rotate(gq, tv)],
            "w": [float(v) for v in quat.rotate(gq, tw)],
            "goal": {
                "x": [float(v) for v in gx],
                "q": [float(v) for v in gq],
            },
            "V_pos": float(vpos),
            "V_ori": float(vori),
            "converged": bool(is_converged(self.model, x, q)),
            "paused": self.paused,
            "pacing": self._pace_ratio,
        }
        return doc

    def _broadcast_state(self):
        doc = self._state_doc()
        flat = (
            doc["x"] + doc["q"] + doc["v"] + doc["w"],
            doc["V_pos"],
            doc["V_ori"],
        )
        if not np.all(np.isfinite(np.concatenate([flat[0], flat[1:]]))):
            self._broadcast_error(500, "non-finite state, session paused")
            self.paused = True
            return
        for conn in self.conns:
            conn.send(doc)
        self.was_converged = doc["converged"]

    def _broadcast_error(self, code, text):
        for conn in self.conns:
            conn.send_error(code, text)

    # -- the loop -----------------------------------------------------

    async def run(self):
        try:
            while self.conns and not self.closing:
                await self._drain(block=self.paused)
                if self.closing or not self.conns or self.paused:
                    continue
                if not self.started:
                    # Boundary t=0: anything scheduled at or before the
                    # start configures the first frame, like the offline
                    # rollout's initial event pass.
                    self._apply_boundary(0.0)
                    self.started = True
                    self._broadcast_state()
                    self._next_bcast += BROADCAST_DT
                    continue
                try:
                    st = step(
                        self.model, DSState(self.x, self.q, self.sim_time), self.dt
                    )
                except (PoseDsError, FloatingPointError) as e:
                    log.warning("session %s: integration failed: %s", self.id, e)
                    self._broadcast_error(500, f"integration failed: {e}")
                    self.paused = True
                    continue
                self.x, self.q = st.x, st.q
                self.tick += 1
                t = self.sim_time
                fired = self._apply_boundary(t)
                due = t + 1e-12 >= self._next_bcast
                conv_flip = (
                    bool(is_converged(self.model, self.x, self.q))
                    != self.was_converged
                )
                if due:
                    self._next_bcast += BROADCAST_DT
                if due or fired or conv_flip:
                    self._broadcast_state()
                await self._pace(t)
        finally:
            for conn in list(self.conns):
                await conn.close()
            self.conns.clear()

    async def _pace(self, t):
        if self._wall_anchor is not None:
            elapsed = time.monotonic() - self._wall_anchor
            sim = t - self._sim_anchor
            if sim > 0:
                self._pace_ratio = elapsed / sim
        if self.pacing > 0:
            deadline = self._wall_anchor + (t - self._sim_anchor) / self.pacing
            delay = deadline - time.monotonic()
            if delay > 0:
                await asyncio.sleep(delay)
                return
        # Free-running still has to yield so readers get scheduled.
        await asyncio.sleep(0)

    def wake(self):
        self.queue.put_nowait(None)


def _frontend_dir():
    d = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    return d if d.is_dir() else None


def create_app(model, dt=0.01, pacing=1.0, static_dir=None):
    """FastAPI app exposing /healthz, /model, /ws, and the built web
    frontend when its dist directory exists."""
    app = FastAPI()
    info = model_info(model)

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/model")
    def model_route():
        return info

    @app.websocket("/ws")
    async def ws_route(ws: WebSocket):
        await ws.accept()
        observe = ws.query_params.get("observe")
        if observe is not None:
            await _run_observer(ws, app, observe)
        else:
            try:
                session_pacing = float(ws.query_params.get("pacing", pacing))
            except ValueError:
                session_pacing = pacing
            await _run_owner(ws, app, model, dt, session_pacing)

    app.state.sessions = {}
    app.state.dt = dt

    static = static_dir if static_dir is not None else _frontend_dir()
    if static:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static), html=True))
    return app


async def _run_owner(ws, app, model, dt, pacing):
    session = Session(model, dt, pacing)
    conn = Connection(ws, observer=False)
    session.conns.append(conn)
    app.state.sessions[session.id] = session
    conn.send(
        {
            "type": "Hello",
            "session_id": session.id,
            "observer": False,
            "dt": session.dt,
            "model_meta": model_info(model),
        }
    )
    session.task = asyncio.create_task(session.run())
    try:
        await _read_messages(ws, conn, session)
    finally:
        session.closing = True
        session.wake()
        await session.task
        app.state.sessions.pop(session.id, None)
        await conn.close()


async def _run_observer(ws, app, session_id):
    session = app.state.sessions.get(session_id)
    if session is None:
        await ws.send_text(
            json.dumps(
                {"type": "Error", "code": 404, "text": f"no session {session_id!r}", "seq": 0}
            )
        )
        await ws.close()
        return
    conn = Connection(ws, observer=True)
    session.conns.append(conn)
    conn.send(
        {
            "type": "Hello",
            "session_id": session.id,
            "observer": True,
            "dt": session.dt,
            "model_meta": model_info(session.model),
        }
    )
    try:
        await _read_messages(ws, conn, session)
    finally:
        if conn in session.conns:
            session.conns.remove(conn)
        await conn.close()


def _reject_reason(doc):
    if isinstance(doc, dict) and doc.get("type") not in CLIENT_TAGS:
        return f"unknown or server-only message type {doc.get('type')!r}"
    err = next(_CLIENT_VALIDATOR.iter_errors(doc), None)
    return f"schema violation: {err.message}" if err else "schema violation"


def _payload_problem(doc):
    """JSON numbers can smuggle NaN/Infinity past the schema, and a
    zero quaternion cannot be normalized; both get a 400 here."""
    vals = [doc.get("at", 0.0)]
    for key in ("pose", "start"):
        if key in doc:
            vals += doc[key]["x"] + doc[key]["q"]
            if float(np.linalg.norm(doc[key]["q"])) < 1e-9:
                return "zero-norm quaternion"
    for key in ("dx", "dq"):
        if key in doc:
            vals += doc[key]
    if not all(np.isfinite(v) for v in vals):
        return "non-finite number in payload"
    return None


async def _read_messages(ws, conn, session):
    """Validate incoming frames and forward the good ones into the
    session queue; every rejection is answered on this connection only."""
    while True:
        try:
            text = await ws.receive_text()
        except (WebSocketDisconnect, RuntimeError):
            return
        try:
            doc = json.loads(text)
        except json.JSONDecodeError:
            conn.send_error(400, "invalid JSON")
            continue
        if not _CLIENT_VALIDATOR.is_valid(doc):
            conn.send_error(400, _reject_reason(doc))
            continue
        problem = _payload_problem(doc)
        if problem:
            conn.send_error(400, problem)
            continue
        if conn.observer:
            conn.send_error(403, "observer connection is read-only")
            continue
        if doc["seq"] <= conn.last_client_seq:
            conn.send_error(400, f"seq {doc['seq']} not above {conn.last_client_seq}")
            continue
        conn.last_client_seq = doc["seq"]
        if doc["type"] == "Perturb":
            dx = float(np.linalg.norm(doc["dx"]))
            angle = float(np.linalg.norm(doc["dq"]))
            if dx > 1.0 or angle > np.pi:
                conn.send_error(
                    422,
                    f"perturbation outside workspace bound (|dx|={dx:.3g} m, angle={angle:.3g} rad)",
                )
                continue
        session.queue.put_nowait(doc)


def run_service(model, port=8080, host="0.0.0.0", dt=0.01, static_dir=None):
    """Blocking entry point used by the CLI; binds the socket first so
    a busy port surfaces as OSError to the caller."""
    import socket

    import uvicorn

    app = create_app(model, dt=dt, static_dir=static_dir)
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    sock.bind((host, port))
    sock.listen(128)
    log.info("serving on %s:%d (dt=%g)", host, port, dt)
    config = uvicorn.Config(app, log_level="warning")
    server = uvicorn.Server(config)
    server.run(sockets=[sock])
