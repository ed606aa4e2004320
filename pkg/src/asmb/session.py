"""Interactive session: a fixed-rate simulation loop behind a socket protocol.

The heart is SessionCore, a single-threaded object that applies commands,
advances physics one tick at a time, and keeps a replayable command log.
SessionServer wraps a core in a TCP listener: reader threads enqueue incoming
commands, the simulation thread drains the queue between ticks (so a command
never lands mid-step), and every state change goes back out as a snapshot or
delta push. The first client to connect drives the session; later clients are
read-only observers.

Messages are length-framed JSON: a 4-byte big-endian byte count followed by a
UTF-8 body with sorted keys and no whitespace. docs/protocol.md documents
every message, and tests/golden/transcript_v1.jsonl freezes an example
exchange byte for byte.
"""

from __future__ import annotations

import json
import queue
import socket
import struct
import threading
import time

from . import physics as P
from . import project_io as pio
from .config import PhysicsConfig
from .errors import (
    BindFailure,
    EngineError,
    InvalidCommand,
    SchemaViolation,
    UnknownId,
)
from .meshes import load_obj
from .pdb import load_pdb_spheres
from .scene import (
    CURSORS,
    INTERACTION_MODES,
    PHYSICS_MODES,
    SceneDoc,
    new_document,
)
from .transforms import transform_from_json, transform_to_json

SNAPSHOT_EVERY = 120
AUTOSAVE_EVERY = 600
MAX_MESSAGE_BYTES = 64 * 1024 * 1024

COMMAND_KINDS = (
    "load_model", "spawn", "duplicate", "grab_begin", "grab_pose", "grab_end",
    "set_mode", "toggle_collisions", "toggle_springs", "chain_create",
    "chain_set_tab", "add_spring", "snap_terminus", "set_keyframe", "set_time",
    "play", "pause", "export", "save", "load", "select",
)

# commands that restructure the document (new entities, new keyframes, a new
# document); each forces a full snapshot because deltas carry object motion only
STRUCTURAL_KINDS = frozenset((
    "load_model", "spawn", "duplicate", "chain_create", "chain_set_tab",
    "add_spring", "snap_terminus", "set_keyframe", "load",
))


# -- wire framing ----------------------------------------------------------------


def encode_body(message: dict) -> bytes:
    return json.dumps(
        message, sort_keys=True, separators=(",", ":"), allow_nan=False
    ).encode("utf-8")


def encode_message(message: dict) -> bytes:
    body = encode_body(message)
    return struct.pack(">I", len(body)) + body


def read_message(stream) -> dict | None:
    """Read one framed message from a binary stream.

    Returns None on a clean EOF at a frame boundary; a close mid-frame is an
    error. The stream needs only a file-style read(n).
    """
    header = _read_exact(stream, 4)
    if len(header) == 0:
        return None
    if len(header) < 4:
        raise ValueError("connection closed mid-frame")
    (length,) = struct.unpack(">I", header)
    if length > MAX_MESSAGE_BYTES:
        raise ValueError(f"frame of {length} bytes exceeds the limit")
    body = _read_exact(stream, length)
    if len(body) < length:
        raise ValueError("connection closed mid-frame")
    return json.loads(body.decode("utf-8"))


def _read_exact(stream, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = stream.read(n - len(buf))
        if not chunk:
            break
        buf += chunk
    return buf


def coalesce_poses(commands: list[dict]) -> list[tuple[dict, bool]]:
    """Tag each command with whether it survives grab_pose coalescing.

    Within one drained batch, only the last grab_pose per cursor before any
    other command touching that cursor is applied; earlier ones are
    acknowledged but discarded, mirroring how a tracker stream samples.
    """
    survives = [True] * len(commands)
    latest_pose: dict[str, int] = {}
    for i in range(len(commands) - 1, -1, -1):
        cmd = commands[i]
        kind = cmd.get("kind")
        cursor = cmd.get("payload", {}).get("cursor") if isinstance(
            cmd.get("payload"), dict
        ) else None
        if kind == "grab_pose":
            if cursor in latest_pose:
                survives[i] = False
            else:
                latest_pose[cursor] = i
        elif kind in ("grab_begin", "grab_end"):
            latest_pose.pop(cursor, None)
    return list(zip(commands, survives))


# -- headless session core ------------------------------------------------------------


class SessionCore:
    """Owns the document: applies commands between ticks, steps physics,
    builds the push payloads, and records a replayable command log."""

    def __init__(self, doc: SceneDoc | None = None, cfg: PhysicsConfig | None = None):
        self.doc = doc if doc is not None else new_document(cfg)
        self.step_index = 0
        self.playing = False
        self.log: list[str] = []
        self.snapshot_due = False
        self._changed: set[int] = set()
        self._stats = P._zero_stats(self.doc, 0).to_json()

    # -- command dispatch ----------------------------------------------------

    def apply(self, kind: str, payload: dict) -> dict:
        """Apply one command; returns the reply result. Raises EngineError
        subtypes on failure, in which case the document is unchanged and the
        command is not logged."""
        if kind not in COMMAND_KINDS:
            raise InvalidCommand(f"unknown command kind {kind!r}")
        if not isinstance(payload, dict):
            raise InvalidCommand("payload must be an object")
        handler = getattr(self, f"_cmd_{kind}")
        result = handler(payload)
        self.log.append(
            f"at {self.step_index} "
            + json.dumps(
                {"kind": kind, "payload": payload},
                sort_keys=True,
                separators=(",", ":"),
                allow_nan=False,
            )
        )
        if kind in STRUCTURAL_KINDS:
            self.snapshot_due = True
        return result

    @staticmethod
    def _field(payload: dict, key: str, kinds, what: str):
        if key not in payload:
            raise InvalidCommand(f"missing field {key!r}")
        value = payload[key]
        wanted = kinds if isinstance(kinds, tuple) else (kinds,)
        if isinstance(value, bool) and bool not in wanted:
            raise InvalidCommand(f"field {key!r} must be {what}")
        if not isinstance(value, wanted):
            raise InvalidCommand(f"field {key!r} must be {what}")
        return value

    def _int_field(self, payload: dict, key: str) -> int:
        return self._field(payload, key, int, "an integer")

    def _num_field(self, payload: dict, key: str) -> float:
        return float(self._field(payload, key, (int, float), "a number"))

    def _transform_field(self, payload: dict, key: str):
        data = self._field(payload, key, dict, "a transform")
        try:
            return transform_from_json(data)
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidCommand(f"bad transform in {key!r}: {exc}") from None

    def _cmd_load_model(self, payload: dict) -> dict:
        fmt = self._field(payload, "format", str, "a string")
        text = self._field(payload, "text", str, "a string")
        name = payload.get("name", "")
        if fmt == "obj":
            ref = self.doc.register_mesh(load_obj(text), name=name)
        elif fmt == "pdb":
            mesh, meta = load_pdb_spheres(
                text,
                radius_scale=float(payload.get("radius_scale", 1.0)),
                subdiv=int(payload.get("subdiv", 0)),
            )
            ref = self.doc.register_mesh(mesh, meta=meta, name=name)
        else:
            raise InvalidCommand(f"format must be obj or pdb, got {fmt!r}")
        return {"mesh": ref}

    def _cmd_spawn(self, payload: dict) -> dict:
        ref = self._field(payload, "mesh", str, "a string")
        name = payload.get("name", "")
        if "transform" in payload:
            obj = self.doc.spawn(
                ref, self._transform_field(payload, "transform"), name=name
            )
        else:
            obj = self.doc.spawn(ref, name=name)
        return {"id": obj.id}

    def _cmd_duplicate(self, payload: dict) -> dict:
        ids = self._field(payload, "ids", list, "a list")
        return {"ids": self.doc.duplicate([int(i) for i in ids])}

    def _cursor_field(self, payload: dict) -> str:
        cursor = self._field(payload, "cursor", str, "a string")
        if cursor not in CURSORS:
            raise InvalidCommand(f"cursor must be one of {CURSORS}, got {cursor!r}")
        return cursor

    def _cmd_grab_begin(self, payload: dict) -> dict:
        cursor = self._cursor_field(payload)
        self.doc.grab_begin(cursor, self._int_field(payload, "id"))
        return {}

    def _cmd_grab_pose(self, payload: dict) -> dict:
        cursor = self._cursor_field(payload)
        self.doc.grab_pose(cursor, self._transform_field(payload, "target"))
        return {}

    def _cmd_grab_end(self, payload: dict) -> dict:
        return {"released": self.doc.grab_end(self._cursor_field(payload))}

    def _cmd_set_mode(self, payload: dict) -> dict:
        physics_mode = payload.get("physics")
        interaction = payload.get("interaction")
        if physics_mode is None and interaction is None:
            raise InvalidCommand("set_mode needs physics and/or interaction")
        if physics_mode is not None:
            if physics_mode not in PHYSICS_MODES:
                raise InvalidCommand(
                    f"physics mode must be one of {PHYSICS_MODES}, got {physics_mode!r}"
                )
            self.doc.physics_mode = physics_mode
        if interaction is not None:
            if interaction not in INTERACTION_MODES:
                raise InvalidCommand(
                    f"interaction mode must be one of {INTERACTION_MODES}, "
                    f"got {interaction!r}"
                )
            self.doc.interaction_mode = interaction
        return {"physics": self.doc.physics_mode, "interaction": self.doc.interaction_mode}

    def _cmd_toggle_collisions(self, payload: dict) -> dict:
        enabled = payload.get("enabled")
        if enabled is None:
            enabled = not self.doc.collisions_enabled
        elif not isinstance(enabled, bool):
            raise InvalidCommand("enabled must be true or false")
        self.doc.collisions_enabled = enabled
        return {"enabled": enabled}

    def _cmd_toggle_springs(self, payload: dict) -> dict:
        enabled = payload.get("enabled")
        if enabled is None:
            enabled = not self.doc.springs_enabled
        elif not isinstance(enabled, bool):
            raise InvalidCommand("enabled must be true or false")
        self.doc.springs_enabled = enabled
        return {"enabled": enabled}

    def _cmd_chain_create(self, payload: dict) -> dict:
        chain = self.doc.chain_create(
            self._int_field(payload, "base"),
            self._int_field(payload, "second"),
            self._int_field(payload, "n"),
        )
        return {"chain": chain.id, "members": list(chain.member_ids)}

    def _cmd_chain_set_tab(self, payload: dict) -> dict:
        chain_id = self._int_field(payload, "chain")
        t_ab = (
            self._transform_field(payload, "t_ab") if "t_ab" in payload else None
        )
        self.doc.chain_update(chain_id, t_ab=t_ab)
        return {"t_ab": transform_to_json(self.doc.chains[chain_id].t_ab)}

    def _cmd_add_spring(self, payload: dict) -> dict:
        def vec(key):
            items = self._field(payload, key, list, "a list of 3 numbers")
            if len(items) != 3:
                raise InvalidCommand(f"field {key!r} must be a list of 3 numbers")
            return tuple(float(x) for x in items)

        conn = self.doc.add_connector(
            self._int_field(payload, "a"), vec("anchor_a"),
            self._int_field(payload, "b"), vec("anchor_b"),
            rest_length=float(payload.get("rest_length", 0.0)),
            stiffness=float(payload.get("stiffness", 10.0)),
            display_only=bool(payload.get("display_only", False)),
        )
        return {"id": conn.id}

    def _cmd_snap_terminus(self, payload: dict) -> dict:
        end = self._field(payload, "end", str, "a string")
        which = self._field(payload, "which", str, "a string")
        try:
            P.snap_connector_to_terminus(
                self.doc, self._int_field(payload, "connector"), end, which
            )
        except ValueError as exc:
            raise InvalidCommand(str(exc)) from None
        return {}

    def _cmd_set_keyframe(self, payload: dict) -> dict:
        kf = self.doc.set_keyframe(
            self._int_field(payload, "id"),
            self._num_field(payload, "time") if "time" in payload else None,
        )
        return {"time": kf.time}

    def _cmd_set_time(self, payload: dict) -> dict:
        changed = self.doc.set_time(self._num_field(payload, "time"))
        self._changed.update(changed)
        return {"changed": changed}

    def _cmd_play(self, payload: dict) -> dict:
        self.playing = True
        return {}

    def _cmd_pause(self, payload: dict) -> dict:
        self.playing = False
        return {}

    def _cmd_export(self, payload: dict) -> dict:
        path = self._field(payload, "path", str, "a string")
        data = pio.export_animation(
            self.doc,
            self._num_field(payload, "fps"),
            self._num_field(payload, "t0"),
            self._num_field(payload, "t1"),
        )
        with open(path, "wb") as fh:
            fh.write(data)
        return {"path": path, "frame_count": json.loads(data)["frame_count"]}

    def _cmd_save(self, payload: dict) -> dict:
        if "path" in payload:
            path = self._field(payload, "path", str, "a string")
            pio.save_file(self.doc, path)
            return {"path": path}
        return {"project": json.loads(pio.save(self.doc).decode("utf-8"))}

    def _cmd_load(self, payload: dict) -> dict:
        if "path" in payload:
            doc = pio.load_file(self._field(payload, "path", str, "a string"))
        elif "data" in payload:
            doc = pio.load(self._field(payload, "data", str, "a string"))
        else:
            raise InvalidCommand("load needs path or data")
        self.doc = doc
        self.playing = False
        self._changed.clear()
        return {"objects": len(doc.objects)}

    def _cmd_select(self, payload: dict) -> dict:
        ids = self._field(payload, "ids", list, "a list")
        known = []
        for raw in ids:
            entity = int(raw)
            if (
                entity not in self.doc.objects
                and entity not in self.doc.groups
                and entity not in self.doc.chains
            ):
                raise UnknownId(entity)
            known.append(entity)
        self.doc.selection = known
        return {"selection": known}

    # -- stepping ----------------------------------------------------------------

    def tick(self) -> dict:
        """Advance one fixed timestep; returns the delta payload."""
        if self.playing:
            t = min(self.doc.current_time + self.doc.physics.dt, self.doc.duration)
            self._changed.update(self.doc.set_time(t))
            if t >= self.doc.duration:
                self.playing = False
        result = P.step(self.doc)
        self._stats = result.stats.to_json()
        moved = sorted(set(result.moved_ids) | self._changed)
        self._changed.clear()
        self.step_index += 1
        return {
            "step": self.step_index,
            "objects": {str(i): self._object_delta(i) for i in moved},
            "status": self.status(),
            "stats": self._stats,
        }

    def _object_delta(self, object_id: int) -> dict:
        obj = self.doc.objects[object_id]
        return {
            "transform": transform_to_json(obj.state.transform),
            "linear_velocity": [float(v) for v in obj.state.linear_velocity],
            "angular_velocity": [float(v) for v in obj.state.angular_velocity],
            "color": pio._color_json(obj.color),
            "group": obj.group_id,
            "visible": obj.visible,
        }

    def status(self) -> dict:
        return {
            "physics_mode": self.doc.physics_mode,
            "interaction_mode": self.doc.interaction_mode,
            "collisions": self.doc.collisions_enabled,
            "springs": self.doc.springs_enabled,
            "time": float(self.doc.current_time),
            "playing": self.playing,
            "selection": list(self.doc.selection),
            "grabs": {c: g.object_id for c, g in sorted(self.doc.grabs.items())},
        }

    def snapshot_payload(self) -> dict:
        self.snapshot_due = False
        return {
            "step": self.step_index,
            "doc": json.loads(pio.save(self.doc).decode("utf-8")),
            "status": self.status(),
            "stats": self._stats,
        }


# -- message builders (shared by the server and the golden transcript) -----------------


def hello_message(core: SessionCore, role: str) -> dict:
    return {
        "kind": "hello",
        "payload": {
            "format_version": pio.FORMAT_VERSION,
            "dt": core.doc.physics.dt,
            "role": role,
        },
    }


def snapshot_message(core: SessionCore) -> dict:
    return {"kind": "snapshot", "payload": core.snapshot_payload()}


def delta_message(delta_payload: dict) -> dict:
    return {"kind": "delta", "payload": delta_payload}


def stats_message(step: int, stats: dict) -> dict:
    return {"kind": "stats", "payload": dict(stats, step=step)}


def ok_reply(seq, result: dict) -> dict:
    return {"seq": seq, "ok": True, "result": result}


def error_reply(seq, error: Exception) -> dict:
    code = error.code if isinstance(error, EngineError) else "invalid_command"
    return {"seq": seq, "error": code, "detail": str(error)}


# -- script replay -----------------------------------------------------------------------


def parse_script(text: str) -> list[tuple[int, dict]]:
    """Parse 'at <step> <command json>' lines; blank lines and # comments ok."""
    out: list[tuple[int, dict]] = []
    last = -1
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(None, 2)
        if len(parts) != 3 or parts[0] != "at":
            raise SchemaViolation(f"script line {line_no}", "expected: at <step> <json>")
        try:
            step = int(parts[1])
        except ValueError:
            raise SchemaViolation(
                f"script line {line_no}", f"bad step index {parts[1]!r}"
            ) from None
        if step < last:
            raise SchemaViolation(
                f"script line {line_no}", "step indices must be non-decreasing"
            )
        if step < 0:
            raise SchemaViolation(f"script line {line_no}", "step index must be >= 0")
        try:
            cmd = json.loads(parts[2])
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"script line {line_no}", f"bad JSON: {exc}") from None
        if not isinstance(cmd, dict) or "kind" not in cmd:
            raise SchemaViolation(f"script line {line_no}", "command needs a kind")
        out.append((step, cmd))
        last = step
    return out


def replay_script(
    doc: SceneDoc,
    script: list[tuple[int, dict]],
    extra_steps: int = 0,
    cfg: PhysicsConfig | None = None,
    on_step=None,
) -> SessionCore:
    """Re-run a command log headlessly: commands scheduled for step k are
    applied before tick k executes, exactly as the live loop does. on_step,
    if given, receives each tick's delta payload."""
    core = SessionCore(doc, cfg)
    total = (max((s for s, _ in script), default=-1) + 1) + extra_steps
    cursor = 0
    for step in range(total):
        while cursor < len(script) and script[cursor][0] == step:
            cmd = script[cursor][1]
            core.apply(cmd.get("kind"), cmd.get("payload", {}))
            cursor += 1
        delta = core.tick()
        if on_step is not None:
            on_step(delta)
    return core


# -- TCP server --------------------------------------------------------------------------


class _Client:
    def __init__(self, conn_id: int, sock: socket.socket, role: str):
        self.conn_id = conn_id
        self.sock = sock
        self.stream = sock.makefile("rb")
        self.role = role
        self.send_lock = threading.Lock()
        self.last_seq: int | None = None
        self.alive = True

    def send(self, message: dict) -> bool:
        try:
            with self.send_lock:
                self.sock.sendall(encode_message(message))
            return True
        except OSError:
            self.alive = False
            return False


class SessionServer:
    """Serves one SessionCore over TCP at a fixed step rate.

    All document access happens on the simulation thread; reader threads only
    validate envelopes and enqueue. Set realtime=False to run ticks back to
    back (useful for tests that drive the session faster than wall clock).
    """

    def __init__(
        self,
        core: SessionCore | None = None,
        host: str = "127.0.0.1",
        port: int = 0,
        snapshot_every: int = SNAPSHOT_EVERY,
        autosave_path: str | None = None,
        realtime: bool = True,
    ):
        self.core = core if core is not None else SessionCore()
        self.host = host
        self.port = port
        self.snapshot_every = snapshot_every
        self.autosave_path = autosave_path
        self.realtime = realtime
        self._listener: socket.socket | None = None
        self._queue: queue.Queue = queue.Queue()
        self._clients: dict[int, _Client] = {}
        self._clients_lock = threading.Lock()
        self._driver_id: int | None = None
        self._next_conn_id = 1
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []
        self._last_pushed_stats: dict | None = None

    # -- lifecycle -------------------------------------------------------------

    def start(self) -> int:
        """Bind and start accepting; returns the bound port."""
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            listener.bind((self.host, self.port))
        except OSError as exc:
            listener.close()
            raise BindFailure(f"cannot bind {self.host}:{self.port}: {exc}") from None
        listener.listen(8)
        self._listener = listener
        self.port = listener.getsockname()[1]
        acceptor = threading.Thread(target=self._accept_loop, daemon=True)
        acceptor.start()
        self._threads.append(acceptor)
        return self.port

    def run(self) -> None:
        """Simulation loop; blocks until stop() is called."""
        if self._listener is None:
            self.start()
        dt = self.core.doc.physics.dt
        next_deadline = time.monotonic() + dt
        while not self._stop.is_set():
            self._drain_and_apply()
            delta = self.core.tick()
            self._emit(delta)
            if (
                self.autosave_path
                and self.core.step_index % AUTOSAVE_EVERY == 0
            ):
                pio.save_file(self.core.doc, self.autosave_path)
            if self.realtime:
                dt = self.core.doc.physics.dt
                delay = next_deadline - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
                    next_deadline += dt
                else:
                    next_deadline = time.monotonic() + dt
        if self.autosave_path:
            pio.save_file(self.core.doc, self.autosave_path)

    def stop(self) -> None:
        self._stop.set()
        if self._listener is not None:
            try:
                self._listener.close()
            except OSError:
                pass
        with self._clients_lock:
            clients = list(self._clients.values())
        for client in clients:
            try:
                client.sock.close()
            except OSError:
                pass

    # -- connection handling ------------------------------------------------------

    def _accept_loop(self) -> None:
        while not self._stop.is_set():
            try:
                sock, _addr = self._listener.accept()
            except OSError:
                return
            sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            with self._clients_lock:
                conn_id = self._next_conn_id
                self._next_conn_id += 1
                role = "driver" if self._driver_id is None else "observer"
                if role == "driver":
                    self._driver_id = conn_id
                client = _Client(conn_id, sock, role)
                self._clients[conn_id] = client
            self._queue.put(("connect", conn_id, None))
            reader = threading.Thread(
                target=self._reader_loop, args=(client,), daemon=True
            )
            reader.start()
            self._threads.append(reader)

    def _reader_loop(self, client: _Client) -> None:
        while not self._stop.is_set():
            try:
                message = read_message(client.stream)
            except (OSError, ValueError, json.JSONDecodeError):
                break
            if message is None:
                break
            seq = message.get("seq")
            if not isinstance(seq, int):
                client.send(error_reply(None, InvalidCommand("seq must be an integer")))
                continue
            if client.last_seq is not None and seq <= client.last_seq:
                client.send(error_reply(
                    seq, InvalidCommand(f"seq must increase (last was {client.last_seq})")
                ))
                continue
            client.last_seq = seq
            if client.role != "driver":
                client.send(error_reply(
                    seq, InvalidCommand("read-only observer: commands are rejected")
                ))
                continue
            self._queue.put(("command", client.conn_id, message))
        self._queue.put(("disconnect", client.conn_id, None))

    # -- simulation-thread internals ------------------------------------------------

    def _drain_and_apply(self) -> None:
        events = []
        while True:
            try:
                events.append(self._queue.get_nowait())
            except queue.Empty:
                break
        commands = []
        for event, conn_id, message in events:
            if event == "connect":
                self._send_welcome(conn_id)
            elif event == "disconnect":
                self._handle_disconnect(conn_id)
            else:
                commands.append((conn_id, message))
        tagged = coalesce_poses([m for _, m in commands])
        for (conn_id, _), (message, survives) in zip(commands, tagged):
            client = self._clients.get(conn_id)
            seq = message.get("seq")
            if not survives:
                if client is not None:
                    client.send(ok_reply(seq, {"coalesced": True}))
                continue
            try:
                result = self.core.apply(
                    message.get("kind"), message.get("payload", {})
                )
            except EngineError as exc:
                if client is not None:
                    client.send(error_reply(seq, exc))
                continue
            if client is not None:
                client.send(ok_reply(seq, result))

    def _send_welcome(self, conn_id: int) -> None:
        client = self._clients.get(conn_id)
        if client is None:
            return
        client.send(hello_message(self.core, client.role))
        client.send(snapshot_message(self.core))

    def _handle_disconnect(self, conn_id: int) -> None:
        with self._clients_lock:
            client = self._clients.pop(conn_id, None)
            was_driver = conn_id == self._driver_id
            if was_driver:
                self._driver_id = None
        if client is not None:
            try:
                client.sock.close()
            except OSError:
                pass
        if was_driver:
            # a vanished driver must not leave objects pinned to its cursors
            for cursor in list(self.core.doc.grabs):
                self.core.apply("grab_end", {"cursor": cursor})

    def _emit(self, delta: dict) -> None:
        if self._stats_changed(delta["stats"]):
            self._broadcast(stats_message(delta["step"], delta["stats"]))
        # A delta goes out every step; snapshots are extra checkpoints, so a
        # client folding deltas onto the last snapshot lands exactly on the
        # next one and can verify (or resync) there.
        self._broadcast(delta_message(delta))
        if self.core.snapshot_due or self.core.step_index % self.snapshot_every == 0:
            self._broadcast(snapshot_message(self.core))

    def _stats_changed(self, stats: dict) -> bool:
        if stats != self._last_pushed_stats:
            self._last_pushed_stats = dict(stats)
            return True
        return False

    def _broadcast(self, message: dict) -> None:
        with self._clients_lock:
            clients = list(self._clients.values())
        for client in clients:
            client.send(message)


def run_session(
    doc: SceneDoc | None = None,
    cfg: PhysicsConfig | None = None,
    host: str = "127.0.0.1",
    port: int = 0,
    autosave_path: str | None = None,
    on_listening=None,
) -> None:
    """Serve a session until interrupted; never returns normally."""
    server = SessionServer(
        SessionCore(doc, cfg), host=host, port=port, autosave_path=autosave_path
    )
    bound = server.start()
    if on_listening is not None:
        on_listening(bound)
    try:
        server.run()
    finally:
        server.stop()
