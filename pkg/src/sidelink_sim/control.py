"""Live-control service: a newline-delimited-JSON command/telemetry surface
wrapped around a running simulation.

Wire protocol (one duplex TCP connection per client, default port 5705):
every message is a single JSON object on its own line, tagged with a "type"
field: "cmd" (client to server), "ack", "err" and "telemetry" (server to
client).  Commands are serialized into one total order and take effect only at
subframe boundaries, so a seed plus the session journal replays bit-identically.
"""

from __future__ import annotations

import datetime
import json
import socket
import socketserver
import threading
import time
from collections import deque
from typing import Optional

from sidelink_sim.linkadapt import LinkType
from sidelink_sim.simcore import Mode, RadioParams, World

DEFAULT_PORT = 5705
DEFAULT_TELEMETRY_INTERVAL = 100
CLIENT_SEND_QUEUE = 512

COMMAND_TARGETS = ("enodeb", "relay_dl", "relay_sl", "remote")

# inclusive numeric ranges accepted over the wire; amplitude's lower bound is
# exclusive (checked separately)
PARAM_RANGES = {
    "frequency_hz": (1e6, 100e9),
    "tx_gain_db": (0.0, 90.0),
    "rx_gain_db": (0.0, 90.0),
    "n_prb": (1, 25),
    "amplitude": (0.0, 1.0),
    "mcs_index": (0, 28),
    "cell_id": (0, 503),
    "rnti": (0, 0xFFFF),
}
INT_PARAMS = ("n_prb", "mcs_index", "cell_id", "rnti")


def _utc_now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


class ControlEngine:
    """Owns the simulation; applies commands at subframe boundaries and emits
    acks, errors and periodic telemetry into an ordered outbox.

    The network layer only calls submit() and drains the outbox; all state
    mutation happens on whatever thread calls tick().
    """

    def __init__(
        self,
        world: World,
        telemetry_interval: int = DEFAULT_TELEMETRY_INTERVAL,
        journal_path: Optional[str] = None,
        running: bool = True,
    ):
        if telemetry_interval < 1:
            raise ValueError("telemetry interval must be positive")
        self.world = world
        self.interval = telemetry_interval
        self.journal_path = journal_path
        self.running = running
        self.pending: deque = deque()
        self.outbox: list = []
        self._lock = threading.Lock()
        self._bits_mark = 0
        self._ok_mark = 0
        self._err_mark = 0

    # --- command intake ----------------------------------------------------

    def submit(self, cmd: dict, client_id=None) -> None:
        with self._lock:
            self.pending.append((cmd, client_id))

    # --- per-target plumbing -----------------------------------------------

    def _radio_for(self, target: str) -> RadioParams:
        cfg = self.world.config
        return {
            "enodeb": cfg.enodeb,
            "relay_dl": cfg.relay_downlink,
            "relay_sl": cfg.relay_sidelink,
            "remote": cfg.remote,
        }[target]

    def _validate_param(self, target: str, name: str, value):
        """Returns (coerced value, None) or (None, (code, message))."""
        if name not in RadioParams.FIELDS:
            return None, ("unknown_param", f"no such parameter {name!r}")
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            return None, ("range", f"{name} must be numeric")
        lo, hi = PARAM_RANGES[name]
        if not lo <= value <= hi or (name == "amplitude" and value == 0):
            return None, ("range", f"{name}={value!r} outside [{lo}, {hi}]")
        if name in INT_PARAMS:
            if value != int(value):
                return None, ("range", f"{name} must be an integer")
            value = int(value)
        if name == "mcs_index" and target == "relay_sl":
            entry = self.world.table.entry(int(value))
            if entry.modulation_order > LinkType.SIDELINK.max_order:
                return None, (
                    "cap",
                    f"mcs {value} uses order {entry.modulation_order}, "
                    f"above the sidelink cap",
                )
        return value, None

    def _apply(self, cmd: dict) -> dict:
        """Apply one validated-or-not command; returns the ack or err payload."""
        request_id = cmd.get("request_id")
        action = cmd.get("action")
        base = {"request_id": request_id, "subframe": self.world.subframe}

        if action == "set_param":
            target = cmd.get("target")
            if target not in COMMAND_TARGETS:
                return {"type": "err", "error": "unknown_target", **base}
            value, problem = self._validate_param(target, cmd.get("name"), cmd.get("value"))
            if problem:
                code, message = problem
                return {"type": "err", "error": code, "message": message, **base}
            setattr(self._radio_for(target), cmd["name"], value)
            return {
                "type": "ack",
                "applied": {"target": target, "name": cmd["name"], "value": value},
                **base,
            }
        if action == "set_mode":
            wanted = cmd.get("mode")
            if wanted not in ("downlink", "sidelink"):
                return {"type": "err", "error": "range", "message": f"unknown mode {wanted!r}", **base}
            mode = Mode.DOWNLINK if wanted == "downlink" else Mode.SIDELINK
            link = LinkType.DOWNLINK if mode is Mode.DOWNLINK else LinkType.SIDELINK
            if not self.world.channels.covered(link, self.world.config.remote_position_cm):
                return {
                    "type": "err",
                    "error": "no_coverage",
                    "message": f"{wanted} out of coverage at this position",
                    **base,
                }
            self.world.switch_mode(mode)
            return {"type": "ack", "applied": {"mode": wanted}, **base}
        if action == "start":
            self.running = True
            return {"type": "ack", "applied": {"running": True}, **base}
        if action == "stop":
            self.running = False
            return {"type": "ack", "applied": {"running": False}, **base}
        if action == "snapshot":
            return {
                "type": "ack",
                "applied": {
                    "snapshot": {
                        "config": self.world.config.to_dict(),
                        "subframe": self.world.subframe,
                        "mode": self.world.remote.mode.value,
                        "running": self.running,
                    }
                },
                **base,
            }
        return {"type": "err", "error": "unknown_action", "message": f"{action!r}", **base}

    def _journal(self, cmd: dict, result: dict) -> None:
        if self.journal_path is None:
            return
        record = {"timestamp": _utc_now(), "cmd": cmd, "result": result}
        with open(self.journal_path, "a") as f:
            f.write(json.dumps(record) + "\n")

    # --- the subframe clock ------------------------------------------------

    def process_pending(self) -> None:
        while True:
            with self._lock:
                if not self.pending:
                    return
                cmd, client_id = self.pending.popleft()
            result = self._apply(cmd)
            result["to"] = client_id
            self._journal(cmd, {k: v for k, v in result.items() if k != "to"})
            self.outbox.append(result)

    def telemetry_record(self) -> dict:
        w = self.world
        bits = w.remote.bits_delivered
        ok, err = w.remote.tb_ok, w.remote.tb_err
        d_bits = bits - self._bits_mark
        d_ok, d_err = ok - self._ok_mark, err - self._err_mark
        self._bits_mark, self._ok_mark, self._err_mark = bits, ok, err
        cfg = w.config
        return {
            "type": "telemetry",
            "subframe_index": w.subframe,
            "mode": w.remote.mode.value,
            "dl_snr_db": w.last_dl_snr,
            "sl_snr_db": w.last_sl_snr,
            "throughput_bps": d_bits * 1000.0 / self.interval,
            "bler": d_err / (d_ok + d_err) if (d_ok + d_err) else 0.0,
            "queue_depth": len(w.relay.queue),
            "params": {
                "enodeb": dict(cfg.enodeb.__dict__),
                "relay_dl": dict(cfg.relay_downlink.__dict__),
                "relay_sl": dict(cfg.relay_sidelink.__dict__),
                "remote": dict(cfg.remote.__dict__),
            },
        }

    def tick(self) -> None:
        """One subframe boundary: apply queued commands, then advance."""
        self.process_pending()
        if not self.running:
            return
        self.world.step_subframe()
        if self.world.subframe % self.interval == 0:
            self.outbox.append(self.telemetry_record())

    def drain_outbox(self) -> list:
        out, self.outbox = self.outbox, []
        return out


def run_headless(engine: ControlEngine, n_subframes: int) -> list:
    """Drive the engine without a network layer; returns all emitted messages."""
    messages = []
    for _ in range(n_subframes):
        engine.tick()
        messages.extend(engine.drain_outbox())
    return messages


def replay_journal(
    world: World,
    journal_path: str,
    n_subframes: int,
    telemetry_interval: int = DEFAULT_TELEMETRY_INTERVAL,
) -> list:
    """Re-run a session from its journal: each command is resubmitted so it
    applies at the subframe recorded in its result, reproducing the original
    telemetry history bit-identically for the same seed and config."""
    with open(journal_path) as f:
        records = [json.loads(line) for line in f if line.strip()]
    schedule: dict = {}
    for rec in records:
        schedule.setdefault(rec["result"]["subframe"], []).append(rec["cmd"])
    engine = ControlEngine(world, telemetry_interval=telemetry_interval)
    messages = []
    for _ in range(n_subframes):
        for cmd in schedule.pop(engine.world.subframe, []):
            engine.submit(cmd)
        engine.tick()
        messages.extend(engine.drain_outbox())
    return messages


class _ClientState:
    _next_id = 0

    def __init__(self):
        self.id = _ClientState._next_id
        _ClientState._next_id += 1
        self.queue: deque = deque(maxlen=CLIENT_SEND_QUEUE)
        self.dropped = 0
        self.event = threading.Event()
        self.alive = True


class ControlServer:
    """Threaded TCP front end: one simulation thread owns the engine; per-client
    reader threads submit commands, per-client writer threads drain bounded
    send queues (oldest messages dropped for slow consumers)."""

    def __init__(
        self,
        engine: ControlEngine,
        host: str = "127.0.0.1",
        port: int = DEFAULT_PORT,
        tick_seconds: float = 0.001,
    ):
        self.engine = engine
        self.tick_seconds = tick_seconds
        self.clients: dict = {}
        self._clients_lock = threading.Lock()
        self._stop = threading.Event()
        outer = self

        class Handler(socketserver.StreamRequestHandler):
            def handle(self):
                state = _ClientState()
                with outer._clients_lock:
                    outer.clients[state.id] = state
                writer = threading.Thread(
                    target=outer._writer_loop, args=(state, self.connection), daemon=True
                )
                writer.start()
                try:
                    for raw in self.rfile:
                        line = raw.decode("utf-8", errors="replace").strip()
                        if not line:
                            continue
                        try:
                            msg = json.loads(line)
                        except json.JSONDecodeError:
                            outer._send_to(state, {"type": "err", "error": "bad_json"})
                            continue
                        if msg.get("type") != "cmd":
                            outer._send_to(
                                state, {"type": "err", "error": "unknown_type"}
                            )
                            continue
                        outer.engine.submit(msg, client_id=state.id)
                finally:
                    state.alive = False
                    state.event.set()
                    with outer._clients_lock:
                        outer.clients.pop(state.id, None)

        class Server(socketserver.ThreadingTCPServer):
            allow_reuse_address = True
            daemon_threads = True

        self.server = Server((host, port), Handler)
        self.address = self.server.server_address

    @staticmethod
    def _send_to(state: _ClientState, message: dict) -> None:
        if len(state.queue) == state.queue.maxlen:
            state.dropped += 1
        state.queue.append(message)
        state.event.set()

    def _writer_loop(self, state: _ClientState, conn: socket.socket) -> None:
        while state.alive:
            state.event.wait(timeout=0.5)
            state.event.clear()
            while state.queue:
                msg = state.queue.popleft()
                try:
                    conn.sendall((json.dumps(msg) + "\n").encode())
                except OSError:
                    state.alive = False
                    return

    def _sim_loop(self) -> None:
        while not self._stop.is_set():
            t0 = time.monotonic()
            self.engine.tick()
            for msg in self.engine.drain_outbox():
                to = msg.pop("to", None)
                with self._clients_lock:
                    targets = (
                        list(self.clients.values())
                        if to is None
                        else [c for c in self.clients.values() if c.id == to]
                    )
                for c in targets:
                    self._send_to(c, msg)
            if self.tick_seconds > 0:
                remain = self.tick_seconds - (time.monotonic() - t0)
                if remain > 0:
                    time.sleep(remain)

    def serve_forever(self) -> None:
        sim = threading.Thread(target=self._sim_loop, daemon=True)
        sim.start()
        try:
            self.server.serve_forever(poll_interval=0.1)
        finally:
            self._stop.set()
            sim.join(timeout=2.0)

    def start_background(self) -> threading.Thread:
        t = threading.Thread(target=self.serve_forever, daemon=True)
        t.start()
        return t

    def shutdown(self) -> None:
        self._stop.set()
        self.server.shutdown()
        self.server.server_close()
