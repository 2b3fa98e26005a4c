"""eNodeB / relay UE / remote UE state machines on a 1 ms subframe clock:
the relay's dual downlink-RX / sidelink-TX pipeline, mode selection, and
measurement statistics."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from sidelink_sim import channels as ch
from sidelink_sim import chanmodel as cm
from sidelink_sim.calibrate import transmit_once
from sidelink_sim.linkadapt import (
    LinkType,
    McsTable,
    bler_for,
    max_throughput,
    transport_block_bits,
)
from sidelink_sim.waveform import Numerology

Mode = LinkType  # the remote UE's receive mode is exactly a link choice

DEFAULT_QUEUE_DEPTH = 8
DEFAULT_BOOT_LATENCY = 5
DEFAULT_EVAL_INTERVAL = 100
DEFAULT_HYSTERESIS_DB = 3.0
SWEEP_SAMPLES = 1000


@dataclass
class RadioParams:
    frequency_hz: float = 2.6e9
    tx_gain_db: float = 55.0
    rx_gain_db: float = 40.0
    n_prb: int = 25
    amplitude: float = 1.0
    mcs_index: int = 0
    cell_id: int = 1
    rnti: int = 0x4601

    def __post_init__(self):
        if not 0 < self.amplitude <= 1:
            raise ValueError("amplitude must be in (0, 1]")

    FIELDS = (
        "frequency_hz", "tx_gain_db", "rx_gain_db", "n_prb",
        "amplitude", "mcs_index", "cell_id", "rnti",
    )


@dataclass
class LinkStats:
    n: int
    mean_db: float
    std_db: float
    ci95_db: float
    min_db: float
    max_db: float
    tb_ok: int = 0
    tb_err: int = 0
    bits_delivered: int = 0

    @property
    def bler(self) -> float:
        total = self.tb_ok + self.tb_err
        return self.tb_err / total if total else 0.0


def collect_stats(samples) -> LinkStats:
    """Sample mean/std (n-1 denominator), 95% CI width, min, max."""
    arr = np.asarray(samples, dtype=float)
    if arr.size < 1:
        raise ValueError("need at least one sample")
    std = float(arr.std(ddof=1)) if arr.size >= 2 else 0.0
    ci = 1.96 * std / np.sqrt(arr.size) if arr.size >= 2 else 0.0
    return LinkStats(
        n=int(arr.size),
        mean_db=float(arr.mean()),
        std_db=std,
        ci95_db=float(ci),
        min_db=float(arr.min()),
        max_db=float(arr.max()),
    )


class NoService(Exception):
    """Neither link offers coverage."""


def select_mode(
    dl_snr_db: Optional[float],
    sl_snr_db: Optional[float],
    current: Mode,
    hysteresis_db: float,
) -> Mode:
    """Pick the receive mode; None means the link is out of coverage.

    With both links covered, switch away from `current` only when the other
    link beats it by more than the hysteresis.
    """
    if hysteresis_db < 0:
        raise ValueError("hysteresis must be non-negative")
    if dl_snr_db is None and sl_snr_db is None:
        raise NoService("both links out of coverage")
    if dl_snr_db is None:
        return Mode.SIDELINK
    if sl_snr_db is None:
        return Mode.DOWNLINK
    if current is Mode.DOWNLINK:
        return Mode.SIDELINK if sl_snr_db - dl_snr_db > hysteresis_db else Mode.DOWNLINK
    return Mode.DOWNLINK if dl_snr_db - sl_snr_db > hysteresis_db else Mode.SIDELINK


@dataclass
class WorldConfig:
    remote_position_cm: float = 120.0
    relay_position_cm: float = cm.DEFAULT_RELAY_POSITION_CM
    channel_mode: str = "replay"  # replay | analytic
    fidelity: str = "abstract"  # abstract | bit-true
    sidelink_gain_db: float = 40.0
    downlink_gain_db: float = 55.0
    enodeb: RadioParams = field(default_factory=lambda: RadioParams(tx_gain_db=55.0, mcs_index=5))
    relay_downlink: RadioParams = field(default_factory=RadioParams)
    relay_sidelink: RadioParams = field(default_factory=lambda: RadioParams(tx_gain_db=40.0, mcs_index=5))
    remote: RadioParams = field(default_factory=RadioParams)
    seed: int = 0
    hysteresis_db: float = DEFAULT_HYSTERESIS_DB
    eval_interval: int = DEFAULT_EVAL_INTERVAL
    boot_latency: int = DEFAULT_BOOT_LATENCY
    queue_depth: int = DEFAULT_QUEUE_DEPTH
    auto_mode: bool = False
    initial_mode: str = "downlink"

    def __post_init__(self):
        if self.remote_position_cm < 0 or self.relay_position_cm < 0:
            raise ValueError("positions must be non-negative")
        if self.channel_mode not in ("replay", "analytic"):
            raise ValueError(f"unknown channel mode {self.channel_mode!r}")
        if self.fidelity not in ("abstract", "bit-true"):
            raise ValueError(f"unknown fidelity {self.fidelity!r}")

    @classmethod
    def from_json(cls, path) -> "WorldConfig":
        with open(path) as f:
            raw = json.load(f)
        for key in ("enodeb", "relay_downlink", "relay_sidelink", "remote"):
            if key in raw:
                raw[key] = RadioParams(**raw[key])
        return cls(**raw)

    def to_dict(self) -> dict:
        out = {}
        for k, v in self.__dict__.items():
            out[k] = dict(v.__dict__) if isinstance(v, RadioParams) else v
        return out


class ChannelSet:
    """Distance -> SNR for both links, replaying tables or evaluating the model."""

    def __init__(self, config: WorldConfig):
        self.config = config
        if config.channel_mode == "replay":
            self.dl_table = cm.load_embedded_table(LinkType.DOWNLINK, int(config.downlink_gain_db))
            self.sl_table = cm.load_embedded_table(LinkType.SIDELINK, int(config.sidelink_gain_db))
            self.dl_params = None
            self.sl_params = None
        else:
            self.dl_table = None
            self.sl_table = None
            self.dl_params = cm.default_params(LinkType.DOWNLINK)
            self.sl_params = replace(
                cm.default_params(LinkType.SIDELINK),
                relay_position_cm=config.relay_position_cm,
            )

    def covered(self, link: LinkType, position_cm: float) -> bool:
        """Coverage check that leaves the random state untouched."""
        if self.config.channel_mode == "replay":
            table = self.dl_table if link is LinkType.DOWNLINK else self.sl_table
            return table.covers(position_cm)
        if link is LinkType.DOWNLINK:
            return position_cm <= cm.DOWNLINK_CELL_EDGE_CM
        return True

    def snr(self, link: LinkType, position_cm: float, rng: np.random.Generator, size=None):
        """SNR draw(s) in dB, or None when the link has no coverage there."""
        if self.config.channel_mode == "replay":
            table = self.dl_table if link is LinkType.DOWNLINK else self.sl_table
            try:
                return cm.replay_sample(table, position_cm, rng, size=size)
            except cm.OutOfCoverage:
                return None
        if link is LinkType.DOWNLINK:
            if position_cm > cm.DOWNLINK_CELL_EDGE_CM:
                return None
            gain = self.config.downlink_gain_db
            params = self.dl_params
        else:
            gain = self.config.sidelink_gain_db
            params = self.sl_params
        value = cm.model_snr_db(link, gain, position_cm, params)
        return np.full(size, value) if size is not None else value


@dataclass
class SimTb:
    seq: int
    n_bits: int
    payload: Optional[np.ndarray] = None


@dataclass
class RelayState:
    queue: deque
    drops: int = 0
    dl_tb_received: int = 0
    dl_tb_failed: int = 0
    frags_sent: int = 0
    frag_errors: bool = False
    sidelink_stalled: bool = False


@dataclass
class RemoteState:
    mode: Mode
    boot_countdown: int = 0
    synced: bool = True
    tb_ok: int = 0
    tb_err: int = 0
    bits_delivered: int = 0
    delivered_payloads: list = field(default_factory=list)
    dl_snr_samples: list = field(default_factory=list)
    sl_snr_samples: list = field(default_factory=list)


class World:
    """Single-clock simulation; node updates commit eNodeB -> relay -> remote."""

    def __init__(self, config: WorldConfig, table: Optional[McsTable] = None):
        self.config = config
        self.table = table or McsTable.calibrated_default()
        self.num = Numerology(n_prb=config.enodeb.n_prb)
        self.channels = ChannelSet(config)
        self.rng = np.random.default_rng(config.seed)
        self.subframe = 0
        self.tb_seq = 0
        self.relay = RelayState(queue=deque(maxlen=config.queue_depth))
        self._frag_chunks: list = []
        initial = Mode.DOWNLINK if config.initial_mode == "downlink" else Mode.SIDELINK
        self.remote = RemoteState(mode=initial)
        # per-subframe channel snapshot for telemetry
        self.last_dl_snr: Optional[float] = None
        self.last_sl_snr: Optional[float] = None

    # --- helpers -----------------------------------------------------------

    def dl_tb_bits(self) -> int:
        return transport_block_bits(
            self.config.enodeb.mcs_index, self.config.enodeb.n_prb, LinkType.DOWNLINK, self.table
        )

    def sl_tb_bits(self) -> int:
        return transport_block_bits(
            self.config.relay_sidelink.mcs_index,
            self.config.relay_sidelink.n_prb,
            LinkType.SIDELINK,
            self.table,
        )

    def _receive(
        self,
        link: LinkType,
        snr_db: Optional[float],
        mcs: int,
        payload: Optional[np.ndarray],
        rng,
    ) -> tuple[bool, Optional[np.ndarray]]:
        """Reception outcome for one subframe.

        Abstract fidelity draws against the BLER model and passes the payload
        through unchanged; bit-true runs the full waveform chain.
        """
        if snr_db is None:
            return False, None
        if self.config.fidelity == "abstract":
            bler = bler_for(snr_db, mcs, link, self.table)
            ok = bool(rng.random() >= bler)
            return ok, payload if ok else None
        return transmit_once(payload, mcs, link, snr_db, rng, self.table, self.num)

    # --- one 1 ms tick -----------------------------------------------------

    def step_subframe(self) -> None:
        cfg = self.config
        relay, remote = self.relay, self.remote

        dl_snr_remote = self.channels.snr(LinkType.DOWNLINK, cfg.remote_position_cm, self.rng)
        sl_snr_remote = self.channels.snr(LinkType.SIDELINK, cfg.remote_position_cm, self.rng)
        dl_snr_relay = self.channels.snr(LinkType.DOWNLINK, cfg.relay_position_cm, self.rng)
        self.last_dl_snr, self.last_sl_snr = dl_snr_remote, sl_snr_remote
        if dl_snr_remote is not None:
            remote.dl_snr_samples.append(dl_snr_remote)
        if sl_snr_remote is not None:
            remote.sl_snr_samples.append(sl_snr_remote)

        # relay sidelink TX: forward the head-of-queue TB, fragmented to the
        # sidelink transport block size; uses the queue as it stood before this
        # subframe's downlink reception (one-subframe pipeline latency)
        sl_delivery = None
        if not relay.sidelink_stalled and relay.queue:
            head = relay.queue[0]
            sl_bits = self.sl_tb_bits()
            n_frags = max(1, -(-head.n_bits // sl_bits))
            chunk = None
            if head.payload is not None:
                start = relay.frags_sent * sl_bits
                chunk = np.zeros(sl_bits, dtype=np.uint8)
                piece = head.payload[start : start + sl_bits]
                chunk[: piece.size] = piece
            frag_ok, frag_bits = self._receive(
                LinkType.SIDELINK, sl_snr_remote, cfg.relay_sidelink.mcs_index, chunk, self.rng
            )
            relay.frags_sent += 1
            relay.frag_errors = relay.frag_errors or not frag_ok
            if frag_bits is not None:
                self._frag_chunks.append(frag_bits)
            if relay.frags_sent >= n_frags:
                assembled = None
                if not relay.frag_errors and head.payload is not None:
                    assembled = np.concatenate(self._frag_chunks)[: head.n_bits]
                sl_delivery = (head, not relay.frag_errors, assembled)
                relay.queue.popleft()
                relay.frags_sent = 0
                relay.frag_errors = False
                self._frag_chunks = []
        # remote sidelink reception of a completed TB
        if sl_delivery is not None and remote.mode is Mode.SIDELINK and remote.boot_countdown == 0:
            tb, ok, assembled = sl_delivery
            if ok:
                remote.tb_ok += 1
                remote.bits_delivered += tb.n_bits
                remote.delivered_payloads.append(
                    (self.subframe, SimTb(tb.seq, tb.n_bits, assembled))
                )
            else:
                remote.tb_err += 1

        # eNodeB downlink TX + relay reception
        tb = SimTb(seq=self.tb_seq, n_bits=self.dl_tb_bits())
        if self.config.fidelity == "bit-true":
            tb.payload = self.rng.integers(0, 2, tb.n_bits).astype(np.uint8)
        self.tb_seq += 1
        relay_ok, relay_bits = self._receive(
            LinkType.DOWNLINK, dl_snr_relay, cfg.enodeb.mcs_index, tb.payload, self.rng
        )
        if relay_ok:
            relay.dl_tb_received += 1
            if len(relay.queue) == relay.queue.maxlen:
                # oldest-drop; if the dropped TB was mid-fragmentation the
                # transmitter abandons it
                relay.drops += 1
                if relay.frags_sent > 0:
                    relay.frags_sent = 0
                    relay.frag_errors = False
                    self._frag_chunks = []
            relay.queue.append(SimTb(tb.seq, tb.n_bits, relay_bits))
        else:
            relay.dl_tb_failed += 1

        # remote downlink reception of the same subframe
        if remote.mode is Mode.DOWNLINK and remote.boot_countdown == 0:
            ok, bits = self._receive(
                LinkType.DOWNLINK, dl_snr_remote, cfg.enodeb.mcs_index, tb.payload, self.rng
            )
            if dl_snr_remote is not None:
                if ok:
                    remote.tb_ok += 1
                    remote.bits_delivered += tb.n_bits
                    remote.delivered_payloads.append(
                        (self.subframe, SimTb(tb.seq, tb.n_bits, bits))
                    )
                else:
                    remote.tb_err += 1

        if remote.boot_countdown > 0:
            remote.boot_countdown -= 1
            if remote.boot_countdown == 0:
                remote.synced = True

        self.subframe += 1

        # periodic automatic mode selection on windowed mean SNR
        if cfg.auto_mode and self.subframe % cfg.eval_interval == 0:
            win = cfg.eval_interval
            dl_mean = (
                float(np.mean(remote.dl_snr_samples[-win:]))
                if remote.dl_snr_samples[-win:]
                else None
            )
            sl_mean = (
                float(np.mean(remote.sl_snr_samples[-win:]))
                if remote.sl_snr_samples[-win:]
                else None
            )
            try:
                target = select_mode(dl_mean, sl_mean, remote.mode, cfg.hysteresis_db)
            except NoService:
                target = remote.mode
            if target is not remote.mode:
                self.switch_mode(target)

    def run(self, n_subframes: int) -> None:
        for _ in range(n_subframes):
            self.step_subframe()

    def switch_mode(self, mode: Mode) -> None:
        """Tear down and reboot the receive chain; no delivery during boot."""
        if mode is self.remote.mode:
            return
        self.remote.mode = mode
        self.remote.boot_countdown = self.config.boot_latency
        self.remote.synced = False


@dataclass
class SyncCapture:
    samples: np.ndarray
    mib_tag: int = ch.MIB_TAG


@dataclass
class NodeSyncState:
    link: LinkType
    synced: bool = False
    timing_offset: Optional[int] = None
    attempts: int = 0


def acquire_sync(state: NodeSyncState, capture: SyncCapture, num: Optional[Numerology] = None) -> NodeSyncState:
    """Run sync detection for the node's link; validate the MIB tag on success."""
    state.attempts += 1
    seq = ch.generate_sync(state.link, num=num)
    det = ch.detect_sync(capture.samples, seq)
    if det is None or capture.mib_tag != ch.MIB_TAG:
        return state
    state.synced = True
    state.timing_offset = det.offset
    return state


@dataclass
class SweepPoint:
    position_cm: float
    dl_stats: Optional[LinkStats]
    sl_stats: Optional[LinkStats]
    dl_maxtput: Optional[object]
    sl_maxtput: Optional[object]
    selected: Mode


def sweep_distance(config: WorldConfig, positions, table: Optional[McsTable] = None) -> list[SweepPoint]:
    """1000 SNR samples per covered link per position, stats, max throughput,
    and the mode a remote UE walking outward would select."""
    if list(positions) != sorted(positions):
        raise ValueError("positions must be sorted")
    table = table or McsTable.calibrated_default()
    channels = ChannelSet(config)
    rng = np.random.default_rng(config.seed)
    current = Mode.DOWNLINK
    out = []
    for pos in positions:
        dl = channels.snr(LinkType.DOWNLINK, pos, rng, size=SWEEP_SAMPLES)
        sl = channels.snr(LinkType.SIDELINK, pos, rng, size=SWEEP_SAMPLES)
        dl_stats = collect_stats(dl) if dl is not None else None
        sl_stats = collect_stats(sl) if sl is not None else None
        dl_tput = (
            max_throughput(dl_stats.mean_db, config.enodeb.n_prb, LinkType.DOWNLINK, table)
            if dl_stats
            else None
        )
        sl_tput = (
            max_throughput(
                sl_stats.mean_db, config.relay_sidelink.n_prb, LinkType.SIDELINK, table
            )
            if sl_stats
            else None
        )
        current = select_mode(
            dl_stats.mean_db if dl_stats else None,
            sl_stats.mean_db if sl_stats else None,
            current,
            config.hysteresis_db,
        )
        out.append(
            SweepPoint(
                position_cm=pos,
                dl_stats=dl_stats,
                sl_stats=sl_stats,
                dl_maxtput=dl_tput,
                sl_maxtput=sl_tput,
                selected=current,
            )
        )
    return out
