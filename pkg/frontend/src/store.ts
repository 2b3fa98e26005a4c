/** Panel state as a pure function of the server stream.
 *
 * Every mutation goes through submit() (records a pending command) or
 * apply() (folds one server message in). A form field shows the last ack'd
 * value; a pending value is only committed by its ack and reverted by its
 * error, so the UI never renders a change the simulation has not accepted.
 */

import {
  AckMsg,
  CommandMsg,
  ErrMsg,
  Mode,
  RadioParams,
  ServerMsg,
  Target,
  TelemetryMsg,
} from "./protocol.js";
import { ChartSeries, DEFAULT_CHART_CAPACITY } from "./ring.js";

export type ConnectionStatus = "disconnected" | "connecting" | "connected";

export interface PendingCommand {
  command: CommandMsg;
  submittedAt: number;
}

export interface TargetPanel {
  /** last ack'd values; null until the first snapshot or telemetry echo */
  committed: RadioParams | null;
  inlineError: string | null;
}

export interface ModeMarker {
  subframe: number;
  mode: Mode;
}

export interface PanelState {
  connection: ConnectionStatus;
  targets: Record<Target, TargetPanel>;
  pending: Map<string, PendingCommand>;
  mode: Mode | null;
  running: boolean;
  subframe: number;
  lastTelemetry: TelemetryMsg | null;
  chart: ChartSeries;
  modeMarkers: ModeMarker[];
  /** set when a reconnect happened and the next telemetry point should carry
   * a visible gap marker */
  gapPending: boolean;
}

const TARGETS: Target[] = ["enodeb", "relay_dl", "relay_sl", "remote"];

export function initialState(chartCapacity = DEFAULT_CHART_CAPACITY): PanelState {
  const targets = {} as Record<Target, TargetPanel>;
  for (const t of TARGETS) targets[t] = { committed: null, inlineError: null };
  return {
    connection: "disconnected",
    targets,
    pending: new Map(),
    mode: null,
    running: true,
    subframe: 0,
    lastTelemetry: null,
    chart: new ChartSeries(chartCapacity),
    modeMarkers: [],
    gapPending: false,
  };
}

export class PanelStore {
  readonly state: PanelState;

  constructor(chartCapacity = DEFAULT_CHART_CAPACITY) {
    this.state = initialState(chartCapacity);
  }

  setConnection(status: ConnectionStatus): void {
    const prev = this.state.connection;
    this.state.connection = status;
    if (prev === "connected" && status !== "connected") {
      this.state.gapPending = true; // next telemetry draws a gap marker
    }
  }

  /** Record an outgoing command; clears the target's stale inline error. */
  submit(command: CommandMsg): void {
    this.state.pending.set(command.request_id, {
      command,
      submittedAt: Date.now(),
    });
    if (command.action === "set_param" && command.target) {
      this.state.targets[command.target].inlineError = null;
    }
  }

  apply(msg: ServerMsg): void {
    if (msg.type === "ack") this.applyAck(msg);
    else if (msg.type === "err") this.applyErr(msg);
    else this.applyTelemetry(msg);
  }

  private applyAck(msg: AckMsg): void {
    const pending = msg.request_id ? this.state.pending.get(msg.request_id) : undefined;
    if (msg.request_id) this.state.pending.delete(msg.request_id);
    const applied = msg.applied ?? {};
    if ("snapshot" in applied) {
      const snap = applied.snapshot as {
        config: Record<string, unknown>;
        mode: Mode;
        running: boolean;
        subframe: number;
      };
      this.hydrate(snap);
      return;
    }
    if ("target" in applied && "name" in applied) {
      const target = applied.target as Target;
      const panel = this.state.targets[target];
      if (panel.committed) {
        (panel.committed as Record<string, number>)[applied.name as string] =
          applied.value as number;
      }
      panel.inlineError = null;
      return;
    }
    if ("mode" in applied) {
      this.state.mode = applied.mode as Mode;
      this.state.modeMarkers.push({ subframe: msg.subframe, mode: applied.mode as Mode });
      return;
    }
    if ("running" in applied) {
      this.state.running = applied.running as boolean;
    }
    void pending;
  }

  private applyErr(msg: ErrMsg): void {
    const pending = msg.request_id ? this.state.pending.get(msg.request_id) : undefined;
    if (msg.request_id) this.state.pending.delete(msg.request_id);
    const text = msg.message ?? msg.error;
    const cmd = pending?.command;
    if (cmd?.action === "set_param" && cmd.target) {
      // field reverts by simply never committing; surface the reason inline
      this.state.targets[cmd.target].inlineError = text;
    } else if (cmd?.action === "set_mode") {
      this.state.targets.remote.inlineError = text;
    }
  }

  private applyTelemetry(msg: TelemetryMsg): void {
    this.state.lastTelemetry = msg;
    this.state.subframe = msg.subframe_index;
    this.state.mode = msg.mode;
    for (const t of TARGETS) {
      // telemetry echoes are authoritative for fields nobody is editing
      this.state.targets[t].committed = { ...msg.params[mapTarget(t)] };
    }
    this.state.chart.push({
      subframe: msg.subframe_index,
      dlSnrDb: msg.dl_snr_db,
      slSnrDb: msg.sl_snr_db,
      throughputBps: msg.throughput_bps,
      mode: msg.mode,
      gap: this.state.gapPending || undefined,
    });
    this.state.gapPending = false;
  }

  private hydrate(snap: {
    config: Record<string, unknown>;
    mode: Mode;
    running: boolean;
    subframe: number;
  }): void {
    const cfg = snap.config;
    const byTarget: Record<Target, string> = {
      enodeb: "enodeb",
      relay_dl: "relay_downlink",
      relay_sl: "relay_sidelink",
      remote: "remote",
    };
    for (const t of TARGETS) {
      const params = cfg[byTarget[t]];
      if (params && typeof params === "object") {
        this.state.targets[t].committed = { ...(params as RadioParams) };
      }
    }
    this.state.mode = snap.mode;
    this.state.running = snap.running;
    this.state.subframe = snap.subframe;
  }

  /** Committed value of one field, or null before hydration. */
  fieldValue(target: Target, name: keyof RadioParams): number | null {
    return this.state.targets[target].committed?.[name] ?? null;
  }
}

function mapTarget(t: Target): Target {
  return t; // telemetry already uses the wire target names
}
