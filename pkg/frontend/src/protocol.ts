/** Wire types of the control service: one JSON object per line, tagged by
 * "type". Commands flow client to server; acks, errors and telemetry flow
 * back. */

export type Target = "enodeb" | "relay_dl" | "relay_sl" | "remote";
export type Mode = "downlink" | "sidelink";

export const RADIO_PARAMS = [
  "frequency_hz",
  "tx_gain_db",
  "rx_gain_db",
  "n_prb",
  "amplitude",
  "mcs_index",
  "cell_id",
  "rnti",
] as const;
export type ParamName = (typeof RADIO_PARAMS)[number];

export type RadioParams = Record<ParamName, number>;

export interface CommandMsg {
  type: "cmd";
  request_id: string;
  action: "set_param" | "set_mode" | "start" | "stop" | "snapshot";
  target?: Target;
  name?: string;
  value?: number;
  mode?: Mode;
}

export interface AckMsg {
  type: "ack";
  request_id: string | null;
  subframe: number;
  applied: Record<string, unknown>;
}

export interface ErrMsg {
  type: "err";
  request_id?: string | null;
  error: string;
  message?: string;
  subframe?: number;
}

export interface TelemetryMsg {
  type: "telemetry";
  subframe_index: number;
  mode: Mode;
  dl_snr_db: number | null;
  sl_snr_db: number | null;
  throughput_bps: number;
  bler: number;
  queue_depth: number;
  params: Record<Target, RadioParams>;
}

export type ServerMsg = AckMsg | ErrMsg | TelemetryMsg;

let counter = 0;

export function nextRequestId(): string {
  counter += 1;
  return `ui-${counter}`;
}

export function setParam(target: Target, name: ParamName, value: number): CommandMsg {
  return { type: "cmd", request_id: nextRequestId(), action: "set_param", target, name, value };
}

export function setMode(mode: Mode): CommandMsg {
  return { type: "cmd", request_id: nextRequestId(), action: "set_mode", mode };
}

export function snapshot(): CommandMsg {
  return { type: "cmd", request_id: nextRequestId(), action: "snapshot" };
}

export function isServerMsg(value: unknown): value is ServerMsg {
  if (typeof value !== "object" || value === null) return false;
  const t = (value as { type?: unknown }).type;
  return t === "ack" || t === "err" || t === "telemetry";
}
