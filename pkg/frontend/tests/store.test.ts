import { describe, expect, it } from "vitest";

import { setMode, setParam, TelemetryMsg } from "../src/protocol.js";
import { PanelStore } from "../src/store.js";

function telemetry(subframe: number, overrides: Partial<TelemetryMsg> = {}): TelemetryMsg {
  const params = {
    frequency_hz: 2.6e9,
    tx_gain_db: 55,
    rx_gain_db: 40,
    n_prb: 25,
    amplitude: 1,
    mcs_index: 5,
    cell_id: 1,
    rnti: 0x4601,
  };
  return {
    type: "telemetry",
    subframe_index: subframe,
    mode: "downlink",
    dl_snr_db: 12.5,
    sl_snr_db: 20.1,
    throughput_bps: 1e6,
    bler: 0,
    queue_depth: 1,
    params: {
      enodeb: { ...params },
      relay_dl: { ...params },
      relay_sl: { ...params },
      remote: { ...params },
    },
    ...overrides,
  };
}

describe("PanelStore", () => {
  it("commits a field only on its ack", () => {
    const store = new PanelStore();
    store.apply(telemetry(100));
    const cmd = setParam("enodeb", "tx_gain_db", 48);
    store.submit(cmd);
    // still showing the last ack'd value
    expect(store.fieldValue("enodeb", "tx_gain_db")).toBe(55);
    store.apply({
      type: "ack",
      request_id: cmd.request_id,
      subframe: 101,
      applied: { target: "enodeb", name: "tx_gain_db", value: 48 },
    });
    expect(store.fieldValue("enodeb", "tx_gain_db")).toBe(48);
    expect(store.state.pending.size).toBe(0);
  });

  it("reverts and shows an inline error on a cap rejection", () => {
    const store = new PanelStore();
    store.apply(telemetry(100));
    const cmd = setParam("relay_sl", "mcs_index", 22);
    store.submit(cmd);
    store.apply({
      type: "err",
      request_id: cmd.request_id,
      error: "cap",
      message: "mcs 22 uses order 6, above the sidelink cap",
    });
    expect(store.fieldValue("relay_sl", "mcs_index")).toBe(5); // unchanged
    expect(store.state.targets.relay_sl.inlineError).toContain("cap");
  });

  it("clears the inline error on the next submission", () => {
    const store = new PanelStore();
    store.apply(telemetry(100));
    const bad = setParam("relay_sl", "mcs_index", 22);
    store.submit(bad);
    store.apply({ type: "err", request_id: bad.request_id, error: "cap" });
    store.submit(setParam("relay_sl", "mcs_index", 10));
    expect(store.state.targets.relay_sl.inlineError).toBeNull();
  });

  it("hydrates from a snapshot ack", () => {
    const store = new PanelStore();
    store.apply({
      type: "ack",
      request_id: "s1",
      subframe: 7,
      applied: {
        snapshot: {
          config: {
            enodeb: { tx_gain_db: 55, mcs_index: 3 },
            relay_downlink: { rx_gain_db: 40 },
            relay_sidelink: { tx_gain_db: 40 },
            remote: { rx_gain_db: 40 },
          },
          mode: "sidelink",
          running: true,
          subframe: 7,
        },
      },
    });
    expect(store.fieldValue("enodeb", "mcs_index")).toBe(3);
    expect(store.fieldValue("relay_sl", "tx_gain_db")).toBe(40);
    expect(store.state.mode).toBe("sidelink");
  });

  it("records mode markers on a mode ack", () => {
    const store = new PanelStore();
    const cmd = setMode("sidelink");
    store.submit(cmd);
    store.apply({
      type: "ack",
      request_id: cmd.request_id,
      subframe: 250,
      applied: { mode: "sidelink" },
    });
    expect(store.state.mode).toBe("sidelink");
    expect(store.state.modeMarkers).toEqual([{ subframe: 250, mode: "sidelink" }]);
  });

  it("telemetry drives the chart and the parameter echo", () => {
    const store = new PanelStore();
    store.apply(telemetry(100));
    store.apply(telemetry(200, { throughput_bps: 0 }));
    expect(store.state.chart.length).toBe(2);
    expect(store.state.chart.last()?.throughputBps).toBe(0);
    expect(store.state.subframe).toBe(200);
  });

  it("marks a gap on the first telemetry after a reconnect", () => {
    const store = new PanelStore();
    store.setConnection("connected");
    store.apply(telemetry(100));
    store.setConnection("disconnected");
    store.setConnection("connected");
    store.apply(telemetry(300));
    const points = store.state.chart.all();
    expect(points[0].gap).toBeUndefined();
    expect(points[1].gap).toBe(true);
  });

  it("replaying the same message stream yields identical state", () => {
    const messages = [
      telemetry(100),
      { type: "ack", request_id: "x", subframe: 150, applied: { mode: "sidelink" } } as const,
      telemetry(200, { mode: "sidelink" }),
    ];
    const a = new PanelStore();
    const b = new PanelStore();
    for (const m of messages) {
      a.apply(m);
      b.apply(m);
    }
    expect(JSON.stringify(a.state.targets)).toBe(JSON.stringify(b.state.targets));
    expect(a.state.chart.all()).toEqual(b.state.chart.all());
    expect(a.state.modeMarkers).toEqual(b.state.modeMarkers);
  });
});
