/** Minimal DOM rendering: three controller panels (eNodeB, relay with its
 * downlink-RX and sidelink-TX sections, remote with mode buttons) and a
 * rolling chart strip driven by the telemetry series. */

import { PanelClient } from "./client.js";
import { ParamName, RADIO_PARAMS, setMode, setParam, Target } from "./protocol.js";

const PANEL_LAYOUT: { target: Target; title: string }[] = [
  { target: "enodeb", title: "eNodeB controller" },
  { target: "relay_dl", title: "Relay: downlink RX" },
  { target: "relay_sl", title: "Relay: sidelink TX" },
  { target: "remote", title: "Remote UE" },
];

export function mountPanels(root: HTMLElement, client: PanelClient): () => void {
  root.innerHTML = "";
  const panels = new Map<Target, HTMLElement>();
  for (const { target, title } of PANEL_LAYOUT) {
    const panel = document.createElement("section");
    panel.className = `panel panel-${target}`;
    const heading = document.createElement("h2");
    heading.textContent = title;
    panel.appendChild(heading);
    for (const name of RADIO_PARAMS) {
      panel.appendChild(makeField(client, target, name));
    }
    const error = document.createElement("p");
    error.className = "inline-error";
    panel.appendChild(error);
    panels.set(target, panel);
    root.appendChild(panel);
  }
  const remotePanel = panels.get("remote")!;
  for (const mode of ["downlink", "sidelink"] as const) {
    const button = document.createElement("button");
    button.textContent = `Switch to ${mode}`;
    button.addEventListener("click", () => client.send(setMode(mode)));
    remotePanel.appendChild(button);
  }
  const status = document.createElement("p");
  status.className = "status";
  root.appendChild(status);
  const chart = document.createElement("pre");
  chart.className = "chart";
  root.appendChild(chart);

  const timer = setInterval(() => {
    const state = client.store.state;
    status.textContent =
      state.connection === "connected"
        ? `connected, subframe ${state.subframe}, mode ${state.mode ?? "?"}`
        : `${state.connection} (retrying)`;
    for (const { target } of PANEL_LAYOUT) {
      const panel = panels.get(target)!;
      const info = state.targets[target];
      for (const name of RADIO_PARAMS) {
        const input = panel.querySelector<HTMLInputElement>(`input[name=${name}]`)!;
        if (document.activeElement !== input) {
          input.value = info.committed ? String(info.committed[name]) : "";
        }
      }
      panel.querySelector(".inline-error")!.textContent = info.inlineError ?? "";
    }
    chart.textContent = sparkline(client);
  }, 200);
  return () => clearInterval(timer);
}

function makeField(client: PanelClient, target: Target, name: ParamName): HTMLElement {
  const label = document.createElement("label");
  label.textContent = name;
  const input = document.createElement("input");
  input.name = name;
  input.addEventListener("change", () => {
    const value = Number(input.value);
    if (Number.isFinite(value)) client.send(setParam(target, name, value));
  });
  label.appendChild(input);
  return label;
}

function sparkline(client: PanelClient): string {
  const points = client.store.state.chart.all().slice(-60);
  if (points.length === 0) return "(no telemetry yet)";
  const max = Math.max(...points.map((p) => p.throughputBps), 1);
  const bars = " .:-=+*#%@";
  return points
    .map((p) => {
      if (p.gap) return "|";
      const level = Math.min(bars.length - 1, Math.round((p.throughputBps / max) * (bars.length - 1)));
      return bars[level];
    })
    .join("");
}
