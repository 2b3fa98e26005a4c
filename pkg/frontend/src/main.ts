/** Browser entry point. Raw TCP is not reachable from a page, so the client
 * speaks the same NDJSON protocol over a WebSocket that bridges to the
 * control service (ws://host/?port=5705 style bridges work unchanged). */

import { PanelClient, Transport } from "./client.js";
import { mountPanels } from "./render.js";

function webSocketTransport(url: string): Promise<Transport> {
  return new Promise((resolve, reject) => {
    const ws = new WebSocket(url);
    ws.onerror = () => reject(new Error(`cannot reach ${url}`));
    ws.onopen = () =>
      resolve({
        send: (line) => ws.send(line),
        onData: (handler) => {
          ws.onmessage = (ev) => handler(String(ev.data));
        },
        onClose: (handler) => {
          ws.onclose = () => handler();
        },
        close: () => ws.close(),
      });
  });
}

const params = new URLSearchParams(window.location.search);
const url = params.get("server") ?? "ws://127.0.0.1:5706/";
const client = new PanelClient(() => webSocketTransport(url));
void client.connect().catch(() => undefined);
mountPanels(document.getElementById("app")!, client);
