/** Connection plumbing: a transport-agnostic client that frames NDJSON,
 * feeds the panel store, requests a snapshot on connect, and schedules
 * reconnects with a visible gap marker. */

import { NdjsonParser, serialize } from "./ndjson.js";
import { CommandMsg, isServerMsg, snapshot } from "./protocol.js";
import { PanelStore } from "./store.js";

/** Anything that can carry newline-delimited text both ways: a TCP socket in
 * Node, a WebSocket bridge in the browser. */
export interface Transport {
  send(line: string): void;
  onData(handler: (chunk: string) => void): void;
  onClose(handler: () => void): void;
  close(): void;
}

export type TransportFactory = () => Promise<Transport>;

export interface ClientOptions {
  reconnectDelayMs?: number;
  maxReconnects?: number;
}

export class PanelClient {
  readonly store: PanelStore;
  private transport: Transport | null = null;
  private parser = new NdjsonParser();
  private closed = false;
  private reconnects = 0;

  constructor(
    private readonly connectTransport: TransportFactory,
    store?: PanelStore,
    private readonly options: ClientOptions = {},
  ) {
    this.store = store ?? new PanelStore();
  }

  async connect(): Promise<void> {
    this.store.setConnection("connecting");
    try {
      this.transport = await this.connectTransport();
    } catch (err) {
      this.store.setConnection("disconnected");
      this.scheduleReconnect();
      throw err;
    }
    this.parser = new NdjsonParser();
    this.transport.onData((chunk) => {
      for (const msg of this.parser.feed(chunk)) {
        if (isServerMsg(msg)) this.store.apply(msg);
      }
    });
    this.transport.onClose(() => {
      if (this.closed) return;
      this.store.setConnection("disconnected");
      this.scheduleReconnect();
    });
    this.store.setConnection("connected");
    this.send(snapshot()); // hydrate the panels from the server echo
  }

  send(command: CommandMsg): void {
    if (!this.transport) throw new Error("not connected");
    this.store.submit(command);
    this.transport.send(serialize(command));
  }

  close(): void {
    this.closed = true;
    this.transport?.close();
    this.store.setConnection("disconnected");
  }

  private scheduleReconnect(): void {
    const max = this.options.maxReconnects ?? Infinity;
    if (this.closed || this.reconnects >= max) return;
    this.reconnects += 1;
    const delay = this.options.reconnectDelayMs ?? 1000;
    setTimeout(() => {
      if (!this.closed) void this.connect().catch(() => undefined);
    }, delay);
  }
}
