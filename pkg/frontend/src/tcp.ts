/** Node TCP transport, used by the tests and any terminal client. */

import * as net from "node:net";

import { Transport } from "./client.js";

export function tcpTransport(host: string, port: number): Promise<Transport> {
  return new Promise((resolve, reject) => {
    const socket = net.createConnection({ host, port });
    socket.setEncoding("utf8");
    socket.once("error", reject);
    socket.once("connect", () => {
      socket.removeListener("error", reject);
      resolve({
        send: (line) => socket.write(line),
        onData: (handler) => socket.on("data", handler),
        onClose: (handler) => {
          socket.on("close", handler);
          socket.on("error", () => undefined);
        },
        close: () => socket.destroy(),
      });
    });
  });
}
