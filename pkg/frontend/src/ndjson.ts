/** Newline-delimited JSON framing: byte chunks in, parsed objects out. */

export class NdjsonParser {
  private buffer = "";

  /** Feed a chunk; returns every complete object it finished. */
  feed(chunk: string): unknown[] {
    this.buffer += chunk;
    const out: unknown[] = [];
    let idx: number;
    while ((idx = this.buffer.indexOf("\n")) >= 0) {
      const line = this.buffer.slice(0, idx).trim();
      this.buffer = this.buffer.slice(idx + 1);
      if (line.length === 0) continue;
      out.push(JSON.parse(line));
    }
    return out;
  }

  /** Bytes held back waiting for a newline. */
  pending(): number {
    return this.buffer.length;
  }
}

export function serialize(message: unknown): string {
  return JSON.stringify(message) + "\n";
}
