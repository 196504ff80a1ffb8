// Minimal server-sent-event line parser. The browser normally uses the
// native EventSource; this buffer backs tests and any fetch-streaming
// fallback, and documents exactly what the wire format is.

export class SSEBuffer {
  private pending = "";

  /** Feed a raw chunk; returns the data payloads of any completed events.
   * Comment lines (keep-alives) are skipped. */
  push(chunk: string): string[] {
    this.pending += chunk;
    const events: string[] = [];
    let boundary = this.pending.indexOf("\n\n");
    while (boundary !== -1) {
      const block = this.pending.slice(0, boundary);
      this.pending = this.pending.slice(boundary + 2);
      const data = block
        .split("\n")
        .filter((line) => line.startsWith("data: "))
        .map((line) => line.slice("data: ".length))
        .join("\n");
      if (data) {
        events.push(data);
      }
      boundary = this.pending.indexOf("\n\n");
    }
    return events;
  }
}

export function parseEvent(data: string): Record<string, unknown> | null {
  try {
    const doc = JSON.parse(data);
    return typeof doc === "object" && doc !== null ? doc : null;
  } catch {
    return null;
  }
}
