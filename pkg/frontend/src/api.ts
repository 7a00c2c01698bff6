// Thin client for the gateway endpoints. Works in the browser and in node
// (both expose fetch with web streams), so the same code path is what the
// integration tests exercise.

import type {
  Ack,
  CommandMessage,
  Frame,
  RatingMessage,
  ScenarioInfo,
  TrustSection,
} from "./types.js";

export class GatewayClient {
  constructor(readonly baseUrl: string) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  async state(): Promise<Frame> {
    const res = await fetch(this.url("/api/state"));
    if (!res.ok) throw new Error(`GET /api/state -> ${res.status}`);
    return (await res.json()) as Frame;
  }

  async trust(): Promise<TrustSection> {
    const res = await fetch(this.url("/api/trust"));
    if (!res.ok) throw new Error(`GET /api/trust -> ${res.status}`);
    return (await res.json()) as TrustSection;
  }

  async scenario(): Promise<ScenarioInfo> {
    const res = await fetch(this.url("/api/scenario"));
    if (!res.ok) throw new Error(`GET /api/scenario -> ${res.status}`);
    return (await res.json()) as ScenarioInfo;
  }

  private async post(path: string, body: unknown): Promise<Ack> {
    const res = await fetch(this.url(path), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    const doc = (await res.json()) as Record<string, unknown>;
    if (doc["status"] === "accepted") {
      return { status: "accepted", seq: doc["seq"] as number };
    }
    if (doc["status"] === "rejected") {
      return { status: "rejected", reason: doc["reason"] as string };
    }
    // schema-level rejection (unknown fields etc.): surface the detail verbatim
    return { status: "rejected", reason: `http-${res.status}: ${JSON.stringify(doc)}` };
  }

  sendCommand(msg: CommandMessage): Promise<Ack> {
    return this.post("/api/command", msg);
  }

  submitRating(msg: RatingMessage): Promise<Ack> {
    return this.post("/api/rating", msg);
  }

  /** Server-sent frames with tick >= since; ends when the mission ends. */
  async *stream(since: number, signal?: AbortSignal): AsyncGenerator<Frame> {
    const res = await fetch(this.url(`/api/stream?since=${since}`), { signal });
    if (!res.ok || res.body === null) {
      throw new Error(`GET /api/stream -> ${res.status}`);
    }
    const reader = res.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    try {
      for (;;) {
        const { done, value } = await reader.read();
        if (done) return;
        buffer += decoder.decode(value, { stream: true });
        for (;;) {
          const cut = buffer.indexOf("\n\n");
          if (cut < 0) break;
          const block = buffer.slice(0, cut);
          buffer = buffer.slice(cut + 2);
          if (block.startsWith("event: end")) return;
          for (const line of block.split("\n")) {
            if (line.startsWith("data: ")) {
              yield JSON.parse(line.slice(6)) as Frame;
            }
          }
        }
      }
    } finally {
      reader.cancel().catch(() => undefined);
    }
  }
}
