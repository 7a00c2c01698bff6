// Console session: subscribes to the telemetry stream, folds frames into the
// view model, and sends commands/ratings. Strictly server-authoritative:
// acks only produce notices, never state changes; the world view moves only
// when a frame arrives.

import { GatewayClient } from "./api.js";
import type { Ack, CommandMessage, Frame, RatingMessage } from "./types.js";
import {
  applyFrame,
  clearPrompt,
  emptyModel,
  pushNotice,
  selectAgent,
  setConnection,
  type ViewModel,
  type ViewOptions,
} from "./view.js";

const BACKOFF_START_MS = 250;
const BACKOFF_CAP_MS = 5_000;

export class ConsoleSession {
  model: ViewModel;
  readonly frameBuffer: Frame[] = [];
  private lastSeen = -1;
  private stopped = false;
  private abort: AbortController | null = null;

  constructor(
    readonly client: GatewayClient,
    readonly issuer: string = "coordinator",
    private readonly onChange: (model: ViewModel) => void = () => undefined,
    options: ViewOptions = {},
  ) {
    this.model = emptyModel(options);
  }

  private update(next: ViewModel): void {
    this.model = next;
    this.onChange(this.model);
  }

  /** Subscribe from tick 0 (or from the last seen frame on reconnect) and
   * keep folding frames until the mission ends or stop() is called.
   * Connection failures retry with capped exponential backoff and a visible
   * status. */
  async connect(): Promise<void> {
    let backoff = BACKOFF_START_MS;
    while (!this.stopped) {
      this.abort = new AbortController();
      try {
        for await (const frame of this.client.stream(this.lastSeen + 1, this.abort.signal)) {
          if (frame.tick > this.lastSeen) {
            this.lastSeen = frame.tick;
            this.frameBuffer.push(frame);
            this.update(applyFrame(this.model, frame));
          }
          backoff = BACKOFF_START_MS;
        }
        this.update(setConnection(this.model, "ended"));
        return;
      } catch (err) {
        if (this.stopped) return;
        this.update(
          pushNotice(setConnection(this.model, "retrying"), {
            kind: "info",
            text: `stream lost (${String(err)}); retrying in ${backoff}ms`,
          }),
        );
        await new Promise((resolve) => setTimeout(resolve, backoff));
        backoff = Math.min(backoff * 2, BACKOFF_CAP_MS);
      }
    }
  }

  /** Wait until the model has rendered at least `tick` (or the predicate
   * holds). Drives tests and scripted flows. */
  async waitFor(predicate: (model: ViewModel) => boolean, timeoutMs = 15_000): Promise<ViewModel> {
    const t0 = Date.now();
    while (Date.now() - t0 < timeoutMs) {
      if (predicate(this.model)) return this.model;
      await new Promise((resolve) => setTimeout(resolve, 20));
    }
    throw new Error("timed out waiting for console state");
  }

  select(agent: string | null): void {
    this.update(selectAgent(this.model, agent));
  }

  async issueCommand(
    command: Omit<CommandMessage, "v" | "issuer"> & { issuer?: string },
  ): Promise<Ack> {
    const msg: CommandMessage = {
      v: 1,
      issuer: command.issuer ?? this.issuer,
      kind: command.kind,
      target_agent: command.target_agent,
      params: command.params ?? {},
      client_ts: Date.now() / 1000,
    };
    const ack = await this.client.sendCommand(msg);
    const text =
      ack.status === "accepted"
        ? `${msg.kind} ${msg.target_agent}: accepted (seq ${ack.seq})`
        : `${msg.kind} ${msg.target_agent}: rejected (${ack.reason})`;
    this.update(pushNotice(this.model, { kind: ack.status, text }));
    return ack;
  }

  async answerPrompt(rating: Omit<RatingMessage, "v">): Promise<Ack> {
    const ack = await this.client.submitRating({ v: 1, ...rating });
    if (ack.status === "accepted") {
      this.update(
        pushNotice(clearPrompt(this.model, rating.rater), {
          kind: "accepted",
          text: `rating ${rating.rater}->${rating.ratee}: accepted`,
        }),
      );
    } else {
      this.update(
        pushNotice(this.model, {
          kind: "rejected",
          text: `rating ${rating.rater}->${rating.ratee}: rejected (${ack.reason})`,
        }),
      );
    }
    return ack;
  }

  stop(): void {
    this.stopped = true;
    this.abort?.abort();
  }
}
