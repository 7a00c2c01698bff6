// Pure view model. Every rendered value traces to a telemetry frame field;
// no trust math happens client-side. Frame application is a pure fold:
// replaying a frame buffer reproduces the identical model, and re-applying
// the latest frame is a no-op.

import type { Frame, GateSection, Prompt } from "./types.js";

export type Arrow = "up" | "down" | "none";

export interface LadderView {
  trustor: string;
  trustee: string;
  rung: number;
  rungs: number;
  arrow: Arrow;
  capability: number;
  predictability: number;
  integrity: number;
}

export type ConnectionStatus = "connecting" | "live" | "retrying" | "ended";

export interface Notice {
  kind: "accepted" | "rejected" | "info";
  text: string;
}

export interface ViewOptions {
  /** Hide ladders toward these trustees (experiment variants may hide
   * trust-in-coordinator edges from field views). */
  hideEdgesToward?: string[];
}

export interface ViewModel {
  renderedTick: number; // never exceeds the last received frame tick
  frame: Frame | null;
  ladders: LadderView[];
  gate: GateSection | null;
  systemTrust: number | null;
  pendingPrompts: Prompt[];
  selectedAgent: string | null;
  palette: string[]; // action idents the latest frame lists for the selection
  connection: ConnectionStatus;
  notices: Notice[];
  options: ViewOptions;
}

const MAX_NOTICES = 20;
const LADDER_RUNGS = 5;

export function emptyModel(options: ViewOptions = {}): ViewModel {
  return {
    renderedTick: -1,
    frame: null,
    ladders: [],
    gate: null,
    systemTrust: null,
    pendingPrompts: [],
    selectedAgent: null,
    palette: [],
    connection: "connecting",
    notices: [],
    options,
  };
}

function laddersFrom(frame: Frame, previous: ViewModel): LadderView[] {
  const prevRungs = new Map<string, number>();
  for (const ladder of previous.ladders) {
    prevRungs.set(`${ladder.trustor}->${ladder.trustee}`, ladder.rung);
  }
  const hidden = new Set(previous.options.hideEdgesToward ?? []);
  const ladders: LadderView[] = [];
  for (const edge of frame.trust.edges) {
    if (hidden.has(edge.trustee)) continue;
    const key = `${edge.trustor}->${edge.trustee}`;
    const before = prevRungs.get(key);
    let arrow: Arrow = "none";
    if (before !== undefined && edge.rung > before) arrow = "up";
    if (before !== undefined && edge.rung < before) arrow = "down";
    ladders.push({
      trustor: edge.trustor,
      trustee: edge.trustee,
      rung: edge.rung,
      rungs: LADDER_RUNGS,
      arrow,
      capability: edge.capability,
      predictability: edge.predictability,
      integrity: edge.integrity,
    });
  }
  return ladders;
}

function paletteFor(frame: Frame | null, agent: string | null): string[] {
  if (frame === null || agent === null) return [];
  return [...(frame.available[agent] ?? [])];
}

/** Fold one telemetry frame into the model. Stale or repeated frames are
 * ignored, which makes application idempotent. */
export function applyFrame(model: ViewModel, frame: Frame): ViewModel {
  if (frame.tick <= model.renderedTick) return model;
  return {
    ...model,
    renderedTick: frame.tick,
    frame,
    ladders: laddersFrom(frame, model),
    gate: frame.gate,
    systemTrust: frame.trust.system_trust,
    pendingPrompts: [...frame.prompts],
    palette: paletteFor(frame, model.selectedAgent),
    connection: "live",
  };
}

export function selectAgent(model: ViewModel, agent: string | null): ViewModel {
  return { ...model, selectedAgent: agent, palette: paletteFor(model.frame, agent) };
}

export function setConnection(model: ViewModel, status: ConnectionStatus): ViewModel {
  return { ...model, connection: status };
}

export function pushNotice(model: ViewModel, notice: Notice): ViewModel {
  const notices = [...model.notices, notice].slice(-MAX_NOTICES);
  return { ...model, notices };
}

/** Presentation-only: an accepted rating clears its prompt immediately;
 * frames remain the source of truth and will confirm. */
export function clearPrompt(model: ViewModel, rater: string): ViewModel {
  return {
    ...model,
    pendingPrompts: model.pendingPrompts.filter((p) => p.rater !== rater),
  };
}

export function gateBanner(model: ViewModel): string {
  if (model.gate === null) return "gate: unknown";
  if (model.gate.status === "blocked") {
    const parts = model.gate.deficiencies.map(
      (d) =>
        `${d.edge[0]}->${d.edge[1]} ${d.element} ${d.value.toFixed(2)} < ${d.threshold.toFixed(2)}`,
    );
    return `gate: BLOCKED (${parts.length}) ${parts.join("; ")}`;
  }
  if (model.gate.status === "proceed-overridden") return "gate: PROCEED (overridden)";
  return "gate: PROCEED";
}

/** Rebuild a model from scratch by folding a frame buffer in order. */
export function replayBuffer(frames: Frame[], options: ViewOptions = {}): ViewModel {
  let model = emptyModel(options);
  for (const frame of frames) {
    model = applyFrame(model, frame);
  }
  return model;
}
