// Wire types for the gateway API (see docs/api.md in the repo root).

export type Cell = [number, number];

export interface AgentSnapshot {
  id: string;
  kind: "robot-field" | "human-field" | "human-coordinator";
  position: Cell | null;
  energy: number | null;
  score: number;
  recharging_until: number | null;
}

export interface TagSnapshot {
  id: string;
  cell: Cell;
  height_class: "robot-level" | "human-level";
  info: string;
  scanned_by: string[];
}

export interface WorldSnapshot {
  tick: number;
  agents: AgentSnapshot[];
  tags: TagSnapshot[];
}

export interface EdgeSnapshot {
  trustor: string;
  trustee: string;
  capability: number;
  predictability: number;
  integrity: number;
  rung: number;
}

export interface TrustSection {
  edges: EdgeSnapshot[];
  system_trust: number;
}

export interface Deficiency {
  edge: [string, string];
  element: "capability" | "predictability" | "integrity";
  value: number;
  threshold: number;
}

export type GateStatus = "blocked" | "proceed" | "proceed-overridden";

export interface GateSection {
  status: GateStatus;
  deficiencies: Deficiency[];
}

export interface RatingEntry {
  rater: string;
  ratee: string;
  tick: number;
  expectation: "selfish-goal" | "team-goal" | "unsure";
  source: "policy" | "human" | "default";
  window_start: number;
}

export interface Prompt {
  rater: string;
  window_start: number;
  expires_at: number;
}

export interface Frame {
  tick: number;
  world: WorldSnapshot;
  trust: TrustSection;
  gate: GateSection;
  goal_progress: Record<string, number>;
  ratings: RatingEntry[];
  prompts: Prompt[];
  available: Record<string, string[]>;
}

export type CommandKind =
  | "move"
  | "scan"
  | "assist"
  | "recharge"
  | "idle"
  | "pause"
  | "resume"
  | "override-gate";

export interface CommandMessage {
  v: 1;
  kind: CommandKind;
  issuer: string;
  target_agent: string;
  params: Record<string, unknown>;
  client_ts?: number;
}

export interface RatingMessage {
  v: 1;
  rater: string;
  ratee: string;
  expectation: "selfish-goal" | "team-goal" | "unsure";
  client_ts?: number;
}

export type Ack =
  | { status: "accepted"; seq: number }
  | { status: "rejected"; reason: string };

export interface ScenarioInfo {
  digest: string;
  seed: number;
  ticks: number;
  roster: { id: string; kind: string; controlled_by: "policy" | "external" }[];
  rating_interval: number;
  thresholds: Record<string, number>;
  required_edges: [string, string][];
  grid: {
    width: number;
    height: number;
    hazards: Cell[];
    recharge_exits: Cell[];
  };
}
