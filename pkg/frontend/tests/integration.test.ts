// End-to-end against a real served mission, via the documented endpoints
// only: initial ladders at the middle rung, a move command visible on the
// next frame, an answered rating prompt in the exported rating log, and a
// gate override flipping the banner.

import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";

import { GatewayClient } from "../src/api.js";
import { ConsoleSession } from "../src/session.js";
import { applyFrame, emptyModel, gateBanner } from "../src/view.js";
import { parseIdent } from "../src/commands.js";

const REPO_ROOT = resolve(__dirname, "..", "..");
const PORT = 8800 + (process.pid % 150);
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;
let outDir: string;
let client: GatewayClient;
let session: ConsoleSession;

async function serverReady(timeoutMs = 20_000): Promise<void> {
  const t0 = Date.now();
  for (;;) {
    try {
      const res = await fetch(`${BASE}/api/state`);
      if (res.ok) return;
    } catch {
      // not up yet
    }
    if (Date.now() - t0 > timeoutMs) throw new Error("gateway did not come up");
    await new Promise((resolve) => setTimeout(resolve, 100));
  }
}

async function pause(): Promise<void> {
  const ack = await session.issueCommand({ kind: "pause", target_agent: "coordinator", params: {} });
  expect(ack.status).toBe("accepted");
  await new Promise((resolve) => setTimeout(resolve, 250));
}

async function resume(): Promise<void> {
  const ack = await session.issueCommand({ kind: "resume", target_agent: "coordinator", params: {} });
  expect(ack.status).toBe("accepted");
}

beforeAll(async () => {
  outDir = mkdtempSync(join(tmpdir(), "console-it-"));
  server = spawn(
    "python3",
    [
      "-m", "trust_ladder.cli", "serve",
      "--scenario", join(REPO_ROOT, "scenarios", "basic.json"),
      "--seed", "7",
      "--ticks", "120",
      "--port", String(PORT),
      "--out", outDir,
      "--tick-seconds", "0.15",
    ],
    { cwd: REPO_ROOT, stdio: "ignore" },
  );
  await serverReady();
  client = new GatewayClient(BASE);
  session = new ConsoleSession(client, "coordinator");
  void session.connect();
  await session.waitFor((m) => m.renderedTick >= 0);
}, 30_000);

afterAll(() => {
  session?.stop();
  server?.kill("SIGTERM");
});

describe("operator console against a served mission", () => {
  it("renders the initial ladders at the middle rung", async () => {
    const first = session.frameBuffer[0];
    expect(first).toBeDefined();
    expect(first!.tick).toBe(0);
    const initial = applyFrame(emptyModel(), first!);
    expect(initial.ladders.length).toBe(12); // 4 agents, directed pairs
    for (const ladder of initial.ladders) {
      expect(ladder.rung).toBe(2); // 0.5 priors sit on the middle rung
    }
  });

  it("applies a move command on the next frame, never optimistically", async () => {
    await pause();
    const frame = session.model.frame!;
    const tickBefore = frame.tick;
    session.select("robot-1");
    const moveIdent = session.model.palette.find((ident) => ident.startsWith("move:"));
    expect(moveIdent).toBeDefined();
    const { kind, params } = parseIdent(moveIdent!);
    const target = (params as { to: [number, number] }).to;

    const ack = await session.issueCommand({ kind, target_agent: "robot-1", params });
    expect(ack.status).toBe("accepted");
    // server-authoritative: the model has not moved yet
    const before = session.model.frame!.world.agents.find((a) => a.id === "robot-1")!;
    expect(session.model.frame!.tick).toBe(tickBefore);

    await resume();
    await session.waitFor((m) => m.renderedTick >= tickBefore + 1);
    const applied = session.frameBuffer.find((f) => f.tick === tickBefore + 1)!;
    const robot = applied.world.agents.find((a) => a.id === "robot-1")!;
    expect(robot.position).toEqual(target);
    expect(before.position).not.toEqual(target);
  }, 20_000);

  it("records an answered rating prompt in the exported rating log", async () => {
    await session.waitFor((m) => m.pendingPrompts.length > 0, 30_000);
    await pause();
    const prompt = session.model.pendingPrompts[0]!;
    expect(prompt.rater).toBe("coordinator");

    const ack = await session.answerPrompt({
      rater: "coordinator",
      ratee: "robot-2",
      expectation: "selfish-goal",
    });
    expect(ack.status).toBe("accepted");
    expect(session.model.pendingPrompts).toHaveLength(0); // cleared on ack

    const duplicate = await session.answerPrompt({
      rater: "coordinator",
      ratee: "robot-2",
      expectation: "unsure",
    });
    expect(duplicate).toEqual({ status: "rejected", reason: "already-rated" });

    await resume();
    const tick = session.model.renderedTick;
    await session.waitFor((m) => m.renderedTick >= tick + 1, 20_000);

    const logged = readFileSync(join(outDir, "ratings.jsonl"), "utf-8")
      .trim().split("\n").filter(Boolean).map((line) => JSON.parse(line));
    const human = logged.filter((r) => r.source === "human");
    expect(human).toHaveLength(1);
    expect(human[0]).toMatchObject({
      rater: "coordinator",
      ratee: "robot-2",
      expectation: "selfish-goal",
      window_start: prompt.window_start,
    });
  }, 40_000);

  it("flips the gate banner on override", async () => {
    const ack = await session.issueCommand({
      kind: "override-gate",
      target_agent: "coordinator",
      params: {},
    });
    expect(ack.status).toBe("accepted");
    const tick = session.model.renderedTick;
    await session.waitFor((m) => m.renderedTick >= tick + 1, 20_000);
    expect(session.model.gate?.status).toBe("proceed-overridden");
    expect(gateBanner(session.model)).toBe("gate: PROCEED (overridden)");
  }, 20_000);

  it("rejects commands for unknown agents with the verbatim reason", async () => {
    const ack = await session.issueCommand({
      kind: "idle",
      target_agent: "robot-99",
      params: {},
    });
    expect(ack).toEqual({ status: "rejected", reason: "unknown-agent" });
    const last = session.model.notices.at(-1);
    expect(last?.text).toContain("unknown-agent");
  });
});
