// Browser bootstrap: ?server=http://host:port selects the gateway.

import { GatewayClient } from "./api.js";
import { render, type Handlers } from "./dom.js";
import { ConsoleSession } from "./session.js";
import { parseIdent } from "./commands.js";
import type { ScenarioInfo } from "./types.js";

const params = new URLSearchParams(window.location.search);
const server = params.get("server") ?? "http://127.0.0.1:8787";
const issuer = params.get("issuer") ?? "coordinator";

const root = document.getElementById("console");
if (root === null) throw new Error("missing #console element");

const client = new GatewayClient(server);
let scenario: ScenarioInfo | null = null;

const handlers: Handlers = {
  onSelectAgent: (agent) => session.select(agent),
  onPaletteAction: (ident) => {
    const selected = session.model.selectedAgent;
    if (selected === null) return;
    const { kind, params: actionParams } = parseIdent(ident);
    void session.issueCommand({ kind, target_agent: selected, params: actionParams });
  },
  onAnswerPrompt: (rater, ratee, expectation) => {
    void session.answerPrompt({
      rater,
      ratee,
      expectation: expectation as "selfish-goal" | "team-goal" | "unsure",
    });
  },
  onOverrideGate: () => {
    void session.issueCommand({ kind: "override-gate", target_agent: issuer, params: {} });
  },
  onPauseResume: (kind) => {
    void session.issueCommand({ kind, target_agent: issuer, params: {} });
  },
};

const session = new ConsoleSession(client, issuer, (model) => {
  render(root, model, scenario, handlers);
});

client
  .scenario()
  .then((doc) => {
    scenario = doc;
    render(root, session.model, scenario, handlers);
  })
  .catch(() => undefined);

void session.connect();
