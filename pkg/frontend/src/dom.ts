// DOM rendering of the view model: mission map, ladder panel, gate banner,
// prompts, command palette, notices. Rendering is a pure function of the
// model; event wiring is injected by main.ts.

import type { ViewModel } from "./view.js";
import { gateBanner } from "./view.js";
import type { Cell, ScenarioInfo } from "./types.js";

export interface Handlers {
  onSelectAgent(agent: string): void;
  onPaletteAction(ident: string): void;
  onAnswerPrompt(rater: string, ratee: string, expectation: string): void;
  onOverrideGate(): void;
  onPauseResume(kind: "pause" | "resume"): void;
}

function el(tag: string, cls: string, text = ""): HTMLElement {
  const node = document.createElement(tag);
  node.className = cls;
  if (text) node.textContent = text;
  return node;
}

function cellKey(cell: Cell): string {
  return `${cell[0]},${cell[1]}`;
}

export function render(
  root: HTMLElement,
  model: ViewModel,
  scenario: ScenarioInfo | null,
  handlers: Handlers,
): void {
  root.textContent = "";

  const status = el("div", `status status-${model.connection}`);
  status.textContent = `tick ${model.renderedTick < 0 ? "-" : model.renderedTick} | ${model.connection}` +
    (model.systemTrust !== null ? ` | system trust ${model.systemTrust.toFixed(2)}` : "");
  root.append(status);

  const banner = el("div", "gate-banner");
  banner.dataset["status"] = model.gate?.status ?? "unknown";
  banner.textContent = gateBanner(model);
  const override = el("button", "override-gate", "override gate");
  override.addEventListener("click", () => handlers.onOverrideGate());
  banner.append(override);
  root.append(banner);

  const controls = el("div", "controls");
  for (const kind of ["pause", "resume"] as const) {
    const button = el("button", `control-${kind}`, kind);
    button.addEventListener("click", () => handlers.onPauseResume(kind));
    controls.append(button);
  }
  root.append(controls);

  if (model.frame && scenario) {
    const map = el("div", "map");
    map.style.display = "grid";
    map.style.gridTemplateColumns = `repeat(${scenario.grid.width}, 18px)`;
    const hazards = new Set(scenario.grid.hazards.map(cellKey));
    const exits = new Set(scenario.grid.recharge_exits.map(cellKey));
    const tags = new Map(model.frame.world.tags.map((t) => [cellKey(t.cell), t]));
    const agents = new Map(
      model.frame.world.agents
        .filter((a) => a.position !== null)
        .map((a) => [cellKey(a.position as Cell), a]),
    );
    for (let y = scenario.grid.height - 1; y >= 0; y--) {
      for (let x = 0; x < scenario.grid.width; x++) {
        const key = `${x},${y}`;
        const cell = el("div", "cell");
        if (hazards.has(key)) cell.classList.add("hazard");
        if (exits.has(key)) cell.classList.add("exit");
        const tag = tags.get(key);
        if (tag) {
          cell.classList.add(tag.scanned_by.length ? "tag-scanned" : "tag-fresh");
          cell.title = `${tag.id} (${tag.info})`;
        }
        const agent = agents.get(key);
        if (agent) {
          cell.textContent = agent.kind === "robot-field" ? "R" : "H";
          cell.classList.add("agent");
          cell.addEventListener("click", () => handlers.onSelectAgent(agent.id));
        }
        map.append(cell);
      }
    }
    root.append(map);
  }

  const ladders = el("div", "ladders");
  for (const ladder of model.ladders) {
    const column = el("div", "ladder");
    column.append(el("div", "ladder-label", `${ladder.trustor}->${ladder.trustee}`));
    for (let rung = ladder.rungs - 1; rung >= 0; rung--) {
      const step = el("div", rung === ladder.rung ? "rung current" : "rung");
      column.append(step);
    }
    const arrow = ladder.arrow === "up" ? "↑" : ladder.arrow === "down" ? "↓" : "";
    column.append(el("div", `ladder-arrow arrow-${ladder.arrow}`, arrow));
    column.title =
      `C ${ladder.capability.toFixed(2)} P ${ladder.predictability.toFixed(2)} ` +
      `I ${ladder.integrity.toFixed(2)}`;
    ladders.append(column);
  }
  root.append(ladders);

  const palette = el("div", "palette");
  palette.append(
    el("div", "palette-label", model.selectedAgent ? `commands for ${model.selectedAgent}` : "select an agent"),
  );
  for (const ident of model.palette) {
    const button = el("button", "palette-action", ident);
    button.addEventListener("click", () => handlers.onPaletteAction(ident));
    palette.append(button);
  }
  root.append(palette);

  const prompts = el("div", "prompts");
  for (const prompt of model.pendingPrompts) {
    const box = el("div", "prompt");
    box.append(
      el("div", "prompt-label",
         `rate teammates as ${prompt.rater} (window ${prompt.window_start}-${prompt.expires_at})`),
    );
    const ratees = (model.frame?.world.agents ?? [])
      .map((a) => a.id)
      .filter((id) => id !== prompt.rater);
    for (const ratee of ratees) {
      for (const expectation of ["selfish-goal", "team-goal", "unsure"]) {
        const button = el("button", "prompt-answer", `${ratee}: ${expectation}`);
        button.addEventListener("click", () =>
          handlers.onAnswerPrompt(prompt.rater, ratee, expectation),
        );
        box.append(button);
      }
    }
    prompts.append(box);
  }
  root.append(prompts);

  const notices = el("ul", "notices");
  for (const notice of model.notices.slice(-8)) {
    notices.append(el("li", `notice notice-${notice.kind}`, notice.text));
  }
  root.append(notices);
}
