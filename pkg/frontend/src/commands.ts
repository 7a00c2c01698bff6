// Translate an action ident from a frame's `available` list back into the
// command body the gateway expects.

import type { CommandKind } from "./types.js";

export function parseIdent(ident: string): {
  kind: CommandKind;
  params: Record<string, unknown>;
} {
  const colon = ident.indexOf(":");
  if (colon < 0) {
    return { kind: ident as CommandKind, params: {} };
  }
  const kind = ident.slice(0, colon) as CommandKind;
  const rest = ident.slice(colon + 1);
  if (kind === "move") {
    const [x, y] = rest.split(",");
    return { kind, params: { to: [Number(x), Number(y)] } };
  }
  if (kind === "scan") {
    return { kind, params: { tag: rest } };
  }
  if (kind === "assist") {
    return { kind, params: { agent: rest } };
  }
  return { kind, params: {} };
}
