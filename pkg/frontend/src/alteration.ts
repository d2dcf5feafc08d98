/**
 * Alteration drafts: the client-side mirror of the alt.json rule contract.
 *
 * Serialization is byte-identical to the service's canonical writer (sorted
 * keys, two-space indent, trailing newline, decimal-formatted factors), so a
 * draft round-trips losslessly through POST /alterations.
 */

export type RuleKind = "scale_shot_prob" | "scale_transition_prob";
export type Pressure = "open" | "contested";

export interface DestPredicate {
  players: string[] | null;
  regions: string[] | null;
  pressure: Pressure[] | null;
}

export interface AlterationRule {
  players: string[] | null;
  regions: string[] | null;
  pressure: Pressure[] | null;
  slices: number[] | null;
  kind: RuleKind;
  factor: number;
  dest?: DestPredicate;
}

export interface AlterationDraft {
  rules: AlterationRule[];
}

export interface StateSpaceInfo {
  players: { player_id: string; position: string }[];
  regions: string[];
  pressures: string[];
  slices: number[];
  n_states: number;
}

export interface ValidationMessage {
  rule: number;
  field: string;
  message: string;
}

const KINDS: RuleKind[] = ["scale_shot_prob", "scale_transition_prob"];

/** Slices whose interval contains any instant with more than `seconds` left. */
export function slicesForRemainingAbove(seconds: number): number[] {
  const out: number[] = [];
  for (let idx = 1; idx <= 8; idx++) {
    const hi = 24 - 3 * (idx - 1);
    if (hi > seconds) out.push(idx);
  }
  return out;
}

export function validateDraft(
  draft: AlterationDraft,
  space: StateSpaceInfo | null,
): ValidationMessage[] {
  const messages: ValidationMessage[] = [];
  if (draft.rules.length === 0) {
    messages.push({ rule: -1, field: "rules", message: "add at least one rule" });
  }
  draft.rules.forEach((rule, k) => {
    if (!KINDS.includes(rule.kind)) {
      messages.push({ rule: k, field: "kind", message: `unknown kind ${rule.kind}` });
    }
    if (!(rule.factor > 0)) {
      messages.push({ rule: k, field: "factor", message: "factor must be positive" });
    }
    for (const field of ["players", "regions", "pressure", "slices"] as const) {
      const v = rule[field];
      if (v !== null && v !== undefined && v.length === 0) {
        messages.push({
          rule: k,
          field,
          message: `empty ${field} selection matches nothing; use "all" instead`,
        });
      }
    }
    if (rule.slices) {
      for (const t of rule.slices) {
        if (!Number.isInteger(t) || t < 1 || t > 8) {
          messages.push({ rule: k, field: "slices", message: `slice ${t} outside 1..8` });
        }
      }
    }
    if (space) {
      const ids = new Set(space.players.map((p) => p.player_id));
      for (const pid of rule.players ?? []) {
        if (!ids.has(pid)) {
          messages.push({ rule: k, field: "players", message: `unknown player ${pid}` });
        }
      }
      for (const r of rule.regions ?? []) {
        if (!space.regions.includes(r)) {
          messages.push({ rule: k, field: "regions", message: `unknown region ${r}` });
        }
      }
      if (targetedStateCount(rule, space) === 0) {
        messages.push({ rule: k, field: "rule", message: "rule matches no states" });
      }
    }
  });
  return messages;
}

/** States matched by a rule's target predicate within the given space. */
export function targetedStateCount(rule: AlterationRule, space: StateSpaceInfo): number {
  const players = rule.players
    ? space.players.filter((p) => rule.players!.includes(p.player_id)).length
    : space.players.length;
  const regions = rule.regions
    ? space.regions.filter((r) => rule.regions!.includes(r)).length
    : space.regions.length;
  const pressures = rule.pressure ? rule.pressure.length : 2;
  return players * regions * pressures;
}

export function isIdentity(draft: AlterationDraft): boolean {
  return draft.rules.every((r) => r.factor === 1.0);
}

// ---------------------------------------------------------------------------
// Canonical serialization (byte-compatible with the service writer).
// ---------------------------------------------------------------------------

const FLOAT_KEYS = new Set(["factor"]);

function formatNumber(key: string, value: number): string {
  if (FLOAT_KEYS.has(key) && Number.isInteger(value)) {
    return `${value}.0`;
  }
  return JSON.stringify(value);
}

function serializeValue(key: string, value: unknown, indent: string): string {
  if (value === null || value === undefined) return "null";
  if (typeof value === "number") return formatNumber(key, value);
  if (typeof value === "string" || typeof value === "boolean") {
    return JSON.stringify(value);
  }
  const inner = indent + "  ";
  if (Array.isArray(value)) {
    if (value.length === 0) return "[]";
    const items = value.map((v) => inner + serializeValue(key, v, inner));
    return "[\n" + items.join(",\n") + "\n" + indent + "]";
  }
  const obj = value as Record<string, unknown>;
  const keys = Object.keys(obj).filter((k) => obj[k] !== undefined).sort();
  if (keys.length === 0) return "{}";
  const items = keys.map(
    (k) => `${inner}${JSON.stringify(k)}: ${serializeValue(k, obj[k], inner)}`,
  );
  return "{\n" + items.join(",\n") + "\n" + indent + "}";
}

/** Sorted-key, 2-space-indent JSON with a trailing newline. */
export function canonicalText(draft: AlterationDraft): string {
  const doc = {
    rules: draft.rules.map((r) => {
      const out: Record<string, unknown> = {
        players: r.players,
        regions: r.regions,
        pressure: r.pressure,
        slices: r.slices,
        kind: r.kind,
        factor: r.factor,
      };
      if (r.dest !== undefined && r.dest !== null) out.dest = r.dest;
      return out;
    }),
  };
  return serializeValue("", doc, "") + "\n";
}

export function parseDraft(text: string): AlterationDraft {
  const doc = JSON.parse(text);
  if (!doc || !Array.isArray(doc.rules)) {
    throw new Error("alteration document needs a rules list");
  }
  return { rules: doc.rules as AlterationRule[] };
}

// ---------------------------------------------------------------------------
// Presets mirroring the published what-if experiments.
// ---------------------------------------------------------------------------

export function presetReduceContestedMidrange(): AlterationDraft {
  return {
    rules: [
      {
        players: null,
        regions: ["mid_range"],
        pressure: ["contested"],
        slices: [1, 2, 3, 4],
        kind: "scale_shot_prob",
        factor: 0.8,
      },
    ],
  };
}

export function presetThreePointSurge(): AlterationDraft {
  return {
    rules: [
      {
        players: null,
        regions: ["mid_range"],
        pressure: ["contested"],
        slices: null,
        kind: "scale_shot_prob",
        factor: 0.3,
      },
      {
        players: null,
        regions: ["corner_3", "arc_3", "backcourt"],
        pressure: null,
        slices: null,
        kind: "scale_shot_prob",
        factor: 2.0,
      },
    ],
  };
}

export function presetPassCut(passer: string, receiver: string): AlterationDraft {
  return {
    rules: [
      {
        players: [passer],
        regions: null,
        pressure: null,
        slices: null,
        kind: "scale_transition_prob",
        factor: 0.1,
        dest: { players: [receiver], regions: null, pressure: null },
      },
    ],
  };
}

export function presetIdentity(): AlterationDraft {
  return {
    rules: [
      {
        players: null,
        regions: null,
        pressure: null,
        slices: null,
        kind: "scale_shot_prob",
        factor: 1.0,
      },
    ],
  };
}
