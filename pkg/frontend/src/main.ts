/**
 * Single-page console: build alteration rules, launch paired comparisons,
 * and render the resulting distributions and deltas. Talks only to the
 * versioned HTTP API; report history lives in localStorage by run id.
 */

import { ApiClient, CompareReport } from "./api.js";
import {
  AlterationRule,
  Pressure,
  StateSpaceInfo,
  presetIdentity,
  presetPassCut,
  presetReduceContestedMidrange,
  presetThreePointSurge,
} from "./alteration.js";
import {
  EditorState,
  addRule,
  canSubmit,
  initialState,
  preview,
  removeRule,
  updateRule,
  withDraft,
} from "./editor.js";
import { pollRun } from "./poll.js";
import { BIN_COUNT, METRIC_LABELS, binPair, deltaCards, playerShifts } from "./report.js";

const HISTORY_KEY = "tmdp.reportHistory";

interface Elements {
  rules: HTMLElement;
  messages: HTMLElement;
  previewBanner: HTMLElement;
  previewJson: HTMLElement;
  results: HTMLElement;
  history: HTMLElement;
  status: HTMLElement;
}

let state: EditorState;
let client: ApiClient;
let activeRunId: string | null = null;

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

function input(value: string, onChange: (v: string) => void, placeholder = ""): HTMLInputElement {
  const node = document.createElement("input");
  node.value = value;
  node.placeholder = placeholder;
  node.addEventListener("change", () => onChange(node.value));
  return node;
}

function parseList(text: string): string[] | null {
  const trimmed = text.trim();
  if (!trimmed || trimmed === "*") return null;
  return trimmed.split(",").map((s) => s.trim()).filter(Boolean);
}

function multiPicker(
  options: string[],
  selected: string[] | null,
  onChange: (values: string[] | null) => void,
): HTMLElement {
  const box = document.createElement("span");
  box.className = "picker";
  const all = document.createElement("label");
  const allInput = document.createElement("input");
  allInput.type = "checkbox";
  allInput.checked = selected === null;
  all.append(allInput, document.createTextNode("all"));
  box.append(all);
  const itemInputs: HTMLInputElement[] = [];
  for (const option of options) {
    const label = document.createElement("label");
    const node = document.createElement("input");
    node.type = "checkbox";
    node.checked = selected !== null && selected.includes(option);
    node.disabled = selected === null;
    node.addEventListener("change", emit);
    itemInputs.push(node);
    label.append(node, document.createTextNode(option));
    box.append(label);
  }
  allInput.addEventListener("change", () => {
    itemInputs.forEach((n) => (n.disabled = allInput.checked));
    emit();
  });
  function emit(): void {
    if (allInput.checked) {
      onChange(null);
      return;
    }
    onChange(options.filter((_, i) => itemInputs[i].checked));
  }
  return box;
}

function renderRule(rule: AlterationRule, index: number, ui: Elements): HTMLElement {
  const space = state.space!;
  const row = document.createElement("fieldset");
  row.className = "rule";
  const legend = document.createElement("legend");
  legend.textContent = `rule ${index + 1}`;
  row.append(legend);

  const set = (patch: Partial<AlterationRule>) => {
    state = updateRule(state, index, patch);
    render(ui);
  };

  const addField = (label: string, control: HTMLElement) => {
    const wrap = document.createElement("div");
    wrap.className = "field";
    const caption = document.createElement("span");
    caption.textContent = label;
    wrap.append(caption, control);
    row.append(wrap);
  };

  addField(
    "players",
    multiPicker(space.players.map((p) => p.player_id), rule.players, (v) => set({ players: v })),
  );
  addField("regions", multiPicker(space.regions, rule.regions, (v) => set({ regions: v })));
  addField(
    "pressure",
    multiPicker(space.pressures, rule.pressure, (v) => set({ pressure: v as Pressure[] | null })),
  );
  addField(
    "slices",
    multiPicker(space.slices.map(String), rule.slices?.map(String) ?? null, (v) =>
      set({ slices: v ? v.map(Number) : null }),
    ),
  );

  const kind = document.createElement("select");
  for (const value of ["scale_shot_prob", "scale_transition_prob"]) {
    const option = document.createElement("option");
    option.value = value;
    option.textContent = value;
    option.selected = rule.kind === value;
    kind.append(option);
  }
  kind.addEventListener("change", () => {
    const next = kind.value as AlterationRule["kind"];
    set({
      kind: next,
      dest: next === "scale_transition_prob"
        ? rule.dest ?? { players: null, regions: null, pressure: null }
        : undefined,
    });
  });
  addField("kind", kind);

  const factor = input(String(rule.factor), (v) => set({ factor: Number(v) }), "factor");
  factor.type = "number";
  factor.step = "0.05";
  addField("factor", factor);

  if (rule.kind === "scale_transition_prob") {
    addField(
      "dest players",
      multiPicker(space.players.map((p) => p.player_id), rule.dest?.players ?? null, (v) =>
        set({ dest: { players: v, regions: rule.dest?.regions ?? null, pressure: rule.dest?.pressure ?? null } }),
      ),
    );
  }

  const remove = document.createElement("button");
  remove.textContent = "remove";
  remove.addEventListener("click", () => {
    state = removeRule(state, index);
    render(ui);
  });
  row.append(remove);
  return row;
}

function render(ui: Elements): void {
  ui.rules.replaceChildren(...state.draft.rules.map((r, k) => renderRule(r, k, ui)));
  ui.messages.replaceChildren(
    ...state.messages.map((m) => {
      const li = document.createElement("li");
      li.textContent = `rule ${m.rule + 1} ${m.field}: ${m.message}`;
      return li;
    }),
  );
  const p = preview(state);
  ui.previewBanner.textContent = p.identity
    ? "identity alteration: both arms will match exactly"
    : p.targetedPerRule
      ? `targets ${p.targetedPerRule.join(", ")} states per rule`
      : "";
  ui.previewJson.textContent = p.serialized;
  (el("run") as HTMLButtonElement).disabled = !canSubmit(state);
}

function svgHistogram(title: string, hist: ReturnType<typeof binPair>): HTMLElement {
  const width = 320;
  const height = 120;
  const max = Math.max(...hist.baseline, ...hist.altered, 1);
  const bar = width / BIN_COUNT;
  const ns = "http://www.w3.org/2000/svg";
  const svg = document.createElementNS(ns, "svg");
  svg.setAttribute("width", String(width));
  svg.setAttribute("height", String(height));
  const draw = (counts: number[], color: string, offset: number) => {
    counts.forEach((c, i) => {
      const h = (c / max) * (height - 10);
      const rect = document.createElementNS(ns, "rect");
      rect.setAttribute("x", String(i * bar + offset));
      rect.setAttribute("y", String(height - h));
      rect.setAttribute("width", String(Math.max(bar / 2 - 1, 1)));
      rect.setAttribute("height", String(h));
      rect.setAttribute("fill", color);
      svg.append(rect);
    });
  };
  draw(hist.baseline, "#8a8a8a", 0);
  draw(hist.altered, "#c0392b", bar / 2);
  const wrap = document.createElement("figure");
  const caption = document.createElement("figcaption");
  caption.textContent = title;
  wrap.append(caption, svg);
  return wrap;
}

function renderReport(report: CompareReport, runId: string, ui: Elements): void {
  const section = document.createElement("section");
  const heading = document.createElement("h3");
  heading.textContent = `run ${runId} (${report.replicates} replicates, seed ${report.seed})`;
  section.append(heading);

  const cards = document.createElement("div");
  cards.className = "cards";
  for (const card of deltaCards(report)) {
    const node = document.createElement("div");
    node.className = "card";
    node.innerHTML =
      `<strong>${card.label}</strong><br>` +
      `${card.baselineMean.toFixed(4)} → ${card.alteredMean.toFixed(4)}<br>` +
      `<em>Δ ${card.delta >= 0 ? "+" : ""}${card.delta.toFixed(4)}</em>`;
    cards.append(node);
  }
  section.append(cards);

  const plots = document.createElement("div");
  plots.className = "plots";
  for (const [metric, series] of Object.entries(report.metrics)) {
    plots.append(svgHistogram(METRIC_LABELS[metric] ?? metric, binPair(series)));
  }
  section.append(plots);

  const shifts = playerShifts(report).slice(0, 5);
  const list = document.createElement("ul");
  for (const s of shifts) {
    const li = document.createElement("li");
    li.textContent = `${s.player}: ${s.baseline.toFixed(1)} → ${s.altered.toFixed(1)} shots (${s.pct >= 0 ? "+" : ""}${s.pct.toFixed(1)}%)`;
    list.append(li);
  }
  section.append(list);
  ui.results.replaceChildren(section);
}

function history(): { runId: string; label: string }[] {
  try {
    return JSON.parse(localStorage.getItem(HISTORY_KEY) ?? "[]");
  } catch {
    return [];
  }
}

function pushHistory(runId: string, label: string, ui: Elements): void {
  const items = history().filter((h) => h.runId !== runId);
  items.unshift({ runId, label });
  localStorage.setItem(HISTORY_KEY, JSON.stringify(items.slice(0, 20)));
  renderHistory(ui);
}

function renderHistory(ui: Elements): void {
  ui.history.replaceChildren(
    ...history().map((item) => {
      const li = document.createElement("li");
      const link = document.createElement("a");
      link.href = "#";
      link.textContent = `${item.runId}: ${item.label}`;
      link.addEventListener("click", async (event) => {
        event.preventDefault();
        renderReport(await client.report(item.runId), item.runId, ui);
      });
      li.append(link);
      return li;
    }),
  );
}

async function runCompare(ui: Elements): Promise<void> {
  const replicates = Number((el("replicates") as HTMLInputElement).value) || 100;
  const seed = Number((el("seed") as HTMLInputElement).value) || 1;
  const draws = (el("draws") as HTMLInputElement).value || "data";
  const starts = (el("starts") as HTMLInputElement).value || "data/starts.jsonl";
  const lapses = (el("lapses") as HTMLInputElement).value || "data/lapses.bin";
  ui.status.textContent = "validating alteration…";
  try {
    const stored = await client.submitAlteration(state.draft);
    ui.status.textContent = `alteration ${stored.alteration_id} stored; launching…`;
    const accepted = await client.startCompare({
      draws, starts, lapses, replicates, seed, alteration_id: stored.alteration_id,
    });
    activeRunId = accepted.run_id;
    const result = await pollRun(client, accepted.run_id, {
      onTick: (s) => {
        if (s.run_id === activeRunId) ui.status.textContent = `run ${s.run_id}: ${s.status}`;
      },
    });
    if (accepted.run_id !== activeRunId) return; // superseded by a newer launch
    if (!result.ok) {
      ui.status.textContent = `run failed: ${result.status?.error ?? result.reason}`;
      return;
    }
    const report = await client.report(accepted.run_id);
    renderReport(report, accepted.run_id, ui);
    pushHistory(accepted.run_id, `${state.draft.rules.length} rule(s), ${replicates} reps`, ui);
    ui.status.textContent = `run ${accepted.run_id} done`;
  } catch (err) {
    ui.status.textContent = `error: ${(err as Error).message}`;
  }
}

export async function boot(baseUrl: string): Promise<void> {
  client = new ApiClient(baseUrl);
  const ui: Elements = {
    rules: el("rules"),
    messages: el("messages"),
    previewBanner: el("preview-banner"),
    previewJson: el("preview-json"),
    results: el("results"),
    history: el("history"),
    status: el("status"),
  };
  let space: StateSpaceInfo | null = null;
  try {
    space = await client.stateSpace();
    ui.status.textContent = `connected: ${space.n_states} states`;
  } catch (err) {
    ui.status.textContent = `service unreachable: ${(err as Error).message}`;
  }
  state = initialState(space);
  const presets: Record<string, () => void> = {
    "preset-identity": () => (state = withDraft(state, presetIdentity())),
    "preset-midrange": () => (state = withDraft(state, presetReduceContestedMidrange())),
    "preset-threes": () => (state = withDraft(state, presetThreePointSurge())),
    "preset-passcut": () => {
      const ids = space?.players.map((p) => p.player_id) ?? ["a", "b"];
      state = withDraft(state, presetPassCut(ids[0], ids[1] ?? ids[0]));
    },
  };
  for (const [id, apply] of Object.entries(presets)) {
    el(id).addEventListener("click", () => {
      apply();
      render(ui);
    });
  }
  el("add-rule").addEventListener("click", () => {
    state = addRule(state);
    render(ui);
  });
  el("run").addEventListener("click", () => void runCompare(ui));
  render(ui);
  renderHistory(ui);
}

declare global {
  interface Window {
    tmdpBoot: typeof boot;
  }
}

if (typeof window !== "undefined") {
  window.tmdpBoot = boot;
}
