/**
 * Report view-model helpers: fixed-bin histograms and paired delta cards.
 *
 * The console renders only server-provided numbers; the single client-side
 * computation is binning for the distribution plots (30 bins, shared edges
 * across arms so baseline and altered histograms are visually comparable).
 */

import type { CompareReport, MetricSeries } from "./api.js";

export const BIN_COUNT = 30;

export interface Histogram {
  edges: number[];   // BIN_COUNT + 1 edges
  baseline: number[];
  altered: number[];
}

export const METRIC_LABELS: Record<string, string> = {
  midrange_contested_shots: "Contested mid-range shots",
  three_pt_shots: "3-point shots",
  epps: "Expected points per shot",
  eppp: "Expected points per play",
};

function finite(values: (number | null)[]): number[] {
  return values.filter((v): v is number => v !== null && Number.isFinite(v));
}

export function binPair(series: MetricSeries, bins: number = BIN_COUNT): Histogram {
  const all = [...finite(series.baseline), ...finite(series.altered)];
  if (all.length === 0) {
    return { edges: [0, 1], baseline: [0], altered: [0] };
  }
  let lo = Math.min(...all);
  let hi = Math.max(...all);
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const width = (hi - lo) / bins;
  const edges = Array.from({ length: bins + 1 }, (_, i) => lo + i * width);
  const count = (values: number[]) => {
    const out = new Array(bins).fill(0);
    for (const v of values) {
      const idx = Math.min(Math.floor((v - lo) / width), bins - 1);
      out[idx] += 1;
    }
    return out;
  };
  return { edges, baseline: count(finite(series.baseline)), altered: count(finite(series.altered)) };
}

export interface DeltaCard {
  metric: string;
  label: string;
  baselineMean: number;
  alteredMean: number;
  delta: number;
}

export function deltaCards(report: CompareReport): DeltaCard[] {
  const out: DeltaCard[] = [];
  for (const metric of Object.keys(report.metrics)) {
    out.push({
      metric,
      label: METRIC_LABELS[metric] ?? metric,
      baselineMean: report.summary[`mean_baseline_${metric}`],
      alteredMean: report.summary[`mean_altered_${metric}`],
      delta: report.summary[`mean_delta_${metric}`],
    });
  }
  return out;
}

export interface PlayerShift {
  player: string;
  baseline: number;
  altered: number;
  pct: number;
}

export function playerShifts(report: CompareReport): PlayerShift[] {
  const mean = (xs: number[]) => xs.reduce((a, b) => a + b, 0) / Math.max(xs.length, 1);
  return Object.entries(report.per_player)
    .map(([player, series]) => {
      const b = mean(series.baseline);
      const a = mean(series.altered);
      return { player, baseline: b, altered: a, pct: b > 0 ? (a / b - 1) * 100 : 0 };
    })
    .sort((x, y) => Math.abs(y.pct) - Math.abs(x.pct));
}

export function allDeltasZero(report: CompareReport): boolean {
  return deltaCards(report).every((c) => c.delta === 0);
}
