/** Run polling with stale-response discarding by run id. */

import type { ApiClient, RunStatus } from "./api.js";

export interface PollOptions {
  intervalMs?: number;
  timeoutMs?: number;
  onTick?: (status: RunStatus) => void;
}

export type PollResult =
  | { ok: true; status: RunStatus }
  | { ok: false; reason: "failed" | "timeout"; status?: RunStatus };

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

/**
 * Poll one run until it finishes. Responses for any other run id are
 * discarded, so a superseded poll loop can never repaint fresh results.
 */
export async function pollRun(
  client: Pick<ApiClient, "run">,
  runId: string,
  options: PollOptions = {},
): Promise<PollResult> {
  const interval = options.intervalMs ?? 400;
  const deadline = Date.now() + (options.timeoutMs ?? 180_000);
  while (Date.now() < deadline) {
    const status = await client.run(runId);
    if (status.run_id !== runId) {
      continue; // stale or crossed response; ignore it
    }
    options.onTick?.(status);
    if (status.status === "done") return { ok: true, status };
    if (status.status === "failed") return { ok: false, reason: "failed", status };
    await sleep(interval);
  }
  return { ok: false, reason: "timeout" };
}
