/**
 * Typed client for the labeling service API.
 */

export interface Task {
  pair_id: string;
  display: Record<string, string>;
  phase: string;
}

export interface TaskBatch {
  phase: string;
  tasks: Task[];
}

export interface Progress {
  asked: number;
  total_estimate: number;
  phase: string;
  current_bounds: [number, number] | null;
  pending: number;
  done: boolean;
  failure: string | null;
}

export interface Solution {
  solver: string;
  bounds: { lower_subset: number | null; upper_subset: number | null };
  region_sizes: Record<string, number>;
  human_cost: number;
  cost_fraction: number;
  exhausted: boolean;
}

export type Verdict = "match" | "unmatch";

export interface SubmitResult {
  status: "accepted" | "duplicate" | "stale";
  progress?: Progress;
}

/** Thrown for responses that are neither success nor a recognized conflict. */
export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

async function getJson<T>(url: string): Promise<T> {
  const resp = await fetch(url);
  if (!resp.ok) {
    throw new ApiError(resp.status, `${url} -> ${resp.status}`);
  }
  return (await resp.json()) as T;
}

export const api = {
  async nextTasks(limit = 10): Promise<TaskBatch> {
    return getJson<TaskBatch>(`/api/tasks/next?limit=${limit}`);
  },

  async progress(): Promise<Progress> {
    return getJson<Progress>("/api/progress");
  },

  /** null until the solver finishes. */
  async solution(): Promise<Solution | null> {
    const resp = await fetch("/api/solution");
    if (resp.status === 404) {
      return null;
    }
    if (!resp.ok) {
      throw new ApiError(resp.status, `solution -> ${resp.status}`);
    }
    return (await resp.json()) as Solution;
  },

  /**
   * Submit one verdict. A 409 means the pair is no longer awaiting a label
   * (answered elsewhere or not queued); reported as "stale", not an error.
   */
  async submitLabel(pairId: string, verdict: Verdict): Promise<SubmitResult> {
    const resp = await fetch("/api/labels", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ pair_id: pairId, label: verdict }),
    });
    if (resp.status === 409) {
      return { status: "stale" };
    }
    if (!resp.ok) {
      throw new ApiError(resp.status, `label submission -> ${resp.status}`);
    }
    return (await resp.json()) as SubmitResult;
  },
};
