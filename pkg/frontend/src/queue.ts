/**
 * Local task-queue state: what the reviewer sees next, what was answered,
 * and which verdicts are still waiting to reach the server.
 *
 * Verdicts are applied optimistically: the card advances immediately and the
 * verdict sits in the outbox until the server acknowledges it. A failed send
 * goes back to the outbox (nothing is lost offline); a stale response drops
 * the verdict since the server already has a label for that pair.
 */

import type { Task, Verdict } from "./api.js";

export interface PendingVerdict {
  pair_id: string;
  verdict: Verdict;
}

export class TaskQueue {
  private tasks: Task[] = [];
  private answered = new Set<string>();
  private outbox: PendingVerdict[] = [];

  /** Fold a freshly fetched batch in, keeping local order and skipping answered pairs. */
  merge(batch: Task[]): void {
    const known = new Set(this.tasks.map((t) => t.pair_id));
    for (const task of batch) {
      if (!known.has(task.pair_id) && !this.answered.has(task.pair_id)) {
        this.tasks.push(task);
        known.add(task.pair_id);
      }
    }
  }

  current(): Task | undefined {
    return this.tasks[0];
  }

  size(): number {
    return this.tasks.length;
  }

  /** Record a verdict for the current task and advance. */
  answerCurrent(verdict: Verdict): PendingVerdict | undefined {
    const task = this.tasks.shift();
    if (!task) {
      return undefined;
    }
    this.answered.add(task.pair_id);
    const pending = { pair_id: task.pair_id, verdict };
    this.outbox.push(pending);
    return pending;
  }

  /** Rotate the current task to the back without answering it. */
  skip(): void {
    const task = this.tasks.shift();
    if (task) {
      this.tasks.push(task);
    }
  }

  /** Server no longer wants this pair (stale): forget it entirely. */
  removeStale(pairId: string): void {
    this.tasks = this.tasks.filter((t) => t.pair_id !== pairId);
    this.answered.add(pairId);
  }

  /** Drain everything awaiting a send; failed sends must be pushed back. */
  takeOutbox(): PendingVerdict[] {
    const batch = this.outbox;
    this.outbox = [];
    return batch;
  }

  pushBack(pending: PendingVerdict[]): void {
    this.outbox = [...pending, ...this.outbox];
  }

  outboxSize(): number {
    return this.outbox.length;
  }

  hasAnswered(pairId: string): boolean {
    return this.answered.has(pairId);
  }
}
