/**
 * Review app controller: polls the service, renders one pair at a time,
 * applies verdicts optimistically, and shows the final summary.
 */

import { api, Progress, Solution, Verdict } from "./api.js";
import { Action, bindKeyboard } from "./keyboard.js";
import { TaskQueue } from "./queue.js";

type Net = Pick<typeof api, "nextTasks" | "progress" | "solution" | "submitLabel">;

export class App {
  readonly queue = new TaskQueue();
  offline = false;
  progress: Progress | null = null;
  solution: Solution | null = null;
  private flushChain: Promise<void> = Promise.resolve();

  constructor(
    private readonly root: HTMLElement,
    private readonly net: Net = api,
    private readonly pollMs = 400,
  ) {}

  start(): void {
    bindKeyboard(document, (action) => this.onAction(action));
    this.render();
    void this.loop();
  }

  private async loop(): Promise<void> {
    for (;;) {
      await this.tick();
      this.render();
      if (this.solution) {
        return;
      }
      await new Promise((resolve) => setTimeout(resolve, this.pollMs));
    }
  }

  /** One poll step: flush pending verdicts, then refresh queue and progress. */
  async tick(): Promise<void> {
    try {
      await this.flushOutbox();
      this.progress = await this.net.progress();
      if (this.progress.done) {
        this.solution = await this.net.solution();
        return;
      }
      const batch = await this.net.nextTasks(10);
      this.queue.merge(batch.tasks);
      this.offline = false;
    } catch {
      this.offline = true; // verdicts stay queued locally; retry next tick
    }
  }

  /** Sends are serialized so rapid verdicts and the poll never interleave. */
  private flushOutbox(): Promise<void> {
    this.flushChain = this.flushChain.catch(() => {}).then(() => this.drainOutbox());
    return this.flushChain;
  }

  private async drainOutbox(): Promise<void> {
    const pending = this.queue.takeOutbox();
    for (let i = 0; i < pending.length; i++) {
      const item = pending[i];
      try {
        const result = await this.net.submitLabel(item.pair_id, item.verdict);
        if (result.status === "stale") {
          this.queue.removeStale(item.pair_id);
        }
      } catch {
        this.queue.pushBack(pending.slice(i)); // resend after reconnect
        throw new Error("offline");
      }
    }
  }

  onAction(action: Action): void {
    if (this.solution) {
      return;
    }
    if (action === "skip") {
      this.queue.skip();
    } else {
      this.queue.answerCurrent(action as Verdict);
      void this.flushOutbox().catch(() => {
        this.offline = true;
      });
    }
    this.render();
  }

  render(): void {
    if (this.solution) {
      this.root.innerHTML = renderSummary(this.solution);
      return;
    }
    this.root.innerHTML = [
      this.offline ? `<div class="banner" id="offline">connection lost; verdicts are queued locally and retried</div>` : "",
      renderHeader(this.progress, this.queue.outboxSize()),
      renderCard(this.queue),
    ].join("\n");
    const buttons: [string, Action][] = [["match", "match"], ["unmatch", "unmatch"], ["skip", "skip"]];
    for (const [id, action] of buttons) {
      const el = this.root.querySelector<HTMLButtonElement>(`#btn-${id}`);
      el?.addEventListener("click", () => this.onAction(action));
    }
  }
}

function renderHeader(progress: Progress | null, outbox: number): string {
  if (!progress) {
    return `<header><span class="badge">connecting</span></header>`;
  }
  const pct = progress.total_estimate
    ? Math.round((100 * progress.asked) / progress.total_estimate)
    : 0;
  const bounds = progress.current_bounds
    ? `region subsets [${progress.current_bounds[0]}, ${progress.current_bounds[1]}]`
    : "region pending";
  return `
  <header>
    <span class="badge phase-${progress.phase}">${progress.phase}</span>
    <span id="stats">${progress.asked} / ${progress.total_estimate} labeled (${pct}%)
      &middot; ${bounds}${outbox ? ` &middot; ${outbox} unsent` : ""}</span>
    <div class="bar"><div class="fill" style="width:${pct}%"></div></div>
  </header>`;
}

function renderCard(queue: TaskQueue): string {
  const task = queue.current();
  if (!task) {
    return `<main class="waiting" id="waiting">solver computing&hellip; polling for the next pair</main>`;
  }
  const rows = Object.entries(task.display)
    .map(([field, value]) => `<tr><th>${escapeHtml(field)}</th><td>${escapeHtml(value)}</td></tr>`)
    .join("");
  return `
  <main class="card" data-pair="${escapeHtml(task.pair_id)}">
    <div class="pair-id">${escapeHtml(task.pair_id)} <span class="badge phase-${task.phase}">${task.phase}</span></div>
    <table>${rows}</table>
    <div class="actions">
      <button id="btn-match">match <kbd>m</kbd></button>
      <button id="btn-unmatch">unmatch <kbd>u</kbd></button>
      <button id="btn-skip">skip <kbd>s</kbd></button>
    </div>
    <div class="queued">${queue.size() - 1} more in the local queue</div>
  </main>`;
}

function renderSummary(solution: Solution): string {
  const pct = (100 * solution.cost_fraction).toFixed(2);
  return `
  <main class="summary" id="summary">
    <h2>resolution complete</h2>
    <p>${solution.human_cost} pairs inspected (${pct}% of the workload)</p>
    <p>human region subsets [${solution.bounds.lower_subset}, ${solution.bounds.upper_subset}]
       &middot; solver: ${escapeHtml(solution.solver)}${solution.exhausted ? " &middot; exhausted fallback" : ""}</p>
    <p><a href="/api/solution">full solution JSON</a></p>
  </main>`;
}

function escapeHtml(text: string): string {
  return text.replace(/[&<>"']/g, (ch) => `&#${ch.charCodeAt(0)};`);
}
