/** Application state and actions. The server is the source of truth: every
 * mutation rewrites local state from the response or a follow-up fetch, so
 * nothing optimistic survives a refresh. */

import {
  ApiClient,
  ApiError,
  MetricsReport,
  ModelInfo,
  QuarantineDetail,
  QuarantineSummary,
  RetrainJob,
} from "./api.js";

export interface RetrainState {
  inFlight: boolean;
  /** set when retrain is requested with zero labeled flows; next click sends */
  armed: boolean;
  job: RetrainJob | null;
  error: string | null;
  epochsDraft: string;
}

export interface AppState {
  connected: boolean;
  loaded: boolean;
  model: ModelInfo | null;
  metrics: MetricsReport | null;
  items: QuarantineSummary[];
  selected: QuarantineDetail | null;
  drafts: Map<string, string>;
  busy: Set<string>;
  itemErrors: Map<string, string>;
  retrain: RetrainState;
}

export interface StoreOptions {
  /** pause between retrain job polls; tests inject an instant resolver */
  sleep?: (ms: number) => Promise<void>;
  pollMs?: number;
}

const realSleep = (ms: number) => new Promise<void>((res) => setTimeout(res, ms));

export class Store {
  readonly state: AppState = {
    connected: true,
    loaded: false,
    model: null,
    metrics: null,
    items: [],
    selected: null,
    drafts: new Map(),
    busy: new Set(),
    itemErrors: new Map(),
    retrain: { inFlight: false, armed: false, job: null, error: null, epochsDraft: "" },
  };

  private listeners: Array<() => void> = [];
  private readonly sleep: (ms: number) => Promise<void>;
  private readonly pollMs: number;

  constructor(
    private readonly api: ApiClient,
    opts: StoreOptions = {},
  ) {
    this.sleep = opts.sleep ?? realSleep;
    this.pollMs = opts.pollMs ?? 500;
  }

  subscribe(fn: () => void): void {
    this.listeners.push(fn);
  }

  private emit(): void {
    for (const fn of this.listeners) fn();
  }

  pending(): QuarantineSummary[] {
    return sortNewestFirst(this.state.items.filter((it) => it.status === "pending"));
  }

  resolved(): QuarantineSummary[] {
    return sortNewestFirst(this.state.items.filter((it) => it.status !== "pending"));
  }

  labeledCount(): number {
    return this.state.items.filter((it) => it.status === "labeled").length;
  }

  /** true when the name would become a brand-new class on the next retrain */
  isNewClassName(name: string): boolean {
    const model = this.state.model;
    return name.trim().length > 0 && model !== null && !model.classes.includes(name.trim());
  }

  async refresh(): Promise<void> {
    try {
      const [model, items, metrics] = await Promise.all([
        this.api.model(),
        this.api.quarantine(),
        this.api.metrics(),
      ]);
      this.state.model = model;
      this.state.items = items;
      this.state.metrics = metrics;
      this.state.connected = true;
      this.state.loaded = true;
      if (this.state.selected) {
        const fresh = items.find((it) => it.id === this.state.selected!.id);
        if (fresh) Object.assign(this.state.selected, fresh);
      }
    } catch {
      // keep whatever we already had; the banner says it is stale
      this.state.connected = false;
    }
    this.emit();
  }

  async select(id: string): Promise<void> {
    try {
      this.state.selected = await this.api.item(id);
      this.state.connected = true;
    } catch (err) {
      if (err instanceof ApiError) this.state.itemErrors.set(id, err.message);
      else this.state.connected = false;
    }
    this.emit();
  }

  setDraft(id: string, text: string): void {
    this.state.drafts.set(id, text);
    this.emit();
  }

  setEpochsDraft(text: string): void {
    this.state.retrain.epochsDraft = text;
    this.emit();
  }

  async labelItem(id: string): Promise<void> {
    const name = (this.state.drafts.get(id) ?? "").trim();
    if (name.length === 0) {
      this.state.itemErrors.set(id, "class name must not be empty");
      this.emit();
      return;
    }
    if (this.state.busy.has(id)) return;
    this.state.busy.add(id);
    this.state.itemErrors.delete(id);
    this.emit();
    try {
      const updated = await this.api.label(id, name);
      this.replaceItem(updated);
      this.state.drafts.delete(id);
    } catch (err) {
      if (err instanceof ApiError) {
        this.state.itemErrors.set(id, err.message);
        if (err.status === 409) await this.refreshQuiet();
      } else {
        this.state.connected = false;
      }
    } finally {
      this.state.busy.delete(id);
      this.emit();
    }
  }

  async dismissItem(id: string): Promise<void> {
    if (this.state.busy.has(id)) return;
    this.state.busy.add(id);
    this.state.itemErrors.delete(id);
    this.emit();
    try {
      const updated = await this.api.dismiss(id);
      this.replaceItem(updated);
    } catch (err) {
      if (err instanceof ApiError) {
        this.state.itemErrors.set(id, err.message);
        if (err.status === 409) await this.refreshQuiet();
      } else {
        this.state.connected = false;
      }
    } finally {
      this.state.busy.delete(id);
      this.emit();
    }
  }

  async startRetrain(): Promise<void> {
    const rt = this.state.retrain;
    if (rt.inFlight) return;
    const opts: { epochs?: number } = {};
    const draft = rt.epochsDraft.trim();
    if (draft.length > 0) {
      const epochs = Number(draft);
      if (!Number.isInteger(epochs) || epochs < 1) {
        rt.error = "epochs must be a positive integer";
        this.emit();
        return;
      }
      opts.epochs = epochs;
    }
    if (this.labeledCount() === 0 && !rt.armed) {
      // no labeled flows: ask for an explicit second click
      rt.armed = true;
      this.emit();
      return;
    }
    rt.armed = false;
    rt.inFlight = true;
    rt.error = null;
    rt.job = null;
    this.emit();
    let jobId: string;
    try {
      jobId = (await this.api.startRetrain(opts)).job_id;
    } catch (err) {
      rt.error = err instanceof ApiError ? err.message : "service unreachable";
      rt.inFlight = false;
      this.emit();
      return;
    }
    try {
      for (;;) {
        const job = await this.api.job(jobId);
        rt.job = job;
        this.emit();
        if (job.state !== "running") break;
        await this.sleep(this.pollMs);
      }
    } catch (err) {
      rt.error = err instanceof ApiError ? err.message : "lost contact while polling";
    }
    rt.inFlight = false;
    if (rt.job?.state === "done") {
      // pick up the expanded class list and the post-retrain evaluation
      await this.refreshQuiet();
    }
    this.emit();
  }

  private replaceItem(updated: QuarantineSummary): void {
    const idx = this.state.items.findIndex((it) => it.id === updated.id);
    const summary: QuarantineSummary = {
      id: updated.id,
      received_at: updated.received_at,
      probs: updated.probs,
      status: updated.status,
    };
    if (updated.class !== undefined) summary.class = updated.class;
    if (idx >= 0) this.state.items[idx] = summary;
    else this.state.items.push(summary);
    if (this.state.selected?.id === updated.id) {
      Object.assign(this.state.selected, summary);
    }
  }

  private async refreshQuiet(): Promise<void> {
    await this.refresh();
  }
}

function sortNewestFirst(items: QuarantineSummary[]): QuarantineSummary[] {
  return items
    .map((it, i) => ({ it, i }))
    .sort((a, b) => b.it.received_at.localeCompare(a.it.received_at) || b.i - a.i)
    .map((x) => x.it);
}
