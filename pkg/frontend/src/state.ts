/**
 * Composer state machine.
 *
 * The store owns the working track and the run console. Validation findings
 * and aggregates are always the server's answer for the current track: each
 * edit bumps a sequence number and responses for stale edits are dropped,
 * so the displayed report can never drift from the engine's semantics.
 */

import { ApiClient } from "./api.js";
import type {
  CatalogFilters,
  CourseAggregate,
  ModuleMeta,
  RunRecord,
  TrackFinding,
  WorkflowSummary,
} from "./types.js";

export interface Suggestion {
  candidate: string;
  title: string;
  viaAlternative: boolean;
}

export interface ComposerState {
  catalog: ModuleMeta[];
  filters: CatalogFilters;
  track: string[];
  report: TrackFinding[];
  totals: CourseAggregate | null;
  workflows: WorkflowSummary[];
  selectedWorkflow: string | null;
  runs: RunRecord[];
  banner: string | null;
  checking: boolean;
}

type Listener = (state: ComposerState) => void;

const EMPTY_TOTALS: CourseAggregate = {
  total_minutes: 0,
  workload_hours: { min: 0, max: 0 },
  max_complexity: 0,
  total_exercises: 0,
  total_price: 0,
  scale_histogram: {},
};

export class ComposerStore {
  readonly state: ComposerState = {
    catalog: [],
    filters: {},
    track: [],
    report: [],
    totals: EMPTY_TOTALS,
    workflows: [],
    selectedWorkflow: null,
    runs: [],
    banner: null,
    checking: false,
  };

  private listeners: Listener[] = [];
  private editSeq = 0;
  private pollTimers = new Map<string, ReturnType<typeof setTimeout>>();

  constructor(
    readonly api: ApiClient,
    private readonly pollIntervalMs = 1000,
  ) {}

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  private setBanner(message: string | null): void {
    this.state.banner = message;
    this.emit();
  }

  // -- catalog ---------------------------------------------------------------

  async loadCatalog(filters: CatalogFilters = this.state.filters): Promise<void> {
    this.state.filters = filters;
    try {
      const modules = await this.api.searchModules(filters);
      this.state.catalog = modules;
      this.setBanner(null);
    } catch {
      // keep the stale list; surface connectivity trouble without blocking
      this.setBanner("service unreachable; showing the last known catalog");
    }
  }

  moduleById(id: string): ModuleMeta | undefined {
    return this.state.catalog.find((m) => m.id === id);
  }

  // -- track editing ----------------------------------------------------------

  async addModule(id: string, position?: number): Promise<void> {
    if (this.state.track.includes(id)) return;
    const at = position ?? this.state.track.length;
    this.state.track.splice(at, 0, id);
    await this.refreshTrack();
  }

  async removeModule(index: number): Promise<void> {
    this.state.track.splice(index, 1);
    await this.refreshTrack();
  }

  async moveModule(index: number, delta: -1 | 1): Promise<void> {
    const next = index + delta;
    const track = this.state.track;
    if (next < 0 || next >= track.length) return;
    const entry = track[index]!;
    track[index] = track[next]!;
    track[next] = entry;
    await this.refreshTrack();
  }

  /**
   * One check+aggregate round trip per edit; responses belonging to an
   * outdated edit sequence are ignored (last write wins).
   */
  private async refreshTrack(): Promise<void> {
    const seq = ++this.editSeq;
    const entries = [...this.state.track];
    this.state.checking = true;
    this.emit();
    if (entries.length === 0) {
      if (seq === this.editSeq) {
        this.state.report = [];
        this.state.totals = EMPTY_TOTALS;
        this.state.checking = false;
        this.setBanner(null);
      }
      return;
    }
    try {
      const [check, totals] = await Promise.all([
        this.api.checkTrack(entries),
        this.api.aggregateTrack(entries),
      ]);
      if (seq !== this.editSeq) return; // stale edit, drop it
      this.state.report = check.findings;
      this.state.totals = totals;
      this.state.checking = false;
      this.setBanner(null);
    } catch (error) {
      if (seq !== this.editSeq) return;
      this.state.checking = false;
      this.setBanner(`track check failed: ${(error as Error).message}`);
    }
  }

  /** Candidates that would satisfy a PREREQ_UNSATISFIED finding. */
  suggestionsFor(finding: TrackFinding): Suggestion[] {
    if (finding.code !== "PREREQ_UNSATISFIED" || !finding.prerequisite) return [];
    const prereq = finding.prerequisite;
    const suggestions: Suggestion[] = [];
    const seen = new Set<string>();
    const push = (candidate: string, viaAlternative: boolean) => {
      if (seen.has(candidate)) return;
      seen.add(candidate);
      const meta = this.moduleById(candidate);
      suggestions.push({
        candidate,
        title: meta ? meta.title : candidate,
        viaAlternative,
      });
    };
    if (this.moduleById(prereq)) push(prereq, false);
    const prereqMeta = this.moduleById(prereq);
    for (const alt of prereqMeta?.alternatives ?? []) {
      if (this.moduleById(alt)) push(alt, true);
    }
    for (const meta of this.state.catalog) {
      if (meta.alternatives.includes(prereq)) push(meta.id, true);
    }
    return suggestions;
  }

  /**
   * Apply a one-click fix: put the candidate right before the offending
   * entry, moving it if it is already in the track.
   */
  async applySuggestion(finding: TrackFinding, suggestion: Suggestion): Promise<void> {
    const offender = finding.module;
    if (!offender) return;
    const track = this.state.track;
    const offenderAt = track.indexOf(offender);
    if (offenderAt < 0) return;
    const existing = track.indexOf(suggestion.candidate);
    if (existing >= 0) track.splice(existing, 1);
    const insertAt = track.indexOf(offender);
    track.splice(insertAt, 0, suggestion.candidate);
    await this.refreshTrack();
  }

  // -- run console --------------------------------------------------------------

  async loadWorkflows(): Promise<void> {
    try {
      this.state.workflows = await this.api.listWorkflows();
      if (this.state.selectedWorkflow === null && this.state.workflows.length > 0) {
        this.state.selectedWorkflow = this.state.workflows[0]!.id;
      }
      this.setBanner(null);
    } catch {
      this.setBanner("service unreachable; workflow list may be stale");
    }
  }

  selectWorkflow(id: string): void {
    this.state.selectedWorkflow = id;
    this.emit();
  }

  async submitRun(workflowId: string, seed: number): Promise<string> {
    const { run_id } = await this.api.submitRun(workflowId, seed);
    const record = await this.api.getRun(run_id);
    this.upsertRun(record);
    this.schedulePoll(run_id);
    return run_id;
  }

  async cancelRun(runId: string): Promise<void> {
    await this.api.cancelRun(runId);
    await this.pollOnce(runId);
  }

  run(runId: string): RunRecord | undefined {
    return this.state.runs.find((r) => r.run_id === runId);
  }

  private upsertRun(record: RunRecord): void {
    const at = this.state.runs.findIndex((r) => r.run_id === record.run_id);
    if (at >= 0) this.state.runs[at] = record;
    else this.state.runs.unshift(record);
    this.emit();
  }

  async pollOnce(runId: string): Promise<RunRecord> {
    const record = await this.api.getRun(runId);
    this.upsertRun(record);
    if (record.status === "running") this.schedulePoll(runId);
    else this.clearPoll(runId);
    return record;
  }

  private schedulePoll(runId: string): void {
    this.clearPoll(runId);
    const timer = setTimeout(() => {
      this.pollOnce(runId).catch(() => this.schedulePoll(runId));
    }, this.pollIntervalMs);
    this.pollTimers.set(runId, timer);
  }

  private clearPoll(runId: string): void {
    const timer = this.pollTimers.get(runId);
    if (timer !== undefined) clearTimeout(timer);
    this.pollTimers.delete(runId);
  }

  /** Wait until a run leaves the running state (used by tests and the console). */
  async waitForRun(runId: string, timeoutMs = 30_000): Promise<RunRecord> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const record = await this.pollOnce(runId);
      if (record.status !== "running") return record;
      if (Date.now() > deadline) throw new Error(`run ${runId} still running after ${timeoutMs}ms`);
      await new Promise((resolve) => setTimeout(resolve, Math.min(this.pollIntervalMs, 50)));
    }
  }

  dispose(): void {
    for (const timer of this.pollTimers.values()) clearTimeout(timer);
    this.pollTimers.clear();
  }
}
