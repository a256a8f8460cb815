import type { ApiClient } from "./api.js";
import { ApiError } from "./api.js";
import type { ParseResult, TaskView } from "./types.js";
import { isTaskView } from "./types.js";

export interface SessionView {
  task: TaskView | null;
  busy: boolean;
  error: string | null;
  preview: ParseResult | null;
  previewPending: boolean;
  done: boolean;
}

/**
 * Annotation session: one task at a time, at most one in-flight mutation,
 * and a cancel-then-replace parse preview. Local state changes only after
 * the server acknowledges (no optimistic updates).
 */
export class AnnotatorSession {
  private task: TaskView | null = null;
  private busy = false;
  private error: string | null = null;
  private preview: ParseResult | null = null;
  private previewToken = 0;
  private previewPending = false;
  private done = false;

  constructor(
    private readonly api: ApiClient,
    private readonly onChange: (view: SessionView) => void = () => {},
  ) {}

  view(): SessionView {
    return {
      task: this.task,
      busy: this.busy,
      error: this.error,
      preview: this.preview,
      previewPending: this.previewPending,
      done: this.done,
    };
  }

  private emit(): void {
    this.onChange(this.view());
  }

  private setTask(task: TaskView): void {
    if (!isTaskView(task)) {
      throw new ApiError(0, "malformed_task", "server sent a malformed task payload");
    }
    this.task = task;
    this.preview = null;
    this.previewToken++;
    this.previewPending = false;
  }

  async loadNext(): Promise<void> {
    await this.mutate(async () => {
      try {
        this.setTask(await this.api.nextTask());
        this.done = false;
      } catch (err) {
        if (err instanceof ApiError && err.status === 404) {
          this.task = null;
          this.done = true;
          return;
        }
        throw err;
      }
    });
  }

  async submitLabel(label: "A" | "B" | "C"): Promise<void> {
    const task = this.requireTask();
    await this.mutate(async () => {
      this.setTask(await this.api.submitLabel(task.id, label));
    });
  }

  async submitDescription(nl: string): Promise<void> {
    const task = this.requireTask();
    if (!nl.trim()) {
      this.error = "description must not be empty";
      this.emit();
      return;
    }
    await this.mutate(async () => {
      this.setTask(await this.api.submitDescription(task.id, nl.trim()));
    });
  }

  /** Review submission auto-advances to the next pending task. */
  async submitReview(nl: string): Promise<void> {
    const task = this.requireTask();
    if (!nl.trim()) {
      this.error = "description must not be empty";
      this.emit();
      return;
    }
    const ok = await this.mutate(async () => {
      await this.api.submitReview(task.id, nl.trim());
    });
    if (ok) {
      await this.loadNext();
    }
  }

  /** Concurrent previews are cancelled-then-replaced: only the latest request
   * may publish its result. */
  async requestPreview(text: string): Promise<void> {
    const task = this.task;
    if (!task || !text.trim()) return;
    const token = ++this.previewToken;
    this.previewPending = true;
    this.emit();
    try {
      const result = await this.api.parsePreview(text.trim(), task.id);
      if (token !== this.previewToken) return; // superseded
      this.preview = result;
      this.error = null;
    } catch (err) {
      if (token !== this.previewToken) return;
      this.preview = null;
      this.error = err instanceof Error ? err.message : String(err);
    } finally {
      if (token === this.previewToken) {
        this.previewPending = false;
        this.emit();
      }
    }
  }

  private requireTask(): TaskView {
    if (!this.task) throw new ApiError(0, "no_task", "no task loaded");
    return this.task;
  }

  private async mutate(fn: () => Promise<void>): Promise<boolean> {
    if (this.busy) {
      this.error = "another request is still in flight";
      this.emit();
      return false;
    }
    this.busy = true;
    this.error = null;
    this.emit();
    try {
      await fn();
      return true;
    } catch (err) {
      this.error = err instanceof Error ? err.message : String(err);
      return false;
    } finally {
      this.busy = false;
      this.emit();
    }
  }
}
