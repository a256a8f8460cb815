import type { ParseResult, TaskView, UsefulnessLabel } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** Thin typed client over the annotation service endpoints. */
export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let resp: Response;
    try {
      resp = await this.fetchFn(this.base + path, init);
    } catch (err) {
      throw new ApiError(0, "network", `service unreachable: ${String(err)}`);
    }
    const body = (await resp.json().catch(() => ({}))) as Record<string, unknown>;
    if (!resp.ok) {
      throw new ApiError(
        resp.status,
        typeof body.error === "string" ? body.error : "unknown",
        typeof body.message === "string" ? body.message : `HTTP ${resp.status}`,
      );
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  nextTask(): Promise<TaskView> {
    return this.request<TaskView>("/api/tasks/next");
  }

  getTask(id: string): Promise<TaskView> {
    return this.request<TaskView>(`/api/tasks/${encodeURIComponent(id)}`);
  }

  submitLabel(id: string, label: Exclude<UsefulnessLabel, "Unlabeled">): Promise<TaskView> {
    return this.post<TaskView>(`/api/tasks/${encodeURIComponent(id)}/label`, { label });
  }

  submitDescription(id: string, nl: string): Promise<TaskView> {
    return this.post<TaskView>(`/api/tasks/${encodeURIComponent(id)}/description`, { nl });
  }

  submitReview(id: string, nl: string): Promise<TaskView> {
    return this.post<TaskView>(`/api/tasks/${encodeURIComponent(id)}/review`, { nl });
  }

  parsePreview(text: string, taskId?: string): Promise<ParseResult> {
    return this.post<ParseResult>("/api/parse", { text, task_id: taskId });
  }
}
