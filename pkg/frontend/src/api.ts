/** Thin typed client for the survey service. No preference logic lives
 * here or anywhere else in the UI; the server owns all learning. */

import type {
  AnswerAck,
  FinalizeReport,
  FormChoice,
  MeshData,
  PurchaseChoice,
  Question,
  QuestionType,
  SessionInfo,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }

  /** Session/study state conflicts are recoverable from the UI's point
   * of view (show a banner, keep the current question on screen). */
  get recoverable(): boolean {
    return this.status === 409 || this.status === 422;
  }
}

export interface Answer {
  type: QuestionType;
  value: FormChoice | PurchaseChoice;
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!res.ok) {
      let detail = res.statusText;
      try {
        const body = (await res.json()) as { detail?: unknown };
        if (typeof body.detail === "string") detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(res.status, detail);
    }
    return (await res.json()) as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("/health");
  }

  createSession(studyId: string): Promise<SessionInfo> {
    return this.request(`/studies/${encodeURIComponent(studyId)}/sessions`, {
      method: "POST",
    });
  }

  nextQuestion(sessionId: string): Promise<Question> {
    return this.request(`/sessions/${encodeURIComponent(sessionId)}/next`);
  }

  submitAnswer(sessionId: string, answer: Answer): Promise<AnswerAck> {
    return this.request(`/sessions/${encodeURIComponent(sessionId)}/answer`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(answer),
    });
  }

  /** meshUrl comes verbatim from a question's mesh_urls. */
  fetchMesh(meshUrl: string, resolution?: number): Promise<MeshData> {
    const query = resolution === undefined ? "" : `?resolution=${resolution}`;
    return this.request(`${meshUrl}${query}`);
  }

  finalize(
    studyId: string,
    opts?: { iterations?: number; burnIn?: number; thin?: number },
  ): Promise<FinalizeReport> {
    const params = new URLSearchParams();
    if (opts?.iterations !== undefined)
      params.set("hb_iterations", String(opts.iterations));
    if (opts?.burnIn !== undefined)
      params.set("hb_burn_in", String(opts.burnIn));
    if (opts?.thin !== undefined) params.set("hb_thin", String(opts.thin));
    const query = params.size ? `?${params}` : "";
    return this.request(
      `/studies/${encodeURIComponent(studyId)}/finalize${query}`,
      { method: "POST" },
    );
  }
}
