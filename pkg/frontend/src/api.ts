import type { NextItemResponse, RatingRecord, SessionSummary } from "./types";

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let detail = response.statusText;
  try {
    const body = await response.json();
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(response.status, detail);
}

export class AnnotationApi {
  constructor(private baseUrl: string = "") {}

  private url(path: string): string {
    return this.baseUrl + path;
  }

  async nextItem(sessionId: string, evaluatorId: string): Promise<NextItemResponse> {
    const response = await fetch(
      this.url(`/sessions/${encodeURIComponent(sessionId)}/next?evaluator=${encodeURIComponent(evaluatorId)}`),
    );
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as NextItemResponse;
  }

  /**
   * Submit one form's records. Retries once on network failure; a 409 on
   * the retry means the first attempt landed before the connection died,
   * so it is treated as success (the server rejects true duplicates).
   */
  async submitRatings(sessionId: string, records: RatingRecord[]): Promise<void> {
    const body = JSON.stringify({ ratings: records });
    const post = () =>
      fetch(this.url(`/sessions/${encodeURIComponent(sessionId)}/ratings`), {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body,
      });
    let response: Response;
    try {
      response = await post();
    } catch {
      response = await post();
      if (response.status === 409) return;
    }
    if (!response.ok) throw await parseError(response);
  }

  async summary(sessionId: string): Promise<SessionSummary> {
    const response = await fetch(this.url(`/sessions/${encodeURIComponent(sessionId)}/summary`));
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as SessionSummary;
  }
}
