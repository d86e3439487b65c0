/** Typed client for the review API. All numbers shown in the UI come from
 * these payloads verbatim; nothing is recomputed client-side. */

export interface SessionInfo {
  revision: number;
  detections: number;
  clusters: number;
  tau: number;
  overrides: number;
}

export interface DetectionCard {
  id: string;
  image_id: string;
  label: string;
  display: string;
  decided_by: string;
  score: number | null;
  distance: number | null;
  image_available: boolean;
}

export interface DetectionsPage {
  revision: number;
  total: number;
  page: number;
  page_size: number;
  reference: string | null;
  items: DetectionCard[];
}

export interface Suggestion {
  label: string;
  display: string;
  score: number;
  hierarchy_match: boolean;
  below_tau: boolean;
}

export interface SuggestionsResponse {
  revision: number;
  detection_id: string;
  current_label: string;
  decided_by: string;
  already_decided: boolean;
  tau: number;
  suggestions: Suggestion[];
}

export interface LabelResponse {
  revision: number;
  detection_id: string;
  label: string;
}

export interface RecomputeResponse {
  revision: number;
  clusters: number;
  retrained: boolean;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function parseError(resp: Response): Promise<ApiError> {
  let detail = resp.statusText;
  try {
    const body = (await resp.json()) as { detail?: string };
    if (body.detail) detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(resp.status, detail);
}

export interface ListParams {
  sort?: "input" | "distance";
  reference?: string;
  page?: number;
  pageSize?: number;
}

export class ReviewApi {
  constructor(private readonly baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await fetch(`${this.baseUrl}${path}`, init);
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as T;
  }

  session(): Promise<SessionInfo> {
    return this.request("/api/session");
  }

  detections(params: ListParams = {}): Promise<DetectionsPage> {
    const query = new URLSearchParams();
    if (params.sort) query.set("sort", params.sort);
    if (params.reference) query.set("reference", params.reference);
    if (params.page) query.set("page", String(params.page));
    if (params.pageSize) query.set("page_size", String(params.pageSize));
    const qs = query.toString();
    return this.request(`/api/detections${qs ? `?${qs}` : ""}`);
  }

  suggestions(detectionId: string): Promise<SuggestionsResponse> {
    return this.request(`/api/detections/${encodeURIComponent(detectionId)}/suggestions`);
  }

  acceptLabel(detectionId: string, label: string): Promise<LabelResponse> {
    return this.request(`/api/detections/${encodeURIComponent(detectionId)}/label`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ label }),
    });
  }

  recompute(retrain: boolean): Promise<RecomputeResponse> {
    return this.request("/api/recompute", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ retrain }),
    });
  }

  imageUrl(imageId: string): string {
    return `${this.baseUrl}/api/images/${encodeURIComponent(imageId)}`;
  }
}
