/** Mock review API backed by an in-memory session, plus call counters. */

import { vi } from "vitest";
import type { DetectionCard, DetectionsPage, Suggestion, SuggestionsResponse } from "../src/api.js";

export interface MockSession {
  revision: number;
  cards: DetectionCard[];
  suggestions: Record<string, Suggestion[]>;
  tau: number;
  noClusters: boolean;
  labelPosts: Array<{ id: string; label: string }>;
  detectionFetches: number;
}

export function card(id: string, overrides: Partial<DetectionCard> = {}): DetectionCard {
  return {
    id,
    image_id: `img-${id}`,
    label: "animalia;;;;;;animal",
    display: "animal",
    decided_by: "untouched",
    score: null,
    distance: null,
    image_available: false,
    ...overrides,
  };
}

export function suggestion(label: string, score: number, overrides: Partial<Suggestion> = {}): Suggestion {
  return {
    label,
    display: label.split(";").pop() || label,
    score,
    hierarchy_match: true,
    below_tau: true,
    ...overrides,
  };
}

export function makeSession(cards: DetectionCard[], suggestions: Record<string, Suggestion[]> = {}): MockSession {
  return {
    revision: 0,
    cards,
    suggestions,
    tau: 0.85,
    noClusters: false,
    labelPosts: [],
    detectionFetches: 0,
  };
}

function json(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

/** Installs a fetch stub that serves the mock session. */
export function installFetch(session: MockSession): void {
  vi.stubGlobal(
    "fetch",
    vi.fn(async (input: RequestInfo | URL, init?: RequestInit): Promise<Response> => {
      const url = String(input);
      const path = url.replace(/^https?:\/\/[^/]+/, "");

      if (path.startsWith("/api/detections?") || path === "/api/detections") {
        session.detectionFetches += 1;
        const params = new URLSearchParams(path.split("?")[1] ?? "");
        const pageSize = Number(params.get("page_size") ?? 50);
        const page = Number(params.get("page") ?? 1);
        const items = session.cards.slice((page - 1) * pageSize, page * pageSize);
        const body: DetectionsPage = {
          revision: session.revision,
          total: session.cards.length,
          page,
          page_size: pageSize,
          reference: params.get("reference"),
          items,
        };
        return json(200, body);
      }

      const suggestionsMatch = path.match(/^\/api\/detections\/([^/]+)\/suggestions$/);
      if (suggestionsMatch) {
        const id = decodeURIComponent(suggestionsMatch[1]!);
        if (session.noClusters) {
          return json(409, { detail: "run the pipeline (or recompute) before asking for suggestions" });
        }
        const found = session.cards.find((c) => c.id === id);
        if (!found) return json(404, { detail: `unknown detection '${id}'` });
        const body: SuggestionsResponse = {
          revision: session.revision,
          detection_id: id,
          current_label: found.label,
          decided_by: found.decided_by,
          already_decided: found.decided_by !== "untouched",
          tau: session.tau,
          suggestions: session.suggestions[id] ?? [],
        };
        return json(200, body);
      }

      const labelMatch = path.match(/^\/api\/detections\/([^/]+)\/label$/);
      if (labelMatch && init?.method === "POST") {
        const id = decodeURIComponent(labelMatch[1]!);
        const body = JSON.parse(String(init.body)) as { label: string };
        session.labelPosts.push({ id, label: body.label });
        session.revision += 1;
        const found = session.cards.find((c) => c.id === id);
        if (found) {
          found.label = body.label;
          found.display = body.label.split(";").pop() || body.label;
        }
        return json(200, { revision: session.revision, detection_id: id, label: body.label });
      }

      if (path === "/api/recompute" && init?.method === "POST") {
        session.revision += 1;
        return json(200, { revision: session.revision, clusters: 3, retrained: false });
      }

      return json(404, { detail: `unmocked path ${path}` });
    }),
  );
}

export function labelPostCount(): number {
  const mock = fetch as unknown as ReturnType<typeof vi.fn>;
  return mock.mock.calls.filter(
    ([input, init]: [RequestInfo | URL, RequestInit | undefined]) =>
      /\/label$/.test(String(input)) && init?.method === "POST",
  ).length;
}

export function mountDom(): { root: HTMLElement; grid: HTMLElement; status: HTMLElement } {
  document.body.innerHTML = `<div id="app"><span id="status"></span><div id="grid"></div></div>`;
  return {
    root: document.getElementById("app")!,
    grid: document.getElementById("grid")!,
    status: document.getElementById("status")!,
  };
}

export function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}
