/** Controller wiring the grid, the suggestion menu, and the API together.
 * All pipeline math stays server-side: this layer only fetches, renders, and
 * posts accepted labels back. */

import { ApiError, ReviewApi } from "./api.js";
import type { DetectionsPage } from "./api.js";
import { GRID_COLUMNS, renderGrid, renderStatus } from "./grid.js";
import { openMenuMessage, openSuggestionMenu, suggestionEnabled } from "./menu.js";
import { initialState, markStale, syncRevision } from "./state.js";
import type { GridViewState } from "./state.js";
import { setConnectionBanner, showToast } from "./toast.js";

export interface ControllerElements {
  root: HTMLElement;
  grid: HTMLElement;
  status: HTMLElement;
}

export class ReviewController {
  readonly state: GridViewState;
  private currentPage: DetectionsPage | null = null;

  constructor(
    private readonly el: ControllerElements,
    private readonly api: ReviewApi,
  ) {
    this.state = initialState();
    this.el.grid.addEventListener("contextmenu", (ev) => this.onContextMenu(ev));
    this.el.grid.addEventListener("click", (ev) => this.onClick(ev));
  }

  async refresh(): Promise<void> {
    let page: DetectionsPage;
    try {
      page = await this.api.detections({
        sort: this.state.sortMode,
        reference: this.state.reference ?? undefined,
        page: this.state.page,
        pageSize: this.state.pageSize,
      });
    } catch (err) {
      this.report(err);
      return;
    }
    setConnectionBanner(this.el.root, false);
    this.currentPage = page;
    syncRevision(this.state, page.revision);
    renderGrid(this.el.grid, page, this.state, this.api);
    renderStatus(this.el.status, page, this.state);
  }

  /** Sort the grid by learned-space distance from a detection id or a
   * species label; null reverts to input order. */
  async setReference(reference: string | null): Promise<void> {
    this.state.reference = reference;
    this.state.sortMode = reference === null ? "input" : "distance";
    this.state.page = 1;
    await this.refresh();
  }

  async setPage(page: number): Promise<void> {
    this.state.page = Math.max(1, page);
    await this.refresh();
  }

  select(detectionId: string | null): void {
    this.state.selected = detectionId;
    for (const card of this.el.grid.querySelectorAll<HTMLElement>(".card")) {
      card.classList.toggle("selected", card.dataset.id === detectionId);
    }
  }

  moveSelection(delta: number): void {
    const cards = [...this.el.grid.querySelectorAll<HTMLElement>(".card")];
    if (cards.length === 0) return;
    const current = cards.findIndex((c) => c.dataset.id === this.state.selected);
    const next = current === -1 ? 0 : Math.min(cards.length - 1, Math.max(0, current + delta));
    const id = cards[next]?.dataset.id ?? null;
    this.select(id);
    cards[next]?.scrollIntoView?.({ block: "nearest" });
  }

  moveSelectionRow(direction: 1 | -1): void {
    this.moveSelection(direction * GRID_COLUMNS);
  }

  async openMenuFor(detectionId: string, position?: { x: number; y: number }): Promise<void> {
    try {
      const resp = await this.api.suggestions(detectionId);
      openSuggestionMenu(this.el.root, resp, (label) => void this.accept(detectionId, label), position);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        openMenuMessage(
          this.el.root,
          "No clusters yet — run the pipeline (or recompute) before asking for suggestions.",
        );
        return;
      }
      this.report(err);
    }
  }

  /** Accept a label: exactly one POST, then re-render at the new revision. */
  async accept(detectionId: string, label: string): Promise<void> {
    try {
      const resp = await this.api.acceptLabel(detectionId, label);
      markStale(this.state, resp.revision);
      this.el.grid.classList.add("stale");
      showToast(this.el.root, `${detectionId} → ${label}`);
      await this.refresh();
    } catch (err) {
      this.report(err);
    }
  }

  /** Keyboard shortcut: accept the top enabled suggestion for the selection. */
  async acceptTopSuggestion(): Promise<void> {
    const id = this.state.selected;
    if (!id) return;
    try {
      const resp = await this.api.suggestions(id);
      const top = resp.suggestions.find(suggestionEnabled);
      if (!top) {
        showToast(this.el.root, "No acceptable suggestion for this detection", "error");
        return;
      }
      await this.accept(id, top.label);
    } catch (err) {
      this.report(err);
    }
  }

  async recompute(retrain: boolean): Promise<void> {
    try {
      const resp = await this.api.recompute(retrain);
      markStale(this.state, resp.revision);
      showToast(this.el.root, `recomputed: ${resp.clusters} clusters at revision ${resp.revision}`);
      await this.refresh();
    } catch (err) {
      this.report(err);
    }
  }

  page(): DetectionsPage | null {
    return this.currentPage;
  }

  private onContextMenu(ev: MouseEvent): void {
    const card = (ev.target as HTMLElement).closest<HTMLElement>(".card");
    if (!card?.dataset.id) return;
    ev.preventDefault();
    this.select(card.dataset.id);
    void this.openMenuFor(card.dataset.id, { x: ev.clientX, y: ev.clientY });
  }

  private onClick(ev: MouseEvent): void {
    const card = (ev.target as HTMLElement).closest<HTMLElement>(".card");
    if (card?.dataset.id) this.select(card.dataset.id);
  }

  private report(err: unknown): void {
    if (err instanceof ApiError) {
      showToast(this.el.root, `${err.status}: ${err.message}`, "error");
    } else {
      setConnectionBanner(this.el.root, true);
    }
  }
}
