/** View state for the crop grid. The revision always names the API revision
 * of the data currently on screen; after a mutation the grid is flagged stale
 * until it re-renders at the new revision. */

export type SortMode = "input" | "distance";

export interface GridViewState {
  reference: string | null;
  sortMode: SortMode;
  page: number;
  pageSize: number;
  revision: number;
  selected: string | null;
  stale: boolean;
}

export function initialState(pageSize = 48): GridViewState {
  return {
    reference: null,
    sortMode: "input",
    page: 1,
    pageSize,
    revision: 0,
    selected: null,
    stale: false,
  };
}

/** A mutation elsewhere moved the session past what is on screen. */
export function markStale(state: GridViewState, newRevision: number): void {
  if (newRevision !== state.revision) {
    state.stale = true;
  }
}

/** A fresh page render brings the view in line with the API revision. */
export function syncRevision(state: GridViewState, revision: number): void {
  state.revision = revision;
  state.stale = false;
}
