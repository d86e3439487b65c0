import { beforeEach, describe, expect, it } from "vitest";

import { ReviewApi } from "../src/api.js";
import { renderGrid } from "../src/grid.js";
import { initialState } from "../src/state.js";
import { card, mountDom } from "./helpers.js";

const api = new ReviewApi("");

function pageOf(cards: ReturnType<typeof card>[], revision = 0) {
  return {
    revision,
    total: cards.length,
    page: 1,
    page_size: 50,
    reference: null,
    items: cards,
  };
}

describe("grid rendering", () => {
  let grid: HTMLElement;

  beforeEach(() => {
    grid = mountDom().grid;
  });

  it("renders cards in exactly the order the API returned", () => {
    const cards = [card("c"), card("a"), card("b")];
    renderGrid(grid, pageOf(cards), initialState(), api);
    const ids = [...grid.querySelectorAll<HTMLElement>(".card")].map((el) => el.dataset.id);
    expect(ids).toEqual(["c", "a", "b"]);
  });

  it("shows an empty-state message for an empty page", () => {
    renderGrid(grid, pageOf([]), initialState(), api);
    expect(grid.querySelector(".empty-state")?.textContent).toMatch(/no detections/i);
    expect(grid.querySelectorAll(".card")).toHaveLength(0);
  });

  it("renders distinct badges for rollups and anchors", () => {
    const cards = [
      card("anchor", { decided_by: "stage1" }),
      card("rolled", { decided_by: "rollup_animal" }),
    ];
    renderGrid(grid, pageOf(cards), initialState(), api);
    const anchorBadge = grid.querySelector('[data-id="anchor"] .badge');
    const rollupBadge = grid.querySelector('[data-id="rolled"] .badge');
    expect(anchorBadge?.classList.contains("badge-stage1")).toBe(true);
    expect(rollupBadge?.classList.contains("badge-rollup_animal")).toBe(true);
    expect(anchorBadge?.className).not.toEqual(rollupBadge?.className);
  });

  it("shows API-provided distances verbatim in the data attribute", () => {
    const cards = [card("a", { distance: 0.12345678 })];
    renderGrid(grid, pageOf(cards), initialState(), api);
    const distance = grid.querySelector<HTMLElement>('[data-id="a"] .distance');
    expect(distance?.dataset.distance).toBe(String(0.12345678));
  });

  it("omits the distance element for input-order listings", () => {
    renderGrid(grid, pageOf([card("a")]), initialState(), api);
    expect(grid.querySelector(".distance")).toBeNull();
  });

  it("marks the selected card", () => {
    const state = initialState();
    state.selected = "b";
    renderGrid(grid, pageOf([card("a"), card("b")]), state, api);
    expect(grid.querySelector('[data-id="b"]')?.classList.contains("selected")).toBe(true);
    expect(grid.querySelector('[data-id="a"]')?.classList.contains("selected")).toBe(false);
  });
});
