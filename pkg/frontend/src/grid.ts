/** Crop grid rendering. Cards appear exactly in the order the API returned
 * them; sorting is the server's job. */

import type { DetectionCard, DetectionsPage, ReviewApi } from "./api.js";
import type { GridViewState } from "./state.js";

export const GRID_COLUMNS = 4;

function cardElement(det: DetectionCard, api: ReviewApi, state: GridViewState): HTMLElement {
  const card = document.createElement("article");
  card.className = "card";
  card.dataset.id = det.id;
  card.tabIndex = -1;
  if (state.selected === det.id) card.classList.add("selected");

  const thumb = document.createElement("div");
  thumb.className = "thumb";
  if (det.image_available) {
    const img = document.createElement("img");
    img.src = api.imageUrl(det.image_id);
    img.alt = det.display;
    img.loading = "lazy";
    thumb.appendChild(img);
  } else {
    thumb.classList.add("placeholder");
    thumb.textContent = det.image_id || det.id;
  }
  card.appendChild(thumb);

  const label = document.createElement("div");
  label.className = "label";
  label.textContent = det.display;
  label.title = det.label;
  card.appendChild(label);

  const meta = document.createElement("div");
  meta.className = "meta";

  const badge = document.createElement("span");
  badge.className = `badge badge-${det.decided_by}`;
  badge.textContent = det.decided_by.replace("_", " ");
  meta.appendChild(badge);

  if (det.distance !== null) {
    const distance = document.createElement("span");
    distance.className = "distance";
    distance.dataset.distance = String(det.distance);
    distance.textContent = det.distance.toFixed(4);
    meta.appendChild(distance);
  }
  card.appendChild(meta);
  return card;
}

export function renderGrid(
  container: HTMLElement,
  page: DetectionsPage,
  state: GridViewState,
  api: ReviewApi,
): void {
  container.replaceChildren();
  container.classList.toggle("stale", state.stale);

  if (page.items.length === 0) {
    const empty = document.createElement("div");
    empty.className = "empty-state";
    empty.textContent = "No detections on this page.";
    container.appendChild(empty);
    return;
  }
  for (const det of page.items) {
    container.appendChild(cardElement(det, api, state));
  }
}

export function renderStatus(element: HTMLElement, page: DetectionsPage, state: GridViewState): void {
  const where = state.reference ? `sorted by distance from ${state.reference}` : "input order";
  const pages = Math.max(1, Math.ceil(page.total / page.page_size));
  element.textContent =
    `revision ${page.revision} · page ${page.page}/${pages} · ${page.total} detections · ${where}` +
    (state.stale ? " · STALE" : "");
}
