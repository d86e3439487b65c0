/** Right-click suggestion menu. Every entry is visible with its score;
 * entries the pipeline would not auto-accept (score at or above the
 * threshold, or a taxonomic hierarchy mismatch) render disabled. */

import type { SuggestionsResponse } from "./api.js";

export interface MenuHandle {
  element: HTMLElement;
  close(): void;
}

export function suggestionEnabled(s: { hierarchy_match: boolean; below_tau: boolean }): boolean {
  return s.hierarchy_match && s.below_tau;
}

function closeMenus(root: Document | HTMLElement = document): void {
  root.querySelectorAll(".suggestion-menu").forEach((m) => m.remove());
}

export function openSuggestionMenu(
  host: HTMLElement,
  resp: SuggestionsResponse,
  onAccept: (label: string) => void,
  position?: { x: number; y: number },
): MenuHandle {
  closeMenus(host.ownerDocument);
  const menu = host.ownerDocument.createElement("div");
  menu.className = "suggestion-menu";
  menu.dataset.detectionId = resp.detection_id;
  if (position) {
    menu.style.left = `${position.x}px`;
    menu.style.top = `${position.y}px`;
  }

  const heading = host.ownerDocument.createElement("header");
  heading.textContent = resp.already_decided
    ? `${resp.detection_id} — decided by ${resp.decided_by}`
    : resp.detection_id;
  menu.appendChild(heading);

  for (const s of resp.suggestions) {
    const entry = host.ownerDocument.createElement("button");
    entry.type = "button";
    entry.className = "suggestion-entry";
    entry.dataset.label = s.label;
    entry.dataset.score = String(s.score);
    const enabled = suggestionEnabled(s);
    if (!enabled) {
      entry.disabled = true;
      entry.classList.add("disabled");
      entry.title = s.hierarchy_match
        ? `score ${s.score} is not below the threshold ${resp.tau}`
        : "taxonomic hierarchy mismatch with the original label";
    }
    const name = host.ownerDocument.createElement("span");
    name.className = "name";
    name.textContent = s.display;
    const score = host.ownerDocument.createElement("span");
    score.className = "score";
    score.textContent = s.score.toFixed(4);
    entry.append(name, score);
    entry.addEventListener("click", () => {
      if (!suggestionEnabled(s)) return; // belt and braces beside `disabled`
      close();
      onAccept(s.label);
    });
    menu.appendChild(entry);
  }

  const close = () => menu.remove();
  host.appendChild(menu);
  return { element: menu, close };
}

/** Shown instead of suggestions when the API reports no clusters (409). */
export function openMenuMessage(host: HTMLElement, message: string): MenuHandle {
  closeMenus(host.ownerDocument);
  const menu = host.ownerDocument.createElement("div");
  menu.className = "suggestion-menu";
  const note = host.ownerDocument.createElement("p");
  note.className = "menu-error";
  note.textContent = message;
  menu.appendChild(note);
  host.appendChild(menu);
  return { element: menu, close: () => menu.remove() };
}
