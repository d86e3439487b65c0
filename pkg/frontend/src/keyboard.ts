/** Keyboard navigation: arrows move between cards, Enter accepts the top
 * suggestion, PageUp/PageDown turn pages, Escape closes menus. */

import type { ReviewController } from "./controller.js";

export function attachKeyboard(doc: Document, controller: ReviewController): () => void {
  const handler = (ev: KeyboardEvent) => {
    if (ev.target instanceof HTMLInputElement || ev.target instanceof HTMLTextAreaElement) {
      return;
    }
    switch (ev.key) {
      case "ArrowRight":
        ev.preventDefault();
        controller.moveSelection(1);
        break;
      case "ArrowLeft":
        ev.preventDefault();
        controller.moveSelection(-1);
        break;
      case "ArrowDown":
        ev.preventDefault();
        controller.moveSelectionRow(1);
        break;
      case "ArrowUp":
        ev.preventDefault();
        controller.moveSelectionRow(-1);
        break;
      case "Enter":
        ev.preventDefault();
        void controller.acceptTopSuggestion();
        break;
      case "PageDown":
        ev.preventDefault();
        void controller.setPage(controller.state.page + 1);
        break;
      case "PageUp":
        ev.preventDefault();
        void controller.setPage(controller.state.page - 1);
        break;
      case "Escape":
        doc.querySelectorAll(".suggestion-menu").forEach((m) => m.remove());
        break;
    }
  };
  doc.addEventListener("keydown", handler);
  return () => doc.removeEventListener("keydown", handler);
}
