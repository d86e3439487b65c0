import { ReviewApi } from "./api.js";
import { ReviewController } from "./controller.js";
import { attachKeyboard } from "./keyboard.js";

function mustFind(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id} in index.html`);
  return el;
}

async function boot(): Promise<void> {
  const api = new ReviewApi("");
  const controller = new ReviewController(
    { root: mustFind("app"), grid: mustFind("grid"), status: mustFind("status") },
    api,
  );
  attachKeyboard(document, controller);

  const referenceInput = mustFind("reference") as HTMLInputElement;
  referenceInput.addEventListener("change", () => {
    void controller.setReference(referenceInput.value.trim() || null);
  });
  mustFind("prev").addEventListener("click", () => void controller.setPage(controller.state.page - 1));
  mustFind("next").addEventListener("click", () => void controller.setPage(controller.state.page + 1));
  mustFind("recompute").addEventListener("click", () => void controller.recompute(false));
  mustFind("retrain").addEventListener("click", () => void controller.recompute(true));

  await controller.refresh();
}

void boot();
