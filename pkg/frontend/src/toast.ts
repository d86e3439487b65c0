/** Tiny toast + connection banner helpers. */

export function showToast(host: HTMLElement, message: string, kind: "info" | "error" = "info"): void {
  const toast = host.ownerDocument.createElement("div");
  toast.className = `toast toast-${kind}`;
  toast.textContent = message;
  host.appendChild(toast);
  setTimeout(() => toast.remove(), 4000);
}

export function setConnectionBanner(host: HTMLElement, visible: boolean, message = "Cannot reach the review API"): void {
  let banner = host.querySelector<HTMLElement>(".connection-banner");
  if (visible) {
    if (!banner) {
      banner = host.ownerDocument.createElement("div");
      banner.className = "connection-banner";
      host.prepend(banner);
    }
    banner.textContent = message;
  } else {
    banner?.remove();
  }
}
