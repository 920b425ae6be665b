/** Browser bootstrap: wires the store to the DOM and delegates events. */

import { ApiClient } from "./api.js";
import { render } from "./render.js";
import { Store } from "./store.js";

const REFRESH_MS = 5000;

export function mount(root: HTMLElement, store: Store): void {
  const rerender = () => {
    const active = document.activeElement as HTMLElement | null;
    const focusKey =
      active && active.dataset
        ? `${active.dataset.testid ?? ""}:${active.dataset.id ?? ""}`
        : null;
    render(root, store);
    // a full re-render drops focus; give it back to the field being typed in
    if (focusKey && focusKey !== ":") {
      const [testid, id] = focusKey.split(":");
      const selector = id
        ? `[data-testid="${testid}"][data-id="${id}"]`
        : `[data-testid="${testid}"]`;
      const el = root.querySelector<HTMLElement>(selector);
      if (el) {
        el.focus();
        if (el instanceof HTMLInputElement) {
          const end = el.value.length;
          el.setSelectionRange(end, end);
        }
      }
    }
  };
  store.subscribe(rerender);

  root.addEventListener("click", (ev) => {
    const target = (ev.target as HTMLElement).closest<HTMLElement>("[data-action]");
    if (!target || target.hasAttribute("disabled")) return;
    const id = target.dataset.id ?? "";
    switch (target.dataset.action) {
      case "label":
        void store.labelItem(id);
        break;
      case "dismiss":
        void store.dismissItem(id);
        break;
      case "inspect":
        void store.select(id);
        break;
      case "retrain":
        void store.startRetrain();
        break;
    }
  });

  root.addEventListener("input", (ev) => {
    const target = ev.target as HTMLInputElement;
    if (target.dataset.testid === "label-input") {
      store.setDraft(target.dataset.id ?? "", target.value);
    } else if (target.dataset.testid === "retrain-epochs") {
      store.setEpochsDraft(target.value);
    }
  });

  render(root, store);
}

function boot(): void {
  const root = document.getElementById("app");
  if (!root) return;
  const base = new URLSearchParams(window.location.search).get("api") ?? "";
  const api = new ApiClient(base, (url, init) => window.fetch(url, init));
  const store = new Store(api);
  mount(root, store);
  void store.refresh();
  window.setInterval(() => void store.refresh(), REFRESH_MS);
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  boot();
}
