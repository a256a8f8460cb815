import { ApiClient } from "./api.js";
import { renderSession, Widgets } from "./render.js";
import { AnnotatorSession } from "./state.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function boot(): void {
  const widgets: Widgets = {
    banner: el("banner"),
    taskMeta: el("task-meta"),
    graph: el("graph"),
    formal: el("formal"),
    outlineText: el("outline"),
    nlInput: el<HTMLTextAreaElement>("nl-input"),
    preview: el("preview"),
    labelButtons: {
      A: el<HTMLButtonElement>("label-a"),
      B: el<HTMLButtonElement>("label-b"),
      C: el<HTMLButtonElement>("label-c"),
    },
    actionButtons: [
      el<HTMLButtonElement>("save-description"),
      el<HTMLButtonElement>("submit-review"),
      el<HTMLButtonElement>("preview-btn"),
      el<HTMLButtonElement>("next-task"),
    ],
  };

  const session = new AnnotatorSession(new ApiClient(""), (view) =>
    renderSession(widgets, view),
  );

  widgets.labelButtons.A.onclick = () => void session.submitLabel("A");
  widgets.labelButtons.B.onclick = () => void session.submitLabel("B");
  widgets.labelButtons.C.onclick = () => void session.submitLabel("C");
  el<HTMLButtonElement>("save-description").onclick = () =>
    void session.submitDescription(widgets.nlInput.value);
  el<HTMLButtonElement>("submit-review").onclick = () =>
    void session.submitReview(widgets.nlInput.value);
  el<HTMLButtonElement>("preview-btn").onclick = () =>
    void session.requestPreview(widgets.nlInput.value);
  el<HTMLButtonElement>("next-task").onclick = () => void session.loadNext();

  const previewToggle = el<HTMLInputElement>("preview-toggle");
  previewToggle.onchange = () => {
    el("preview-panel").style.display = previewToggle.checked ? "block" : "none";
  };

  // A/B/C keyboard shortcuts keep labeling throughput high; ignored while
  // the description textarea has focus
  document.addEventListener("keydown", (ev) => {
    if (document.activeElement === widgets.nlInput) return;
    const key = ev.key.toUpperCase();
    if (key === "A" || key === "B" || key === "C") {
      void session.submitLabel(key);
    } else if (key === "N") {
      void session.loadNext();
    }
  });

  void session.loadNext();
}

boot();
