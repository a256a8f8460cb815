import { fanOutCount, layoutGraph } from "./layout.js";
import type { SessionView } from "./state.js";
import type { TaskView } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

function svgEl<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string>,
): SVGElementTagNameMap[K] {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) el.setAttribute(k, v);
  return el;
}

/** Draw the function graph: trigger at the root, chained actions below,
 * split branches side by side; hovering a node shows channel.function and
 * its phrase. Falls back to the formal expression text on any failure. */
export function renderWorkflow(container: HTMLElement, task: TaskView): void {
  container.textContent = "";
  try {
    const layout = layoutGraph(task.graph);
    const svg = svgEl("svg", {
      viewBox: `0 0 ${layout.width} ${layout.height}`,
      width: String(layout.width),
      height: String(layout.height),
      class: "workflow-svg",
    });
    for (const e of layout.edges) {
      svg.appendChild(
        svgEl("line", {
          x1: String(e.x1),
          y1: String(e.y1),
          x2: String(e.x2),
          y2: String(e.y2),
          class: e.kind === "split" ? "edge split" : "edge",
        }),
      );
    }
    for (const n of layout.nodes) {
      const group = svgEl("g", { class: `node ${n.role}` });
      const w = Math.max(120, n.label.length * 7.2 + 16);
      group.appendChild(
        svgEl("rect", {
          x: String(n.x - w / 2),
          y: String(n.y - 18),
          width: String(w),
          height: "36",
          rx: "8",
        }),
      );
      const text = svgEl("text", { x: String(n.x), y: String(n.y + 4) });
      text.textContent = n.label;
      group.appendChild(text);
      const tip = svgEl("title", {});
      tip.textContent = `${n.label}\n${n.phrase}`;
      group.appendChild(tip);
      svg.appendChild(group);
    }
    container.appendChild(svg);
    const caption = document.createElement("div");
    caption.className = "graph-caption";
    caption.textContent =
      `${layout.nodes.length} functions, ${fanOutCount(task.graph)} parallel fan-out` +
      (fanOutCount(task.graph) === 1 ? "" : "s");
    container.appendChild(caption);
  } catch {
    const fallback = document.createElement("pre");
    fallback.className = "graph-fallback";
    fallback.textContent = task.formal;
    container.appendChild(fallback);
  }
}

export interface Widgets {
  banner: HTMLElement;
  taskMeta: HTMLElement;
  graph: HTMLElement;
  formal: HTMLElement;
  outlineText: HTMLElement;
  nlInput: HTMLTextAreaElement;
  preview: HTMLElement;
  labelButtons: Record<"A" | "B" | "C", HTMLButtonElement>;
  actionButtons: HTMLButtonElement[];
}

const LABEL_MEANINGS: Record<string, string> = {
  A: "A: convenient and frequently used",
  B: "B: possible to use",
  C: "C: inconvenient and not used",
};

export function renderSession(w: Widgets, view: SessionView): void {
  w.banner.textContent = view.error ?? "";
  w.banner.style.display = view.error ? "block" : "none";

  for (const b of [...Object.values(w.labelButtons), ...w.actionButtons]) {
    b.disabled = view.busy || (!view.task && !view.done);
  }

  if (view.done) {
    w.taskMeta.textContent = "All tasks reviewed.";
    w.graph.textContent = "";
    w.formal.textContent = "";
    w.outlineText.textContent = "";
    w.preview.textContent = "";
    return;
  }
  const task = view.task;
  if (!task) {
    w.taskMeta.textContent = view.busy ? "loading..." : "no task loaded";
    return;
  }

  w.taskMeta.textContent = `${task.id} - status: ${task.status}` +
    (task.label !== "Unlabeled" ? ` - ${LABEL_MEANINGS[task.label] ?? task.label}` : "");
  renderWorkflow(w.graph, task);
  // byte-exact server text, never re-derived client side
  w.formal.textContent = task.formal;
  w.outlineText.textContent = task.outline;
  if (document.activeElement !== w.nlInput) {
    w.nlInput.value = task.nl || task.draft_nl;
  }

  for (const [name, btn] of Object.entries(w.labelButtons)) {
    btn.classList.toggle("selected", task.label === name);
    btn.title = LABEL_MEANINGS[name];
  }

  if (view.previewPending) {
    w.preview.textContent = "parsing...";
    w.preview.className = "preview pending";
  } else if (view.preview) {
    const match = view.preview.match;
    w.preview.textContent =
      `${view.preview.formal}\n` +
      (match === undefined ? "" : match ? "MATCHES gold workflow" : "DIFFERS from gold workflow");
    w.preview.className = `preview ${match ? "match" : "mismatch"}`;
  } else {
    w.preview.textContent = "";
    w.preview.className = "preview";
  }
}
