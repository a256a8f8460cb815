import type { WorkflowGraph } from "./types.js";

export interface PlacedNode {
  id: string;
  x: number;
  y: number;
  label: string;
  phrase: string;
  role: "trigger" | "action";
}

export interface PlacedEdge {
  x1: number;
  y1: number;
  x2: number;
  y2: number;
  kind: "flow" | "split";
}

export interface Layout {
  nodes: PlacedNode[];
  edges: PlacedEdge[];
  width: number;
  height: number;
}

export interface LayoutOptions {
  columnGap: number;
  rowGap: number;
  margin: number;
}

const DEFAULTS: LayoutOptions = { columnGap: 190, rowGap: 90, margin: 60 };

/**
 * Layered tree layout: the trigger sits at depth zero, every edge pushes its
 * target one level down, and siblings spread horizontally in edge order (so
 * a split's branches render side by side).
 */
export function layoutGraph(graph: WorkflowGraph, opts: Partial<LayoutOptions> = {}): Layout {
  const { columnGap, rowGap, margin } = { ...DEFAULTS, ...opts };
  const incoming = new Map<string, number>();
  for (const n of graph.nodes) incoming.set(n.id, 0);
  for (const e of graph.edges) incoming.set(e.to, (incoming.get(e.to) ?? 0) + 1);

  const roots = graph.nodes.filter((n) => (incoming.get(n.id) ?? 0) === 0);
  const depth = new Map<string, number>();
  const queue = roots.map((r) => r.id);
  for (const r of roots) depth.set(r.id, 0);
  while (queue.length) {
    const cur = queue.shift()!;
    for (const e of graph.edges) {
      if (e.from === cur && !depth.has(e.to)) {
        depth.set(e.to, (depth.get(cur) ?? 0) + 1);
        queue.push(e.to);
      }
    }
  }
  // nodes unreachable from a root (defensive): park them at the bottom
  const maxKnown = Math.max(0, ...depth.values());
  for (const n of graph.nodes) {
    if (!depth.has(n.id)) depth.set(n.id, maxKnown + 1);
  }

  const byLevel = new Map<number, string[]>();
  for (const n of graph.nodes) {
    const d = depth.get(n.id)!;
    if (!byLevel.has(d)) byLevel.set(d, []);
    byLevel.get(d)!.push(n.id);
  }

  const levels = [...byLevel.keys()].sort((a, b) => a - b);
  const widest = Math.max(1, ...levels.map((l) => byLevel.get(l)!.length));
  const width = 2 * margin + (widest - 1) * columnGap;
  const height = 2 * margin + (levels.length - 1) * rowGap;

  const pos = new Map<string, { x: number; y: number }>();
  for (const level of levels) {
    const ids = byLevel.get(level)!;
    const rowWidth = (ids.length - 1) * columnGap;
    ids.forEach((id, i) => {
      pos.set(id, {
        x: margin + (width - 2 * margin - rowWidth) / 2 + i * columnGap,
        y: margin + level * rowGap,
      });
    });
  }

  const nodes: PlacedNode[] = graph.nodes.map((n) => ({
    id: n.id,
    x: pos.get(n.id)!.x,
    y: pos.get(n.id)!.y,
    label: `${n.channel}.${n.function}`,
    phrase: n.phrase,
    role: n.role,
  }));
  const edges: PlacedEdge[] = graph.edges.map((e) => ({
    x1: pos.get(e.from)!.x,
    y1: pos.get(e.from)!.y,
    x2: pos.get(e.to)!.x,
    y2: pos.get(e.to)!.y,
    kind: e.kind,
  }));
  return { nodes, edges, width, height };
}

/** Number of distinct fan-out sources (nodes with two or more split edges). */
export function fanOutCount(graph: WorkflowGraph): number {
  const splitsBySource = new Map<string, number>();
  for (const e of graph.edges) {
    if (e.kind === "split") {
      splitsBySource.set(e.from, (splitsBySource.get(e.from) ?? 0) + 1);
    }
  }
  return [...splitsBySource.values()].filter((n) => n >= 2).length;
}
