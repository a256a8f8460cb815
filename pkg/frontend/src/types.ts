export type UsefulnessLabel = "A" | "B" | "C" | "Unlabeled";
export type TaskStatus = "generated" | "labeled" | "described" | "reviewed";

export interface GraphNode {
  id: string;
  channel: string;
  function: string;
  phrase: string;
  role: "trigger" | "action";
}

export interface GraphEdge {
  from: string;
  to: string;
  kind: "flow" | "split";
}

export interface WorkflowGraph {
  nodes: GraphNode[];
  edges: GraphEdge[];
}

export interface TaskView {
  id: string;
  formal: string;
  outline: string;
  graph: WorkflowGraph;
  draft_nl: string;
  nl: string;
  label: UsefulnessLabel;
  status: TaskStatus;
}

export interface ParseResult {
  formal: string;
  actions: string[];
  log_score: number;
  match?: boolean;
}

export function isTaskView(x: unknown): x is TaskView {
  if (typeof x !== "object" || x === null) return false;
  const t = x as Record<string, unknown>;
  return (
    typeof t.id === "string" &&
    typeof t.formal === "string" &&
    typeof t.nl === "string" &&
    typeof t.status === "string" &&
    typeof t.graph === "object" &&
    t.graph !== null &&
    Array.isArray((t.graph as WorkflowGraph).nodes) &&
    Array.isArray((t.graph as WorkflowGraph).edges)
  );
}
