import type { TaskView, WorkflowGraph } from "../src/types.js";

/** The running-example workflow: a missed call is transcribed, and the text
 * is both texted back and archived (one two-way fan-out under the
 * transcription step). */
export const W0_GRAPH: WorkflowGraph = {
  nodes: [
    { id: "n0", channel: "Android", function: "Any_Missed_Phone",
      phrase: "any missed phone call occurs on Android", role: "trigger" },
    { id: "n1", channel: "Watson_API", function: "Voice_to_Text",
      phrase: "convert the voice message to text with Watson API", role: "action" },
    { id: "n2", channel: "SMS", function: "Send_Text_to_Me",
      phrase: "send the text to me by SMS", role: "action" },
    { id: "n3", channel: "Google_Drive", function: "Archive_Text_in_Spread_Sheet",
      phrase: "archive the text in a Google Drive spreadsheet", role: "action" },
  ],
  edges: [
    { from: "n0", to: "n1", kind: "flow" },
    { from: "n1", to: "n2", kind: "split" },
    { from: "n1", to: "n3", kind: "split" },
  ],
};

export const W0_FORMAL =
  "Sequence(Android.Any_Missed_Phone, Parallel_Split(Watson_API.Voice_to_Text, " +
  "SMS.Send_Text_to_Me, Google_Drive.Archive_Text_in_Spread_Sheet))";

export function w0Task(overrides: Partial<TaskView> = {}): TaskView {
  return {
    id: "wf-7-00000",
    formal: W0_FORMAL,
    outline: "Workflow\n  pattern: Sequence",
    graph: W0_GRAPH,
    draft_nl: "If any missed phone call occurs on Android, then ...",
    nl: "If any missed phone call occurs on Android, then ...",
    label: "Unlabeled",
    status: "generated",
    ...overrides,
  };
}

type Responder = (url: string, init?: RequestInit) => { status: number; body: unknown };

/** Minimal fetch stub: route handlers keyed by "METHOD path". */
export function fakeFetch(routes: Record<string, Responder>) {
  const calls: { url: string; init?: RequestInit }[] = [];
  const fn = async (url: string, init?: RequestInit): Promise<Response> => {
    calls.push({ url, init });
    const key = `${init?.method ?? "GET"} ${url}`;
    const handler = routes[key];
    if (!handler) {
      return new Response(
        JSON.stringify({ error: "unknown_endpoint", message: key }),
        { status: 404, headers: { "Content-Type": "application/json" } },
      );
    }
    const { status, body } = handler(url, init);
    return new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  };
  return { fn, calls };
}
