"""HTTP annotation service for the human labeling/description loop.

Single process, single dataset file. Mutations are serialized under one lock
and appended to a sidecar journal (fsync before acknowledgment); on startup
the journal is folded back into the dataset file, so every acknowledged
mutation survives a restart. An advisory file lock guards against two
services sharing one dataset.
"""

from __future__ import annotations

import fcntl
import json
import mimetypes
import os
import re
import threading
from dataclasses import replace
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from . import dataset as ds
from .catalog import Catalog, catalog_to_dict
from .engine import Node, Wast, oracle_actions, outline
from .errors import TapflowError
from .genflow import GenConfig, UsefulnessLabel
from .grammar import builtin_wpg
from .nlgen import fuse_descriptions
from .parsing import Scorer, UniformScorer, beam_search, tokenize
from .surface import to_formal_expression
from .errors import ServiceLockError

_STATUS_AFTER = {"label": ds.Status.LABELED, "describe": ds.Status.DESCRIBED,
                 "review": ds.Status.REVIEWED}
# an operation is allowed when the record's status rank is within this window
_MIN_RANK = {"label": 0, "describe": 1, "review": 2}
_MAX_RANK = {"label": 1, "describe": 2, "review": 3}


def function_graph(w: Wast, catalog: Catalog) -> dict:
    """Function-level node/edge view of a workflow for UI rendering."""
    nodes: list[dict] = []
    edges: list[dict] = []
    ids: dict[int, str] = {}

    def add_node(call: Node, role: str) -> str:
        node_id = f"n{len(nodes)}"
        ids[id(call)] = node_id
        m = call.macro
        phrase = ""
        if m is not None and catalog.has_function(m.qualified):
            phrase = catalog.function(m.qualified).phrase
        nodes.append(
            {
                "id": node_id,
                "channel": m.channel if m else "?",
                "function": m.function if m else "?",
                "phrase": phrase,
                "role": role,
            }
        )
        return node_id

    def walk(pattern: Node, source_id: str | None):
        split = pattern.ctor == "Parallel_Split"
        for call in pattern.action_calls:
            nid = add_node(call, "action")
            if source_id is not None:
                edges.append(
                    {"from": source_id, "to": nid, "kind": "split" if split else "flow"}
                )
            if call.next_pattern is not None:
                walk(call.next_pattern, nid)

    root = w.pattern
    tc = root.trigger_call
    trigger_id = add_node(tc, "trigger") if tc is not None else None
    walk(root, trigger_id)
    return {"nodes": nodes, "edges": edges}


class AnnotationService:
    def __init__(
        self,
        dataset_path: str | Path,
        catalog: Catalog,
        scorer: Scorer | None = None,
        ui_dir: str | Path | None = None,
        beam_width: int = 5,
    ):
        self.dataset_path = Path(dataset_path)
        self.journal_path = self.dataset_path.with_suffix(
            self.dataset_path.suffix + ".journal"
        )
        self.lock_path = self.dataset_path.with_suffix(self.dataset_path.suffix + ".lock")
        self.catalog = catalog
        self.grammar = builtin_wpg()
        self.scorer = scorer or UniformScorer()
        self.beam_width = beam_width
        self.ui_dir = Path(ui_dir).resolve() if ui_dir else None
        self._write_lock = threading.Lock()
        self._server: ThreadingHTTPServer | None = None

        self._lock_file = open(self.lock_path, "w")
        try:
            fcntl.flock(self._lock_file, fcntl.LOCK_EX | fcntl.LOCK_NB)
        except OSError as exc:
            self._lock_file.close()
            raise ServiceLockError(
                f"dataset {self.dataset_path} is locked by another service"
            ) from exc

        self._examples: dict[str, ds.Example] = {}
        self._order: list[str] = []
        self._quarantined: set[str] = set()
        self._load()
        self._journal = open(self.journal_path, "a", encoding="utf-8")

    # -- persistence -------------------------------------------------------

    def _load(self):
        examples = (
            ds.load_records(self.dataset_path) if self.dataset_path.exists() else []
        )
        for e in examples:
            self._examples[e.id] = e
            self._order.append(e.id)
        if self.journal_path.exists():
            with open(self.journal_path, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        self._apply_event(json.loads(line), replaying=True)
            self._compact()
        for e in list(self._examples.values()):
            try:
                ds.verify_example(e, self.catalog, self.grammar)
            except TapflowError:
                self._quarantined.add(e.id)

    def _compact(self):
        tmp = self.dataset_path.with_suffix(self.dataset_path.suffix + ".tmp")
        ds.emit_records([self._examples[i] for i in self._order], tmp)
        with open(tmp, "rb") as fh:
            os.fsync(fh.fileno())
        os.replace(tmp, self.dataset_path)
        with open(self.journal_path, "w", encoding="utf-8"):
            pass

    def _append_event(self, event: dict):
        self._journal.write(json.dumps(event, ensure_ascii=False) + "\n")
        self._journal.flush()
        os.fsync(self._journal.fileno())

    def _apply_event(self, event: dict, replaying: bool = False):
        op = event["op"]
        if op == "add":
            e = ds.Example.from_dict(event["record"])
            if e.id not in self._examples:
                self._examples[e.id] = e
                self._order.append(e.id)
            return
        e = self._examples.get(event["id"])
        if e is None:
            if replaying:
                return
            raise TapflowError(f"unknown task {event['id']}")
        rank = e.status.rank
        if not (_MIN_RANK[op] <= rank <= _MAX_RANK[op]):
            if replaying:
                return
            raise TapflowError(
                f"cannot {op} a task with status {e.status.value}"
            )
        if op == "label":
            e = replace(
                e,
                label=UsefulnessLabel(event["label"]),
                status=max(e.status, _STATUS_AFTER[op], key=lambda s: s.rank),
            )
        elif op == "describe":
            e = replace(
                e, nl=event["nl"],
                status=max(e.status, _STATUS_AFTER[op], key=lambda s: s.rank),
            )
        elif op == "review":
            e = replace(e, nl=event["nl"], status=ds.Status.REVIEWED)
        else:
            raise TapflowError(f"unknown op {op}")
        self._examples[e.id] = e

    def mutate(self, event: dict) -> ds.Example:
        with self._write_lock:
            self._apply_event(event)
            self._append_event(event)
            return self._examples[event.get("id") or event["record"]["id"]]

    def close(self):
        if self._server is not None:
            self._server.shutdown()
            self._server = None
        with self._write_lock:
            self._journal.close()
            self._compact()
        fcntl.flock(self._lock_file, fcntl.LOCK_UN)
        self._lock_file.close()

    # -- task views ----------------------------------------------------------

    def task_payload(self, e: ds.Example) -> dict:
        w = e.replay_wast(self.catalog, self.grammar)
        return {
            "id": e.id,
            "formal": e.formal,
            "outline": outline(w),
            "graph": function_graph(w, self.catalog),
            "draft_nl": fuse_descriptions(w, self.catalog),
            "nl": e.nl,
            "label": e.label.value,
            "status": e.status.value,
        }

    def next_task(self) -> ds.Example | None:
        pending = [
            self._examples[i]
            for i in sorted(self._order)
            if i not in self._quarantined
            and self._examples[i].status is not ds.Status.REVIEWED
        ]
        return pending[0] if pending else None

    def parse_text(self, text: str, task_id: str | None = None) -> dict:
        results = beam_search(
            tokenize(text), self.grammar, self.catalog, self.scorer, self.beam_width
        )
        w, score = results[0]
        payload = {
            "formal": to_formal_expression(w),
            "actions": [a.text for a in oracle_actions(w)],
            "log_score": score,
        }
        if task_id is not None:
            e = self._examples.get(task_id)
            if e is not None:
                payload["match"] = payload["formal"] == e.formal
        return payload

    def generate(self, body: dict) -> list[str]:
        from .cli import make_records

        count = int(body.pop("count", 1))
        config = GenConfig.from_dict(body)
        records = make_records(
            self.catalog, count, config, id_prefix="gen", start_index=len(self._order)
        )
        for r in records:
            self.mutate({"op": "add", "record": json.loads(r.to_json())})
        return [r.id for r in records]

    # -- http ------------------------------------------------------------------

    def make_server(self, port: int = 0) -> ThreadingHTTPServer:
        service = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, fmt, *args):  # quiet
                pass

            def _send(self, code: int, payload: dict):
                body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
                self.send_response(code)
                self.send_header("Content-Type", "application/json; charset=utf-8")
                self.send_header("Content-Length", str(len(body)))
                self.send_header("Access-Control-Allow-Origin", "*")
                self.end_headers()
                self.wfile.write(body)

            def _error(self, code: int, error: str, message: str):
                self._send(code, {"error": error, "message": message})

            def _body(self) -> dict:
                length = int(self.headers.get("Content-Length") or 0)
                if not length:
                    return {}
                return json.loads(self.rfile.read(length).decode("utf-8"))

            def do_GET(self):
                try:
                    if self.path == "/api/tasks/next":
                        task = service.next_task()
                        if task is None:
                            self._error(404, "no_pending_tasks", "all tasks reviewed")
                        else:
                            self._send(200, service.task_payload(task))
                    elif m := re.fullmatch(r"/api/tasks/([\w.-]+)", self.path):
                        e = service._examples.get(m.group(1))
                        if e is None:
                            self._error(404, "unknown_task", m.group(1))
                        else:
                            self._send(200, service.task_payload(e))
                    elif self.path == "/api/catalog":
                        self._send(200, catalog_to_dict(service.catalog))
                    else:
                        self._static()
                except Exception as exc:  # noqa: BLE001 - surface as 500
                    self._error(500, "internal", str(exc))

            def do_POST(self):
                try:
                    body = self._body()
                    if m := re.fullmatch(r"/api/tasks/([\w.-]+)/(label|description|review)",
                                         self.path):
                        task_id, op = m.group(1), m.group(2)
                        if task_id not in service._examples:
                            self._error(404, "unknown_task", task_id)
                            return
                        try:
                            if op == "label":
                                label = body.get("label")
                                if label not in ("A", "B", "C"):
                                    self._error(400, "bad_label",
                                                "label must be A, B, or C")
                                    return
                                e = service.mutate(
                                    {"op": "label", "id": task_id, "label": label}
                                )
                            else:
                                nl = (body.get("nl") or "").strip()
                                if not nl:
                                    self._error(400, "empty_description",
                                                "nl must be non-empty")
                                    return
                                event_op = "describe" if op == "description" else "review"
                                e = service.mutate(
                                    {"op": event_op, "id": task_id, "nl": nl}
                                )
                        except TapflowError as exc:
                            self._error(400, "illegal_transition", str(exc))
                            return
                        self._send(200, service.task_payload(e))
                    elif self.path == "/api/parse":
                        text = (body.get("text") or "").strip()
                        if not text:
                            self._error(400, "empty_text", "text must be non-empty")
                            return
                        try:
                            self._send(200, service.parse_text(text, body.get("task_id")))
                        except TapflowError as exc:
                            self._error(422, "parse_failed", str(exc))
                    elif self.path == "/api/generate":
                        try:
                            ids = service.generate(dict(body))
                        except (TapflowError, KeyError, ValueError) as exc:
                            self._error(400, "bad_config", str(exc))
                            return
                        self._send(200, {"created": ids})
                    else:
                        self._error(404, "unknown_endpoint", self.path)
                except Exception as exc:  # noqa: BLE001
                    self._error(500, "internal", str(exc))

            def _static(self):
                if service.ui_dir is None:
                    self._error(404, "no_ui", "service started without --ui-dir")
                    return
                rel = self.path.lstrip("/") or "index.html"
                target = (service.ui_dir / rel).resolve()
                if not str(target).startswith(str(service.ui_dir)) or not target.is_file():
                    self._error(404, "not_found", self.path)
                    return
                ctype = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
                data = target.read_bytes()
                self.send_response(200)
                self.send_header("Content-Type", ctype)
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

        server = ThreadingHTTPServer(("127.0.0.1", port), Handler)
        self._server = server
        return server

    def serve_forever(self, port: int):
        server = self.make_server(port)
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
