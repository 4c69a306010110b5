"""Scripted chat-completions endpoint for offline runs and tests.

The server cheats: it loads a normalized trajectory file, indexes every
context prefix, and answers each request with a deterministic variant of the
true next assistant message (exact, perturbed arguments, wrong call count, or
a text-only reply) keyed on the model id and the context hash. Models listed
as perfect always answer exactly. Identical requests always get identical
responses, so cached runs replay byte-for-byte.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .messages import ToolCallParseError, extract_tool_calls
from .util import read_jsonl, stable_hash

VARIANTS = ("exact", "perturb", "wrong_count", "text_only")


def _perturb_value(value):
    if isinstance(value, bool):
        return not value
    if isinstance(value, (int, float)):
        return value + 1
    if isinstance(value, str):
        return value + "_alt"
    if isinstance(value, list):
        return value + [1]
    if isinstance(value, dict):
        return {**value, "extra": 1}
    return "changed"


def _render(calls, note: str) -> str:
    think = f"<think>\n{note}\n</think>"
    blocks = [
        f"<tool_call>\n{json.dumps({'name': n, 'arguments': a}, ensure_ascii=False)}\n</tool_call>"
        for n, a in calls
    ]
    return "\n".join([think] + blocks)


class ScriptedResponder:
    """Pure request -> response logic; the HTTP layer is just plumbing."""

    def __init__(self, trajectories_path: Path | str, perfect_models: tuple = ("mock-exact",)):
        self.trajectories_path = Path(trajectories_path)
        self.perfect_models = tuple(perfect_models)
        self._index: dict | None = None
        self._lock = threading.Lock()

    def _load(self) -> dict:
        with self._lock:
            if self._index is None:
                index = {}
                for row in read_jsonl(self.trajectories_path):
                    msgs = row["messages"]
                    for pos, msg in enumerate(msgs):
                        if msg["role"] != "assistant":
                            continue
                        index[stable_hash(msgs[:pos])] = msg["content"]
                self._index = index
            return self._index

    def _variant_for(self, model: str, key: str) -> str:
        if model in self.perfect_models:
            return "exact"
        return VARIANTS[int(stable_hash(model, key)[:8], 16) % len(VARIANTS)]

    def respond(self, model: str, messages: list[dict]) -> str:
        key = stable_hash(messages)
        gt = self._load().get(key)
        if gt is None:
            return "I do not have enough information to answer that."
        variant = self._variant_for(model, key)
        if variant == "exact":
            return gt
        try:
            calls = [(c.name, dict(c.arguments)) for c in extract_tool_calls(gt)]
        except ToolCallParseError:
            calls = []
        if variant == "text_only":
            return "I'm sorry, I can't run tools right now, but here is my best guess."
        if not calls:
            # text-only ground truth: emit a spurious call so scores vary
            return _render([("unrequested_tool", {})], "The user probably wants one more lookup.")
        if variant == "perturb":
            name, args = calls[0]
            if args:
                k = sorted(args)[0]
                args[k] = _perturb_value(args[k])
            else:
                args["extra"] = 1
            calls[0] = (name, args)
            return _render(calls, "Double-checking the parameters before calling.")
        # wrong_count
        if len(calls) >= 2:
            calls = calls[:-1]
        else:
            name, args = calls[0]
            calls.append((name, {**args, "extra": True}))
        return _render(calls, "Splitting the work into a different number of calls.")


class _Handler(BaseHTTPRequestHandler):
    responder: ScriptedResponder = None  # set by make_server

    def log_message(self, *args):  # keep test output quiet
        pass

    def do_POST(self):
        if not self.path.endswith("/chat/completions"):
            self.send_error(404)
            return
        length = int(self.headers.get("Content-Length", 0))
        try:
            body = json.loads(self.rfile.read(length))
            content = self.responder.respond(body["model"], body["messages"])
        except Exception as e:
            self.send_error(500, str(e))
            return
        payload = json.dumps(
            {
                "id": "mock",
                "object": "chat.completion",
                "model": body["model"],
                "choices": [
                    {"index": 0, "message": {"role": "assistant", "content": content}, "finish_reason": "stop"}
                ],
                "usage": {"prompt_tokens": 0, "completion_tokens": len(content.split())},
            },
            ensure_ascii=False,
        ).encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)


def make_server(trajectories_path, host: str = "127.0.0.1", port: int = 0,
                perfect_models: tuple = ("mock-exact",)) -> ThreadingHTTPServer:
    handler = type("BoundHandler", (_Handler,), {"responder": ScriptedResponder(trajectories_path, perfect_models)})
    return ThreadingHTTPServer((host, port), handler)


def start_in_thread(server: ThreadingHTTPServer) -> threading.Thread:
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return thread
