"""HTTP labeling service for interactive verification sessions.

One solver runs on a worker thread, blocking on an interactive label source;
HTTP handlers enqueue answers and read state snapshots. The JSON API:

    GET  /api/tasks/next?limit=N  pending label requests, oldest first
    POST /api/labels              {"pair_id": ..., "label": "match"|"unmatch"}
    GET  /api/progress            {"asked", "total_estimate", "phase", "current_bounds", "done"}
    GET  /api/solution            the finished solution, or 404 with phase info

Anything else is served statically from the configured directory (the
labeler frontend bundle). Answers are journaled, so killing the process and
restarting with the same journal replays the session deterministically.
"""

from __future__ import annotations

import json
import mimetypes
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .model import Solution, Workload
from .oracle import InteractiveSource, OracleAbort
from .solvers import SOLVERS, SolverConfig

DEFAULT_BATCH_SIZE = 10


class LabelingService:
    """Couples one solver run with the request queue the API serves."""

    def __init__(
        self,
        workload: Workload,
        solver: str,
        config: SolverConfig,
        journal_path: str | None = None,
        static_dir: str | None = None,
    ):
        if solver not in SOLVERS:
            raise ValueError(f"unknown solver {solver!r}; choose from {sorted(SOLVERS)}")
        self.workload = workload
        self.solver = solver
        self.config = config
        self.static_dir = Path(static_dir) if static_dir else None
        self.source = InteractiveSource(journal_path=journal_path, display_fn=self._display)
        self.solution: Solution | None = None
        self.failure: str | None = None
        self._thread: threading.Thread | None = None
        self._done = threading.Event()

    def _display(self, pair) -> dict[str, str]:
        return {"pair_id": pair.id, "metric": f"{pair.metric:.4f}"}

    # -- lifecycle ----------------------------------------------------------

    def start(self) -> None:
        if self._thread is not None:
            raise RuntimeError("service already started")
        self._thread = threading.Thread(target=self._run_solver, daemon=True)
        self._thread.start()

    def _run_solver(self) -> None:
        try:
            self.solution = SOLVERS[self.solver](self.workload, self.config, self.source)
        except OracleAbort:
            self.failure = "aborted"
        except Exception as exc:
            self.failure = f"{type(exc).__name__}: {exc}"
        finally:
            self._done.set()

    @property
    def done(self) -> bool:
        return self._done.is_set()

    def wait(self, timeout: float | None = None) -> bool:
        return self._done.wait(timeout)

    def stop(self) -> None:
        self.source.close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    # -- state snapshots ------------------------------------------------------

    def progress(self) -> dict:
        bounds = self.source.current_bounds
        return {
            "asked": self.source.asked_count,
            "total_estimate": len(self.workload),
            "phase": self.source.phase,
            "current_bounds": list(bounds) if bounds is not None else None,
            "pending": len(self.source.pending_requests(10**9)),
            "done": self.done,
            "failure": self.failure,
        }

    def tasks(self, limit: int = DEFAULT_BATCH_SIZE) -> list[dict]:
        return [
            {"pair_id": r.pair_id, "display": r.display, "phase": r.phase}
            for r in self.source.pending_requests(limit)
        ]

    def submit(self, pair_id: str, label: str) -> str:
        return self.source.answer(pair_id, label)

    def solution_dict(self) -> dict | None:
        if self.solution is None:
            return None
        return self.solution.to_dict(self.workload, include_labels=True)


class _Handler(BaseHTTPRequestHandler):
    service: LabelingService  # set by make_server

    def log_message(self, fmt, *args):  # keep test output quiet
        pass

    def _send_json(self, payload: dict, status: int = 200) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self) -> None:
        url = urlparse(self.path)
        if url.path == "/api/tasks/next":
            limit = int(parse_qs(url.query).get("limit", [DEFAULT_BATCH_SIZE])[0])
            self._send_json(
                {"phase": self.service.source.phase, "tasks": self.service.tasks(limit)}
            )
        elif url.path == "/api/progress":
            self._send_json(self.service.progress())
        elif url.path == "/api/solution":
            solution = self.service.solution_dict()
            if solution is None:
                self._send_json(
                    {"error": "solution not ready", "phase": self.service.source.phase,
                     "failure": self.service.failure},
                    status=404,
                )
            else:
                self._send_json(solution)
        else:
            self._serve_static(url.path)

    def do_POST(self) -> None:
        if urlparse(self.path).path != "/api/labels":
            self._send_json({"error": "unknown endpoint"}, status=404)
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            payload = json.loads(self.rfile.read(length) or b"{}")
            pair_id = payload["pair_id"]
            label = payload["label"]
        except (ValueError, KeyError) as exc:
            self._send_json({"error": f"malformed label submission: {exc}"}, status=400)
            return
        try:
            status = self.service.submit(pair_id, label)
        except KeyError:
            self._send_json({"error": f"pair {pair_id!r} is not awaiting a label"}, status=409)
            return
        except ValueError as exc:
            self._send_json({"error": str(exc)}, status=400)
            return
        self._send_json({"status": status, "progress": self.service.progress()})

    def _serve_static(self, path: str) -> None:
        root = self.service.static_dir
        if root is None:
            self._send_json({"error": "no static bundle configured"}, status=404)
            return
        rel = path.lstrip("/") or "index.html"
        target = (root / rel).resolve()
        if not str(target).startswith(str(root.resolve())) or not target.is_file():
            self._send_json({"error": "not found"}, status=404)
            return
        body = target.read_bytes()
        ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


def make_server(service: LabelingService, port: int = 0, host: str = "127.0.0.1") -> ThreadingHTTPServer:
    """Bind the HTTP server (port 0 picks a free port); call serve_forever to run."""
    handler = type("BoundHandler", (_Handler,), {"service": service})
    return ThreadingHTTPServer((host, port), handler)
