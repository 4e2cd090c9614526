"""Canned-response HTTP server for integration tests.

Serves ``<responses_dir>/v1_inpaint.json`` and ``v1_segment.json`` verbatim
for POSTs to the matching endpoint, and records every request body. Faults
can be queued per path:

* ``"truncate"``: advertise the full length, send half the body, close.
* ``"garble"``: send the first half of the body with a matching length.
* ``"error500"`` / ``"error400"``: reply with that status.
"""
import threading
from collections import defaultdict, deque
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple


class StubServer:
    def __init__(self, responses_dir, faults: Optional[Dict[str, Iterable[str]]] = None):
        self.responses_dir = Path(responses_dir)
        self.requests: List[Tuple[str, bytes]] = []
        self._faults = defaultdict(deque)
        for path, items in (faults or {}).items():
            self._faults[path].extend(items)
        self._lock = threading.Lock()
        self._httpd = ThreadingHTTPServer(("127.0.0.1", 0), self._handler())
        self._httpd.daemon_threads = True
        self._thread = threading.Thread(target=self._httpd.serve_forever, args=(0.05,), daemon=True)

    @property
    def url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def _next_fault(self, path: str) -> Optional[str]:
        with self._lock:
            queue = self._faults.get(path)
            return queue.popleft() if queue else None

    def _handler(self):
        stub = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"

            def log_message(self, *args):
                pass

            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                body = self.rfile.read(length)
                with stub._lock:
                    stub.requests.append((self.path, body))
                name = self.path.strip("/").replace("/", "_") + ".json"
                canned = stub.responses_dir / name
                if not canned.is_file():
                    self._reply(404, b'{"error":"not found"}')
                    return
                payload = canned.read_bytes()
                fault = stub._next_fault(self.path)
                if fault == "truncate":
                    self.send_response(200)
                    self.send_header("Content-Type", "application/json")
                    self.send_header("Content-Length", str(len(payload)))
                    self.send_header("Connection", "close")
                    self.end_headers()
                    self.wfile.write(payload[: len(payload) // 2])
                    self.wfile.flush()
                    self.close_connection = True
                elif fault == "garble":
                    self._reply(200, payload[: len(payload) // 2])
                elif fault and fault.startswith("error"):
                    self._reply(int(fault[5:]), b'{"error":"injected"}')
                else:
                    self._reply(200, payload)

            def _reply(self, status: int, payload: bytes):
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

        return Handler

    def start(self) -> "StubServer":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()

    def __enter__(self) -> "StubServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
