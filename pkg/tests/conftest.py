from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from avcause.ingest import UnifiedRecord
from avcause.taxonomy import ClassificationRecord


def make_unified(report_id="r1", full_text="Narrative:\nThe AV was driving.", **kwargs):
    defaults = {"entity_make": "Acme/Roadster", "category": "ADS"}
    defaults.update(kwargs)
    return UnifiedRecord(report_id=report_id, full_text=full_text, **defaults)


def make_record(report_id="r1", **kwargs):
    defaults = {
        "av_failed": "N",
        "primary_cause": "H",
        "failed_system": "N",
        "late_ai": False,
        "secondary_cause": "N",
    }
    defaults.update(kwargs)
    return ClassificationRecord(report_id=report_id, **defaults)


def write_csv(path, header, rows):
    import csv

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


class StubInferenceServer:
    """Chat-completion stand-in; scripts replies and counts every request."""

    def __init__(self):
        self.requests: list[dict] = []
        self._lock = threading.Lock()
        self.reply_fn = lambda payload: (
            '{"AV_Failed": "N", "Cause": "H", "System": "N", "Late": false}'
        )

        stub = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                payload = json.loads(self.rfile.read(length) or b"{}")
                with stub._lock:
                    stub.requests.append(payload)
                try:
                    text = stub.reply_fn(payload)
                except Exception:
                    self.send_response(500)
                    self.end_headers()
                    return
                body = json.dumps(
                    {"message": {"role": "assistant", "content": text}}
                ).encode("utf-8")
                try:
                    self.send_response(200)
                    self.send_header("Content-Type", "application/json")
                    self.send_header("Content-Length", str(len(body)))
                    self.end_headers()
                    self.wfile.write(body)
                except (BrokenPipeError, ConnectionResetError):
                    pass   # client gave up (timeout tests)

            def log_message(self, *args):
                pass

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    @property
    def url(self) -> str:
        host, port = self._server.server_address
        return f"http://{host}:{port}/api/chat"

    @property
    def request_count(self) -> int:
        return len(self.requests)

    def user_texts(self) -> list[str]:
        texts = []
        for payload in self.requests:
            for message in payload.get("messages", []):
                if message.get("role") == "user":
                    texts.append(message.get("content", ""))
        return texts

    def close(self):
        self._server.shutdown()
        self._server.server_close()


@pytest.fixture
def stub_server():
    server = StubInferenceServer()
    yield server
    server.close()


_ACCEPTANCE_RESULTS: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1].removeprefix("test_")
    if report.passed:
        status = "PASS"
    elif report.skipped:
        status = "SKIP"
    else:
        status = "FAIL"
    _ACCEPTANCE_RESULTS.append((name, status))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, status in _ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"acceptance {name}: {status}")
