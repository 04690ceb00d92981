"""In-memory GitHub-compatible REST server for tests and demos.

Serves the minimal API shape the spider consumes:

    GET /repositories?since=<id>&per_page=<n>   paginated listing
    GET /archive/<id>.tar.gz                    source tarball

Failure behaviors (transient errors, rate-limit responses) are injectable so
retry and budget handling can be exercised deterministically.
"""
from __future__ import annotations

import gzip
import io
import json
import tarfile
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse


@dataclass
class FakeClock:
    """Deterministic clock: sleep() just advances time and records the call."""
    current: float = 0.0
    sleeps: list[float] = field(default_factory=list)

    def now(self) -> float:
        return self.current

    def sleep(self, seconds: float) -> None:
        self.sleeps.append(seconds)
        if seconds > 0:
            self.current += seconds

    def advance(self, seconds: float) -> None:
        self.current += seconds


def make_repo(repo_id: int, full_name: str, stars: int = 0, size_kb: int = 100,
              language: str = "PHP", base_url: str = "") -> dict:
    return {
        "id": repo_id,
        "full_name": full_name,
        "stargazers_count": stars,
        "size": size_kb,
        "language": language,
        "clone_url": "%s/git/%d" % (base_url, repo_id),
        "archive_url": "%s/archive/%d.tar.gz" % (base_url, repo_id),
    }


class MockHub:
    """A tiny hub instance: repositories plus optional failure injection."""

    def __init__(self):
        self.repos: list[dict] = []
        self.archives: dict[int, dict[str, str]] = {}
        self.fail_queue: list[int] = []       # status codes for the next requests
        self.malformed_times: int = 0         # serve this many not-a-list bodies
        self.corrupt_archives: bool = False   # serve garbage instead of tarballs
        self.rate_limited_times: int = 0      # serve this many 403s first
        self.rate_limit_reset: float = 0.0    # advertised reset (epoch seconds)
        self.requests_seen: list[str] = []
        self._server: ThreadingHTTPServer | None = None
        self._thread: threading.Thread | None = None
        self.base_url = ""

    # -- dataset -----------------------------------------------------------
    def add_repo(self, repo_id: int, full_name: str, stars: int = 0,
                 size_kb: int = 100, language: str = "PHP",
                 files: dict[str, str] | None = None) -> None:
        self.repos.append(make_repo(repo_id, full_name, stars, size_kb,
                                    language, base_url="@BASE@"))
        if files is not None:
            self.archives[repo_id] = dict(files)

    def _repo_payload(self, since: int, per_page: int) -> list[dict]:
        rows = [r for r in sorted(self.repos, key=lambda r: r["id"])
                if r["id"] > since][:per_page]
        out = []
        for r in rows:
            rec = dict(r)
            rec["clone_url"] = rec["clone_url"].replace("@BASE@", self.base_url)
            rec["archive_url"] = rec["archive_url"].replace("@BASE@", self.base_url)
            out.append(rec)
        return out

    def _tarball(self, repo_id: int) -> bytes | None:
        files = self.archives.get(repo_id)
        if files is None:
            return None
        buf = io.BytesIO()
        prefix = "repo-%d-checkout" % repo_id
        with tarfile.open(fileobj=buf, mode="w") as tar:
            for name, content in sorted(files.items()):
                data = content.encode("utf-8")
                info = tarfile.TarInfo("%s/%s" % (prefix, name))
                info.size = len(data)
                tar.addfile(info, io.BytesIO(data))
        return gzip.compress(buf.getvalue())

    # -- lifecycle -----------------------------------------------------------
    def start(self) -> str:
        handler = _make_handler(self)
        self._server = ThreadingHTTPServer(("127.0.0.1", 0), handler)
        self._thread = threading.Thread(target=self._server.serve_forever,
                                        daemon=True)
        self._thread.start()
        self.base_url = "http://127.0.0.1:%d" % self._server.server_port
        return self.base_url

    def stop(self) -> None:
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()
            self._server = None

    def __enter__(self) -> "MockHub":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.stop()


def _make_handler(hub: MockHub):
    class Handler(BaseHTTPRequestHandler):
        def log_message(self, fmt, *args):  # keep test output quiet
            pass

        def _reply(self, status: int, body: bytes,
                   content_type: str = "application/json",
                   extra_headers: dict | None = None) -> None:
            self.send_response(status)
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(body)))
            for k, v in (extra_headers or {}).items():
                self.send_header(k, v)
            self.end_headers()
            self.wfile.write(body)

        def do_GET(self):
            hub.requests_seen.append(self.path)
            if hub.fail_queue:
                status = hub.fail_queue.pop(0)
                self._reply(status, json.dumps({"message": "injected"}).encode())
                return
            if hub.rate_limited_times > 0:
                hub.rate_limited_times -= 1
                self._reply(403, json.dumps({"message": "rate limited"}).encode(),
                            extra_headers={
                                "X-RateLimit-Remaining": "0",
                                "X-RateLimit-Reset": str(int(hub.rate_limit_reset))})
                return
            parsed = urlparse(self.path)
            if parsed.path == "/repositories":
                if hub.malformed_times > 0:
                    hub.malformed_times -= 1
                    self._reply(200, json.dumps({"not": "a list"}).encode())
                    return
                qs = parse_qs(parsed.query)
                since = int(qs.get("since", ["0"])[0])
                per_page = int(qs.get("per_page", ["100"])[0])
                body = json.dumps(hub._repo_payload(since, per_page)).encode()
                self._reply(200, body)
                return
            if parsed.path.startswith("/archive/"):
                try:
                    repo_id = int(parsed.path.split("/")[-1].split(".")[0])
                except ValueError:
                    self._reply(404, b"{}")
                    return
                if hub.corrupt_archives:
                    self._reply(200, b"this is not a tarball",
                                content_type="application/gzip")
                    return
                data = hub._tarball(repo_id)
                if data is None:
                    self._reply(404, b"{}")
                    return
                self._reply(200, data, content_type="application/gzip")
                return
            self._reply(404, b"{}")

    return Handler
