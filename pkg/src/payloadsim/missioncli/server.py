"""Operator console backend: one engine behind a lock, plain HTTP + SSE.

Read endpoints never touch simulation state. Operator commands go through
POST /api/command, where the engine frames them over the link and charges
the uplink budget before acting; a budget rejection surfaces as 429 so the
console can tell "you asked for something invalid" (400) from "the pipe is
full today" (429). POST /api/advance runs macro steps, which is simulated
time passing rather than an operator mutation.
"""
import base64
import io
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

import numpy as np
from PIL import Image

from .. import ai
from ..errors import CommandError, RejectedUplinkError
from .engine import STEPS_PER_DAY, MissionEngine
from .scenario import Scenario

ADVANCE_MAX_STEPS = 2 * STEPS_PER_DAY


class ConsoleServer:
    """Owns the engine, its lock, and the step generator."""

    def __init__(self, scenario: Scenario, static_dir: str | None = None):
        self.engine = MissionEngine(scenario)
        self.lock = threading.Lock()
        self.changed = threading.Condition(self.lock)
        self._steps = self.engine.iter_steps()
        self.static_dir = Path(static_dir) if static_dir else None
        self._httpd = None

    # --------------------------------------------------------------- control

    def advance(self, steps: int) -> int:
        """Run up to `steps` macro steps; returns how many actually ran."""
        ran = 0
        with self.lock:
            for _ in range(steps):
                try:
                    next(self._steps)
                except StopIteration:
                    break
                ran += 1
            if ran:
                self.changed.notify_all()
        return ran

    def demo_setup(self, days: int = 2, rig_unrecoverable: bool = True):
        """Pre-run some mission history, then break the model file on
        purpose so the console has a live unrecoverable alert to repair."""
        self.advance(days * STEPS_PER_DAY)
        if not rig_unrecoverable:
            return
        with self.lock:
            eng = self.engine
            entry = eng.monitor.entries["cloud_model"]
            for path in entry.copies:
                raw = bytearray(eng.fs.read(path))
                raw[len(raw) // 2] ^= 0x40
                eng.fs.write(path, bytes(raw))
            eng.monitor.scan_once(eng._now)
            self.changed.notify_all()

    def command(self, cmd: dict) -> dict:
        with self.lock:
            result = self.engine.apply_command(cmd)
            self.changed.notify_all()
            return result

    def serve_forever(self, host: str = "127.0.0.1", port: int = 8099):
        self._httpd = _make_httpd(self, host, port)
        addr = self._httpd.server_address
        print(f"console listening on http://{addr[0]}:{addr[1]}/")
        self._httpd.serve_forever()

    def start_background(self, host: str = "127.0.0.1", port: int = 0) -> int:
        """Start serving on a daemon thread; returns the bound port."""
        self._httpd = _make_httpd(self, host, port)
        t = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        t.start()
        return self._httpd.server_address[1]

    def shutdown(self):
        if self._httpd is not None:
            self._httpd.shutdown()
            self._httpd.server_close()
            self._httpd = None


def _make_httpd(console: ConsoleServer, host: str, port: int):
    class Handler(_ConsoleHandler):
        pass

    Handler.console = console
    httpd = ThreadingHTTPServer((host, port), Handler)
    httpd.daemon_threads = True
    return httpd


class _ConsoleHandler(BaseHTTPRequestHandler):
    console: ConsoleServer = None
    protocol_version = "HTTP/1.1"

    # silence per-request stderr chatter
    def log_message(self, fmt, *args):
        pass

    def _send_json(self, code: int, payload: dict):
        body = json.dumps(payload).encode()
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _send_bytes(self, code: int, body: bytes, ctype: str):
        self.send_response(code)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        try:
            parsed = json.loads(raw.decode() or "null")
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CommandError(f"body is not valid JSON: {exc}") from exc
        if not isinstance(parsed, dict):
            raise CommandError("body must be a JSON object")
        return parsed

    # ------------------------------------------------------------------ GET

    def do_GET(self):
        url = urlparse(self.path)
        parts = [p for p in url.path.split("/") if p]
        try:
            if parts[:1] != ["api"]:
                return self._static(url.path)
            eng = self.console.engine
            with self.console.lock:
                if parts == ["api", "state"]:
                    return self._send_json(200, eng.snapshot())
                if parts == ["api", "assets"]:
                    return self._send_json(200, {"assets": eng.asset_rows()})
                if parts == ["api", "plan"]:
                    return self._send_json(200, {"grants": eng.plan_preview()})
                if parts == ["api", "report"]:
                    return self._send_json(200, eng.report().to_json_dict())
                if parts == ["api", "log"]:
                    text = "\n".join(eng.report().log_lines()) + "\n"
                    return self._send_bytes(200, text.encode(), "text/plain")
                if parts == ["api", "integrity"]:
                    return self._send_json(200, self._integrity_view(eng))
                if (len(parts) == 4 and parts[:2] == ["api", "integrity"]
                        and parts[3] == "content"):
                    return self._integrity_content(eng, parts[2])
                if len(parts) >= 3 and parts[:2] == ["api", "assets"]:
                    return self._asset_get(eng, parts, url)
            if parts == ["api", "stream"]:
                return self._stream()
            return self._send_json(404, {"error": f"no route {url.path}"})
        except BrokenPipeError:
            pass
        except KeyError as exc:
            return self._send_json(404, {"error": f"not found: {exc}"})
        except CommandError as exc:
            return self._send_json(409, {"error": str(exc)})

    def _asset_get(self, eng: MissionEngine, parts, url):
        aid = int(parts[2]) if parts[2].isdigit() else -1
        if aid not in eng.catalog.assets:
            return self._send_json(404, {"error": f"no asset {parts[2]}"})
        if len(parts) == 3:
            row = next(r for r in eng.asset_rows() if r["asset_id"] == aid)
            row["ladder"] = eng.asset_ladder(aid)
            return self._send_json(200, row)
        if parts[3] == "preview.png":
            q = parse_qs(url.query)
            segments = None
            if "segments" in q:
                try:
                    segments = int(q["segments"][0])
                except ValueError:
                    return self._send_json(400, {"error": "segments must be int"})
            arr = eng.preview_array(aid, segments)
            img = Image.fromarray(np.asarray(arr, dtype=np.uint8))
            buf = io.BytesIO()
            img.save(buf, format="PNG")
            return self._send_bytes(200, buf.getvalue(), "image/png")
        return self._send_json(404, {"error": f"no asset route {parts[3]}"})

    @staticmethod
    def _integrity_view(eng: MissionEngine) -> dict:
        entries = {}
        for name, entry in eng.monitor.entries.items():
            entries[name] = {
                "digest": entry.stored_digest,
                "copies": len(entry.copies),
                "unrecoverable": name in eng.monitor.unrecoverable,
            }
        return {"entries": entries,
                "unrecoverable": sorted(eng.monitor.unrecoverable)}

    def _integrity_content(self, eng: MissionEngine, name: str):
        # ground twin of the one artifact the ground can reconstruct
        if name != "cloud_model":
            return self._send_json(404, {"error": f"no ground copy of {name!r}"})
        blob = ai.save_model(eng.model)
        return self._send_json(200, {
            "name": name, "content_b64": base64.b64encode(blob).decode()})

    def _static(self, path: str):
        root = self.console.static_dir
        if root is None:
            body = (b"<!doctype html><title>payload console</title>"
                    b"<p>API under /api/; no static bundle configured.")
            return self._send_bytes(200, body, "text/html")
        rel = path.lstrip("/") or "index.html"
        target = (root / rel).resolve()
        if not str(target).startswith(str(root.resolve())) or not target.is_file():
            return self._send_json(404, {"error": f"no file {path}"})
        ctype = {"html": "text/html", "js": "text/javascript",
                 "css": "text/css", "png": "image/png",
                 "map": "application/json"}.get(
                     target.suffix.lstrip("."), "application/octet-stream")
        return self._send_bytes(200, target.read_bytes(), ctype)

    def _stream(self):
        self.send_response(200)
        self.send_header("Content-Type", "text/event-stream")
        self.send_header("Cache-Control", "no-cache")
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        console = self.console
        try:
            while True:
                with console.lock:
                    snap = console.engine.snapshot()
                data = json.dumps(snap)
                self.wfile.write(f"data: {data}\n\n".encode())
                self.wfile.flush()
                with console.changed:
                    console.changed.wait(timeout=15.0)
        except (BrokenPipeError, ConnectionResetError):
            pass

    # ----------------------------------------------------------------- POST

    def do_POST(self):
        url = urlparse(self.path)
        try:
            body = self._read_body()
            if url.path == "/api/command":
                result = self.console.command(body)
                status = result.get("status", "ok")
                if status in ("gate_deny", "storage_full"):
                    return self._send_json(409, result)
                return self._send_json(200, result)
            if url.path == "/api/advance":
                steps = body.get("steps", 1)
                if not isinstance(steps, int) or isinstance(steps, bool) \
                        or not 1 <= steps <= ADVANCE_MAX_STEPS:
                    raise CommandError(
                        f"steps must be an int in 1..{ADVANCE_MAX_STEPS}")
                ran = self.console.advance(steps)
                with self.console.lock:
                    snap = self.console.engine.snapshot()
                return self._send_json(200, {"steps_run": ran, "state": snap})
            return self._send_json(404, {"error": f"no route {url.path}"})
        except CommandError as exc:
            return self._send_json(400, {"error": str(exc)})
        except RejectedUplinkError as exc:
            return self._send_json(429, {"error": str(exc)})
        except BrokenPipeError:
            pass
