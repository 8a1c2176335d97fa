"""Console HTTP API: reads, previews, commands, statuses, stream."""
import json
import socket
import urllib.error
import urllib.request

import numpy as np
import pytest
from PIL import Image

from payloadsim.missioncli import default_scenario
from payloadsim.missioncli.server import ConsoleServer


@pytest.fixture(scope="module")
def console():
    c = ConsoleServer(default_scenario(days=5, seed=11))
    c.demo_setup(days=2)
    port = c.start_background()
    yield c, f"http://127.0.0.1:{port}"
    c.shutdown()


def get(base, path):
    with urllib.request.urlopen(base + path, timeout=10) as r:
        body = r.read()
        if "json" in r.headers["Content-Type"]:
            return json.loads(body), r.status
        return body, r.status


def post(base, path, obj):
    req = urllib.request.Request(base + path, json.dumps(obj).encode(),
                                 {"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req, timeout=10) as r:
            return json.loads(r.read()), r.status
    except urllib.error.HTTPError as e:
        return json.loads(e.read()), e.code


def test_state_snapshot(console):
    _, base = console
    state, status = get(base, "/api/state")
    assert status == 200
    assert state["day"] >= 1
    assert state["zone"] in ("nominal", "polar", "saa")
    assert 0 <= state["budget"]["downlink_used"] <= state["budget"]["downlink_cap"]
    assert state["model"]["version"] >= 1
    assert "cloud_model" in state["integrity"]["unrecoverable"]


def test_asset_listing_and_detail(console):
    _, base = console
    listing, _ = get(base, "/api/assets")
    rows = listing["assets"]
    assert rows, "demo should have captured assets"
    aid = rows[0]["asset_id"]
    detail, status = get(base, f"/api/assets/{aid}")
    assert status == 200
    assert detail["asset_id"] == aid
    ladder = detail["ladder"]
    assert ladder["steps"][0]["bytes"] <= 10_240
    assert [s["segments"] for s in ladder["steps"]] == list(
        range(1, len(ladder["steps"]) + 1))
    # quality climbs rung to rung; the final rung matches the reference
    quality = [s["psnr"] for s in ladder["steps"]]
    assert quality[-1] is None
    finite = quality[:-1]
    assert all(q is not None for q in finite)
    assert all(a <= b for a, b in zip(finite, finite[1:]))
    try:
        urllib.request.urlopen(base + "/api/assets/999999", timeout=10)
    except urllib.error.HTTPError as e:
        assert e.code == 404


def test_preview_renders_received_bytes_only(console):
    c, base = console
    rows, _ = get(base, "/api/assets")
    row = next(r for r in rows["assets"] if r["downlinked_bytes"] > 0)
    png, status = get(base, f"/api/assets/{row['asset_id']}/preview.png")
    assert status == 200
    img = Image.open(__import__("io").BytesIO(png))
    assert img.size == (row["width"], row["height"])
    # asking for more segments than the ground holds is refused
    detail, _ = get(base, f"/api/assets/{row['asset_id']}")
    missing = [s for s in detail["ladder"]["steps"] if not s["received"]]
    if missing:
        k = missing[-1]["segments"]
        try:
            urllib.request.urlopen(
                base + f"/api/assets/{row['asset_id']}/preview.png?segments={k}",
                timeout=10)
            assert False, "expected 409"
        except urllib.error.HTTPError as e:
            assert e.code == 409


def test_preview_not_downlinked_yet(console):
    _, base = console
    rows, _ = get(base, "/api/assets")
    fresh = [r for r in rows["assets"] if r["downlinked_bytes"] == 0]
    if not fresh:
        pytest.skip("every demo asset already has ground bytes")
    try:
        urllib.request.urlopen(
            base + f"/api/assets/{fresh[0]['asset_id']}/preview.png",
            timeout=10)
        assert False, "expected 409"
    except urllib.error.HTTPError as e:
        assert e.code == 409


def test_command_statuses(console):
    _, base = console
    body, status = post(base, "/api/command", {"type": "set_priority",
                                               "asset_id": "nope"})
    assert status == 400 and "error" in body
    body, status = post(base, "/api/command", {"type": "unknown_thing"})
    assert status == 400
    body, status = post(base, "/api/command", {
        "type": "repair_upload", "name": "cloud_model",
        "content_b64": "A" * 400_000})
    assert status == 429  # budget exhaustion is not a validation failure
    req = urllib.request.Request(base + "/api/command", b"{not json",
                                 {"Content-Type": "application/json"})
    try:
        urllib.request.urlopen(req, timeout=10)
        assert False, "expected 400"
    except urllib.error.HTTPError as e:
        assert e.code == 400


def test_priority_change_reorders_plan(console):
    _, base = console
    plan, _ = get(base, "/api/plan")
    before = [g["asset_id"] for g in plan["grants"]]
    assert len(before) >= 2
    rows, _ = get(base, "/api/assets")
    prio = {r["asset_id"]: r["priority"] for r in rows["assets"]}
    target = next(a for a in reversed(before) if prio[a] < 5)
    body, status = post(base, "/api/command", {
        "type": "set_priority", "asset_id": target, "priority": 5})
    assert status == 200
    plan, _ = get(base, "/api/plan")
    after = [g["asset_id"] for g in plan["grants"]]
    assert after.index(target) < before.index(target)


def test_repair_clears_unrecoverable(console):
    _, base = console
    integ, _ = get(base, "/api/integrity")
    assert "cloud_model" in integ["unrecoverable"]
    content, _ = get(base, "/api/integrity/cloud_model/content")
    body, status = post(base, "/api/command", {
        "type": "repair_upload", "name": "cloud_model",
        "content_b64": content["content_b64"]})
    assert status == 200
    integ, _ = get(base, "/api/integrity")
    assert integ["unrecoverable"] == []
    state, _ = get(base, "/api/state")
    assert state["integrity"]["unrecoverable"] == []


def test_advance_steps(console):
    _, base = console
    state, _ = get(base, "/api/state")
    t0 = state["time"]
    body, status = post(base, "/api/advance", {"steps": 6})
    assert status == 200
    assert body["steps_run"] == 6
    assert body["state"]["time"] > t0
    body, status = post(base, "/api/advance", {"steps": 0})
    assert status == 400
    body, status = post(base, "/api/advance", {"steps": "all"})
    assert status == 400


def test_log_and_report_endpoints(console):
    _, base = console
    text, status = get(base, "/api/log")
    assert status == 200
    lines = text.decode().strip().splitlines()
    assert all(" | " in line for line in lines)
    rep, status = get(base, "/api/report")
    assert status == 200
    assert rep["event_counts"]["capture"] >= 1
    assert rep["log_sha256"]


def test_stream_pushes_state(console):
    _, base = console
    port = int(base.rsplit(":", 1)[1])
    with socket.create_connection(("127.0.0.1", port), timeout=10) as sock:
        sock.sendall(b"GET /api/stream HTTP/1.1\r\n"
                     b"Host: 127.0.0.1\r\nAccept: text/event-stream\r\n\r\n")
        sock.settimeout(10)
        buf = b""
        while b"\n\n" not in buf.split(b"\r\n\r\n", 1)[-1]:
            chunk = sock.recv(4096)
            assert chunk, "stream closed early"
            buf += chunk
        head, body = buf.split(b"\r\n\r\n", 1)
        assert b"200" in head.splitlines()[0]
        assert b"text/event-stream" in head
        event = body.split(b"\n\n")[0]
        assert event.startswith(b"data: ")
        snap = json.loads(event[len(b"data: "):])
        assert "zone" in snap and "budget" in snap


def test_unknown_routes(console):
    _, base = console
    try:
        urllib.request.urlopen(base + "/api/warp", timeout=10)
        assert False
    except urllib.error.HTTPError as e:
        assert e.code == 404
    body, status = post(base, "/api/nothing", {})
    assert status == 404
