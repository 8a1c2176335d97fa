"""Deterministic mission loop: 10 s macro-steps tying every subsystem together.

One engine instance owns the simulated spacecraft: filesystem, integrity
monitor, image catalog, thermal state, link budget, transfer sessions, and
the onboard labeler. run() executes a scenario start to finish; serve mode
drives the same generator one step at a time and applies operator commands
between steps, so the core never sees concurrent mutation.
"""
import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta

import numpy as np

from .. import ai, codec, faults, link, orbitsim, scenegen, store, thermal
from ..errors import (CommandError, ConfigError, RejectedUplinkError,
                      RejectedUploadError, StorageFullError)
from ..integrity import IntegrityMonitor
from ..simfs import SimFilesystem
from .scenario import CaptureRule, Scenario

STEP_S = 10
STEPS_PER_DAY = 86_400 // STEP_S
ZONE_NAMES = ("nominal", "polar", "saa")
CATEGORIES = ("capture", "scan", "fault", "grant", "chunk", "gate_deny",
              "label", "model_update", "evict", "error")
MODEL_PATH = "/data/model.cmdl"
EVAL_SPEC = scenegen.SensorSpec("rgb", 128, 96)


@dataclass(frozen=True)
class EventRecord:
    time: datetime
    category: str
    details: dict

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ConfigError(f"unknown event category {self.category!r}")

    def line(self) -> str:
        kv = " ".join(f"{k}={v}" for k, v in self.details.items())
        return f"{self.time.isoformat()} | {self.category} | {kv}"


@dataclass
class DayLedger:
    day: int
    downlink_used: int = 0
    uplink_used: int = 0
    reserve_used: int = 0
    captures: int = 0
    gate_denies: int = 0
    scans: int = 0
    copies_corrupted: int = 0
    copies_restored: int = 0
    unrecoverable: int = 0
    faults: int = 0
    evictions: int = 0
    labels: int = 0
    t_nano_min_c: float = float("inf")
    t_nano_max_c: float = float("-inf")
    t_frame_min_c: float = float("inf")
    t_frame_max_c: float = float("-inf")
    accuracy: float | None = None
    assets_live: int = 0
    bytes_live: int = 0


@dataclass
class MissionReport:
    master_seed: int
    duration_days: int
    days: list = field(default_factory=list)
    events: list = field(default_factory=list)
    accuracy_trace: list = field(default_factory=list)

    def log_lines(self) -> list:
        return [e.line() for e in self.events]

    @property
    def log_sha256(self) -> str:
        h = hashlib.sha256()
        for line in self.log_lines():
            h.update(line.encode())
            h.update(b"\n")
        return h.hexdigest()

    def category_counts(self) -> dict:
        counts = {c: 0 for c in CATEGORIES}
        for e in self.events:
            counts[e.category] += 1
        return counts

    def to_json_dict(self) -> dict:
        return {
            "master_seed": self.master_seed,
            "duration_days": self.duration_days,
            "log_sha256": self.log_sha256,
            "event_counts": self.category_counts(),
            "accuracy_trace": [
                {"day": d, "version": v, "accuracy": a}
                for d, v, a in self.accuracy_trace],
            "days": [
                {k: (None if isinstance(v, float) and not np.isfinite(v) else v)
                 for k, v in vars(led).items()}
                for led in self.days],
        }

    def to_text(self) -> str:
        out = [f"mission: {self.duration_days} day(s), seed {self.master_seed}",
               f"log sha256: {self.log_sha256}",
               "day  capt deny scan fault evic  downlink   uplink  resv"
               "   nano C          frame C         acc"]
        for d in self.days:
            acc = f"{d.accuracy:.3f}" if d.accuracy is not None else "  -  "
            out.append(
                f"{d.day:3d} {d.captures:5d} {d.gate_denies:4d} {d.scans:4d} "
                f"{d.faults:5d} {d.evictions:4d} {d.downlink_used:9d} "
                f"{d.uplink_used:8d} {d.reserve_used:5d}  "
                f"[{d.t_nano_min_c:6.1f},{d.t_nano_max_c:6.1f}] "
                f"[{d.t_frame_min_c:6.1f},{d.t_frame_max_c:6.1f}]  {acc}")
        counts = self.category_counts()
        busy = " ".join(f"{k}={v}" for k, v in counts.items() if v)
        out.append(f"events: {busy}")
        return "\n".join(out)


def scenario_windows(scn: Scenario, day: int) -> list:
    """The day's contact windows as link pass windows, sorted by start."""
    day_start = scn.orbit.epoch + timedelta(days=day)
    if scn.window_table is not None:
        rows = [link.PassWindow(day_start + timedelta(seconds=s), float(d), c)
                for s, d, c in scn.window_table]
        return sorted(rows, key=lambda w: w.start)
    obs = orbitsim.pass_windows(scn.orbit, orbitsim.default_stations(),
                                day_start.date())
    return [link.PassWindow(w.start, w.duration_s, w.channel) for w in obs]


class MissionEngine:
    def __init__(self, scn: Scenario):
        self.scn = scn
        self.fs = SimFilesystem()
        self.monitor = IntegrityMonitor(self.fs, "/data/manifest.json")
        self.catalog = store.Catalog(scn.quota, fs=self.fs, monitor=self.monitor)
        self.model = ai.default_model()
        self._anchor = self.model
        self.monitor.register("cloud_model", ai.save_model(self.model),
                              n_backups=2, path_base=MODEL_PATH)
        see = replace(scn.see, rng_seed=scn.see.rng_seed
                      ^ (scn.master_seed * 0x9E3779B1 & 0x7FFFFFFF))
        self.injector = faults.SeeInjector(see)
        base = np.random.SeedSequence(scn.master_seed)
        cap_ss, gt_ss, ft_ss, eval_ss = base.spawn(4)
        self._capture_rng = np.random.default_rng(cap_ss)
        self._gt_rng = np.random.default_rng(gt_ss)
        self._ft_rng = np.random.default_rng(ft_ss)
        self._eval_ss = eval_ss
        self._eval_set = None
        self.mux = scenegen.default_mux()
        sink = scn.thermal_params.sink_sunlit_c
        self.tstate = thermal.ThermalState(sink, sink, scn.orbit.epoch)
        self.period_s = orbitsim.orbital_period(scn.orbit)
        self.budget = self._fresh_budget(0)
        self.sessions = []
        self.events = []
        self.days = []
        self.accuracy_trace = []
        self.truths = {}
        self.features = {}
        self._train_examples = []
        self._session_counter = 0
        self._frame_seq = 0
        self._cmd_seq = 0
        self._orbit_attempts = {}
        self._todays_assets = []
        self._led = None
        self._now = scn.orbit.epoch
        self._zone_now = "nominal"
        self._finished = False

    # ------------------------------------------------------------------ util

    def _fresh_budget(self, day: int) -> link.LinkBudget:
        b = self.scn.budget
        return link.LinkBudget(day=day,
                               downlink_cap_bytes=b.downlink_cap_bytes,
                               uplink_cap_bytes=b.uplink_cap_bytes,
                               uhf_rate_bps=b.uhf_rate_bps,
                               sband_rate_bps=b.sband_rate_bps)

    def _emit(self, time: datetime, category: str, **details):
        if self.events and time < self.events[-1].time:
            raise RuntimeError("event time went backwards")
        self.events.append(EventRecord(time, category, details))

    def _next_session_id(self) -> int:
        self._session_counter += 1
        return self._session_counter

    def _eval_examples(self):
        if self._eval_set is None:
            rng = np.random.default_rng(self._eval_ss)
            examples = []
            for _ in range(self.scn.ai.eval_scenes):
                seed = int(rng.integers(2 ** 31))
                loc = orbitsim.GeodeticPoint(float(rng.uniform(-60, 60)),
                                             float(rng.uniform(-180, 180)),
                                             self.scn.orbit.altitude_km)
                img, truth = scenegen.generate_scene(seed, loc, EVAL_SPEC)
                examples.append((ai.extract_features(img),
                                 truth.cloud_fraction > ai.CLOUD_FRACTION_THRESHOLD))
            self._eval_set = examples
        return self._eval_set

    # ------------------------------------------------------------------ days

    def iter_steps(self):
        """Yield after every macro step; the whole mission when exhausted."""
        for day in range(self.scn.duration_days):
            self._begin_day(day)
            for i in range(STEPS_PER_DAY):
                self._step(day, i)
                yield day, i
            self._end_day(day)
        self._finished = True

    def run(self) -> MissionReport:
        for _ in self.iter_steps():
            pass
        return self.report()

    def report(self) -> MissionReport:
        return MissionReport(self.scn.master_seed, self.scn.duration_days,
                             list(self.days), list(self.events),
                             list(self.accuracy_trace))

    def _begin_day(self, day: int):
        scn = self.scn
        self._led = DayLedger(day=day)
        self._todays_assets = []
        day_start_s = day * 86_400
        lat, lon = orbitsim.track_arrays(scn.orbit, float(day_start_s),
                                         float(STEP_S), STEPS_PER_DAY)
        self._lat, self._lon = lat, lon
        self._zone_codes = orbitsim.classify_zones(scn.zones, lat, lon)
        self._eclipse = orbitsim.eclipse_mask(scn.orbit, float(day_start_s),
                                              float(STEP_S), STEPS_PER_DAY)
        self.budget = self._fresh_budget(day)
        self.windows = scenario_windows(scn, day)
        day_start = scn.orbit.epoch + timedelta(days=day)
        self._widx = np.full(STEPS_PER_DAY, -1, np.int32)
        self._wend = {}
        plan_windows, mapping = [], []
        for wi, w in enumerate(self.windows):
            a = max(0, int((w.start - day_start).total_seconds()) // STEP_S)
            b = min(STEPS_PER_DAY,
                    int((w.start - day_start).total_seconds()
                        + w.duration_s) // STEP_S)
            self._widx[a:b] = wi
            self._wend[wi] = b - 1
            # plan only the airtime the zone forecast leaves transmittable
            nominal = int(np.count_nonzero(self._zone_codes[a:b] == 0))
            if nominal > 0:
                plan_windows.append(link.PassWindow(
                    w.start, float(nominal * STEP_S), w.channel))
                mapping.append(wi)
        live = [s for s in self.sessions if s.state in ("queued", "active")]
        plan = link.plan_day(self.budget, plan_windows, live, self.catalog)
        self._wqueues = {wi: [] for wi in range(len(self.windows))}
        self._wcarry = {wi: 0 for wi in range(len(self.windows))}
        for g in plan:
            wi = mapping[g.window_index]
            self._wqueues[wi].append([g, g.nbytes])
            self._emit(day_start, "grant", window=wi,
                       channel=g.channel, asset=g.asset_id,
                       offset=g.offset, nbytes=g.nbytes,
                       target=g.session.target)

    def _step(self, day: int, i: int):
        scn = self.scn
        t_s = day * 86_400 + i * STEP_S
        t = scn.orbit.epoch + timedelta(seconds=t_s)
        zone = ZONE_NAMES[self._zone_codes[i]]
        eclipse = bool(self._eclipse[i])
        self._now, self._zone_now = t, zone
        wi = int(self._widx[i])
        due = self._due_rules(t_s)
        want_transmit = wi >= 0 and bool(self._wqueues.get(wi))
        gate = thermal.gate(scn.limits, self.tstate, bool(due) or want_transmit)
        active = False
        for ri, rule in due:
            orbit = int(t_s // self.period_s)
            if zone != "nominal" or gate != "allow":
                reason = zone if zone != "nominal" else gate
                if self._orbit_attempts.get((ri, orbit)) is None:
                    self._orbit_attempts[(ri, orbit)] = "denied"
                    self._led.gate_denies += 1
                    self._emit(t, "gate_deny", rule=ri, orbit=orbit,
                               zone=zone, reason=reason)
                continue
            self._orbit_attempts[(ri, orbit)] = "done"
            self._do_capture(t, rule, zone, orbit)
            active = True
        if want_transmit and zone == "nominal" and gate == "allow":
            if self._transmit(t, wi):
                active = True
        if wi >= 0 and i == self._wend.get(wi) and self._wqueues[wi]:
            # window closing with work left: hand it to the next window
            if wi + 1 < len(self.windows):
                self._wqueues[wi + 1].extend(self._wqueues[wi])
            self._wqueues[wi] = []
        sub = STEP_S / 2.0
        self.tstate = thermal.step(scn.thermal_params, self.tstate, sub,
                                   active, eclipse)
        self.tstate = thermal.step(scn.thermal_params, self.tstate, sub,
                                   active, eclipse)
        led = self._led
        led.t_nano_min_c = min(led.t_nano_min_c, self.tstate.t_nano_c)
        led.t_nano_max_c = max(led.t_nano_max_c, self.tstate.t_nano_c)
        led.t_frame_min_c = min(led.t_frame_min_c, self.tstate.t_frame_c)
        led.t_frame_max_c = max(led.t_frame_max_c, self.tstate.t_frame_c)
        if active and t_s % 60 == 0:
            rep = self.monitor.scan_once(t)
            led.scans += 1
            led.copies_corrupted += rep.copies_corrupted
            led.copies_restored += rep.copies_restored
            self._emit(t, "scan", zone=zone, files=rep.files_checked,
                       corrupted=rep.copies_corrupted,
                       restored=rep.copies_restored,
                       unrecoverable=len(rep.unrecoverable))
            for name in rep.unrecoverable:
                self._emit(t, "error", kind="unrecoverable", name=name)
        for ev in self.injector.inject(self.fs, float(STEP_S), zone,
                                       self.period_s, t):
            led.faults += 1
            self._emit(t, "fault", path=ev.file_path, byte=ev.byte_offset,
                       bit=ev.bit_index, zone=ev.zone)

    def _end_day(self, day: int):
        t = self.scn.orbit.epoch + timedelta(days=day + 1) - timedelta(seconds=1)
        if (day + 1) % self.scn.ai.cadence_days == 0 and self._todays_assets:
            self._gt_cycle(t, list(self._todays_assets))
        self._discard_confirmed_cloudy(t)
        led = self._led
        led.downlink_used = self.budget.downlink_used
        led.uplink_used = self.budget.uplink_used
        led.reserve_used = self.budget.reserve_used
        led.unrecoverable = len(self.monitor.unrecoverable)
        led.assets_live = len(self.catalog.assets)
        led.bytes_live = self.catalog.used_bytes
        self.days.append(led)
        cutoff = day * 86_400
        self._orbit_attempts = {
            k: v for k, v in self._orbit_attempts.items()
            if k[1] >= int(cutoff // self.period_s)}

    # -------------------------------------------------------------- captures

    def _due_rules(self, t_s: int):
        due = []
        orbit = int(t_s // self.period_s)
        for ri, rule in enumerate(self.scn.capture_plan):
            if orbit % rule.every_orbits != rule.offset_orbits % rule.every_orbits:
                continue
            if self._orbit_attempts.get((ri, orbit)) is None:
                due.append((ri, rule))
        return due

    def _do_capture(self, t: datetime, rule, zone: str, orbit: int):
        scn = self.scn
        seed = int(self._capture_rng.integers(2 ** 63))
        mux = scenegen.select_channel(self.mux, rule.channel)
        rec, img, truth = scenegen.capture(mux, t, scn.orbit, seed)
        stream = codec.encode(img, quality=rule.quality, lossless=rule.lossless)
        asset = store.ImageAsset(rec, stream)
        try:
            aid = self.catalog.put(asset)
        except StorageFullError:
            self._evict(t, "storage_full")
            try:
                aid = self.catalog.put(asset)
            except StorageFullError:
                self._led.gate_denies += 1
                self._emit(t, "error", kind="storage_full", orbit=orbit)
                return None
        self._todays_assets.append(aid)
        self.truths[aid] = truth.cloud_fraction
        self._led.captures += 1
        self._emit(t, "capture", asset=aid, channel=rule.channel,
                   kind=rec.kind, zone=zone, orbit=orbit, bytes=len(stream),
                   width=rec.width, height=rec.height)
        if rec.kind == "rgb":
            feats = ai.extract_features(img)
            self.features[aid] = feats
            p = ai.predict(self.model, feats)
            cloudy = p > 0.5
            self.catalog.set_label(aid, cloudy, p, "onboard_model")
            self._led.labels += 1
            self._emit(t, "label", asset=aid, source="onboard_model",
                       label="cloudy" if cloudy else "clear",
                       probability=round(p, 4))
            if p <= 0.5:
                self.catalog.set_priority(aid, 5)
                self._queue_session(aid, "full")
            elif p < 0.65:
                self.catalog.set_priority(aid, 3)
                self._queue_session(aid, "preview", segments=3)
            else:
                self.catalog.set_priority(aid, 1)
        self._queue_session(aid, "thumbnail")
        if self.catalog.over_watermark:
            self._evict(t, "watermark")
        return aid

    def _queue_session(self, aid: int, target: str, segments: int = 0):
        asset = self.catalog.get(aid)
        s = link.make_session(asset, target, preview_segments=segments,
                              created=self._next_session_id())
        self.sessions.append(s)
        return s

    def _evict(self, t: datetime, reason: str):
        for aid in self.catalog.auto_evict():
            self.truths.pop(aid, None)
            self.features.pop(aid, None)
            self._led.evictions += 1
            self._emit(t, "evict", asset=aid, reason=reason)

    def _discard_confirmed_cloudy(self, t: datetime):
        """Drop cloud-confirmed assets once their thumbnail reached ground.

        Screening exists to stop cloudy frames from occupying storage and
        link time; after ground truth agrees and a thumbnail is archived,
        the full-resolution stream has no remaining value.
        """
        for a in self.catalog.list_assets():
            if a.label != "cloudy" or a.label_source != "gt_factory":
                continue
            stream = self.catalog.get(a.asset_id).stream
            if a.downlinked_bytes < link.target_boundary(stream, "thumbnail"):
                continue
            for s in self.sessions:
                if s.asset_id == a.asset_id and s.state in ("queued", "active",
                                                            "paused"):
                    s.abort()
            self.catalog.delete(a.asset_id)
            self.truths.pop(a.asset_id, None)
            self.features.pop(a.asset_id, None)
            self._led.evictions += 1
            self._emit(t, "evict", asset=a.asset_id, reason="cloudy_confirmed")

    # -------------------------------------------------------------- transfers

    def _transmit(self, t: datetime, wi: int) -> bool:
        q = self._wqueues[wi]
        channel = self.windows[wi].channel
        step_allow = (int(self.budget.rate_bps(channel) * STEP_S) // 8
                      * link.WINDOW_EFFICIENCY // 100)
        pool = self._wcarry[wi] + step_allow
        sent_any = False
        while q and pool > 0 and self.budget.downlink_remaining > 0:
            g, rem = q[0]
            s = g.session
            if (s.state in ("complete", "aborted", "paused")
                    or s.asset_id not in self.catalog.assets):
                q.pop(0)
                continue
            asset = self.catalog.get(s.asset_id)
            s.skip_to(asset.downlinked_bytes)
            if s.state != "active" and s.state != "queued":
                q.pop(0)
                continue
            n = min(pool, rem, self.budget.downlink_remaining)
            frames, sent = link.transmit_step(s, n, asset.stream,
                                              self._frame_seq)
            if sent == 0:
                break
            self._frame_seq += len(frames)
            self.budget.record_downlink(sent)
            offset = self.catalog.get(s.asset_id).downlinked_bytes
            self.catalog.advance_downlink(s.asset_id, sent)
            q[0][1] = rem - sent
            pool -= sent
            sent_any = True
            self._emit(t, "chunk", asset=s.asset_id, window=wi,
                       offset=offset, nbytes=sent, frames=len(frames),
                       target=s.target, state=s.state)
            if q[0][1] <= 0 or s.state != "active":
                q.pop(0)
        self._wcarry[wi] = pool if q else 0
        return sent_any

    # -------------------------------------------------------------- gt cycle

    def _gt_cycle(self, t: datetime, asset_ids: list):
        scn = self.scn
        ids = [a for a in asset_ids if a in self.truths]
        if not ids:
            return
        labels, missing = ai.gt_factory(
            ids, self.truths, noise_rate=scn.ai.noise_rate,
            seed=int(self._gt_rng.integers(2 ** 31)))
        batch = ai.encode_label_batch(labels)
        try:
            link.uplink_submit(self.budget, "label_batch", len(batch))
        except RejectedUplinkError:
            self._emit(t, "error", kind="uplink_rejected",
                       what="label_batch", nbytes=len(batch))
            return
        for lb in labels:
            if lb.asset_id not in self.catalog.assets:
                continue
            self.catalog.set_label(lb.asset_id, lb.cloudy, lb.confidence,
                                   "gt_factory")
            self.catalog.set_priority(lb.asset_id, 1 if lb.cloudy else 5)
            self._led.labels += 1
            self._emit(t, "label", asset=lb.asset_id, source="gt_factory",
                       label="cloudy" if lb.cloudy else "clear",
                       confidence=round(lb.confidence, 4))
        examples, _ = ai.join_labels(labels, self.features)
        self._train_examples.extend(examples)
        if not self._train_examples or scn.ai.epochs == 0:
            return
        # refit from the pre-flight anchor over the whole label corpus;
        # chaining updates onto updates compounds label noise over weeks
        tuned = ai.finetune(self._anchor, self._train_examples,
                            scn.ai.learning_rate, scn.ai.epochs,
                            seed=int(self._ft_rng.integers(2 ** 31)),
                            batch_size=scn.ai.batch_size)
        self.model = replace(tuned, version=self.model.version + 1)
        acc = ai.accuracy(self.model, self._eval_examples())
        self.monitor.reregister("cloud_model", ai.save_model(self.model))
        self._led.accuracy = acc
        self.accuracy_trace.append((self._led.day, self.model.version, acc))
        self._emit(t, "model_update", version=self.model.version,
                   new_examples=len(examples),
                   corpus=len(self._train_examples), accuracy=round(acc, 4))

    # -------------------------------------------------------------- commands

    def snapshot(self) -> dict:
        pos = orbitsim.propagate(self.scn.orbit, self._now)
        sessions = [{
            "id": s.created, "asset_id": s.asset_id, "target": s.target,
            "state": s.state, "next_offset": s.next_offset,
            "target_bytes": s.target_bytes,
        } for s in self.sessions]
        return {
            "time": self._now.isoformat(),
            "day": len(self.days),
            "finished": self._finished,
            "orbit": {"lat_deg": round(pos.lat_deg, 4),
                      "lon_deg": round(pos.lon_deg, 4),
                      "alt_km": pos.alt_km},
            "zone": self._zone_now,
            "eclipse": orbitsim.in_eclipse(self.scn.orbit, self._now),
            "thermal": {"t_nano_c": round(self.tstate.t_nano_c, 3),
                        "t_frame_c": round(self.tstate.t_frame_c, 3),
                        "gate": thermal.gate(self.scn.limits, self.tstate, True)},
            "budget": {"day": self.budget.day,
                       "downlink_used": self.budget.downlink_used,
                       "downlink_cap": self.budget.downlink_cap_bytes,
                       "uplink_used": self.budget.uplink_used,
                       "uplink_cap": self.budget.uplink_cap_bytes,
                       "reserve_used": self.budget.reserve_used,
                       "reserve_cap": link.COMMAND_RESERVE},
            "storage": {"used_bytes": self.catalog.used_bytes,
                        "capacity_bytes": self.scn.quota.capacity_bytes,
                        "assets": len(self.catalog.assets)},
            "integrity": {"entries": len(self.monitor.entries),
                          "unrecoverable": sorted(self.monitor.unrecoverable)},
            "model": {"version": self.model.version,
                      "trained_on": self.model.trained_on,
                      "accuracy": (self.accuracy_trace[-1][2]
                                   if self.accuracy_trace else None)},
            "sessions": sessions,
        }

    def asset_rows(self) -> list:
        rows = []
        for a in self.catalog.list_assets():
            rows.append({
                "asset_id": a.asset_id, "time": a.time.isoformat(),
                "kind": a.kind, "channel": a.channel,
                "width": a.width, "height": a.height,
                "stream_length": a.stream_length,
                "downlinked_bytes": a.downlinked_bytes,
                "priority": a.priority, "label": a.label,
                "probability": a.probability, "label_source": a.label_source,
            })
        return rows

    def asset_ladder(self, aid: int) -> dict:
        asset = self.catalog.get(aid)
        hdr = codec.parse_header(asset.stream)
        # quality per rung vs the full decode, known onboard; inf -> null
        reference = codec.decode(asset.stream).to_array()
        curve = codec.quality_curve(asset.stream, reference)
        steps = []
        for k, (end, quality) in enumerate(curve, start=1):
            steps.append({"segments": k, "bytes": end,
                          "received": asset.downlinked_bytes >= end,
                          "psnr": None if math.isinf(quality)
                          else round(quality, 2)})
        return {"asset_id": aid, "total_bytes": asset.stream_length,
                "downlinked_bytes": asset.downlinked_bytes,
                "lossless": bool(hdr.lossless), "steps": steps}

    def preview_array(self, aid: int, segments: int | None = None):
        """Decode from ground-received bytes only; None means best available."""
        asset = self.catalog.get(aid)
        hdr = codec.parse_header(asset.stream)
        have = asset.downlinked_bytes
        if segments is not None:
            if not 1 <= segments <= hdr.segment_count:
                raise CommandError(f"segments must be 1..{hdr.segment_count}")
            end = hdr.header_size + sum(hdr.segment_lengths[:segments])
            if have < end:
                raise CommandError(
                    f"ground holds {have} bytes, segment {segments} ends at {end}")
            return codec.decode(asset.stream[:end]).to_array()
        if have < hdr.header_size + hdr.segment_lengths[0]:
            raise CommandError("no complete segment on the ground yet")
        return codec.decode(asset.stream[:have]).to_array()

    def plan_preview(self) -> list:
        """Tomorrow's grants if the day started now; mutates nothing."""
        day = len(self.days) + 1
        budget = self._fresh_budget(day)
        windows = scenario_windows(self.scn, day)
        live = [s for s in self.sessions if s.state in ("queued", "active")]
        plan = link.plan_day(budget, windows, live, self.catalog)
        return [{"window": g.window_index, "channel": g.channel,
                 "asset_id": g.asset_id, "offset": g.offset,
                 "nbytes": g.nbytes, "target": g.session.target}
                for g in plan]

    def apply_command(self, cmd: dict) -> dict:
        """Validate, frame through the link, charge uplink, then execute."""
        if not isinstance(cmd, dict) or "type" not in cmd:
            raise CommandError("command must be an object with a 'type'")
        ctype = cmd["type"]
        handler = getattr(self, f"_cmd_{ctype}", None)
        if handler is None:
            raise CommandError(f"unknown command type {ctype!r}")
        envelope = {k: v for k, v in cmd.items() if k != "content_b64"}
        payload = json.dumps(envelope, separators=(",", ":"),
                             sort_keys=True).encode()
        if len(payload) > link.MAX_PAYLOAD:
            raise CommandError("command envelope too large for one frame")
        self._cmd_seq += 1
        frame = link.Frame("command", self._cmd_seq % 65_536, payload)
        pool = link.uplink_submit(self.budget, "command",
                                  len(link.encode_frame(frame)))
        result = handler(cmd)
        result.setdefault("status", "ok")
        result["uplink_pool"] = pool
        return result

    @staticmethod
    def _arg(cmd: dict, key: str, kind):
        if key not in cmd:
            raise CommandError(f"missing field {key!r}")
        value = cmd[key]
        if kind is int and isinstance(value, bool) or not isinstance(value, kind):
            raise CommandError(f"field {key!r} must be {kind.__name__}")
        return value

    def _cmd_capture(self, cmd: dict) -> dict:
        channel = self._arg(cmd, "channel", int)
        if self._zone_now != "nominal":
            return {"status": "gate_deny", "reason": self._zone_now}
        gate = thermal.gate(self.scn.limits, self.tstate, True)
        if gate != "allow":
            return {"status": "gate_deny", "reason": gate}
        try:
            rule = CaptureRule(every_orbits=1, channel=channel,
                               quality=int(cmd.get("quality", 75)),
                               lossless=bool(cmd.get("lossless", False)))
        except ConfigError as exc:
            raise CommandError(str(exc)) from exc
        orbit = int((self._now - self.scn.orbit.epoch).total_seconds()
                    // self.period_s)
        aid = self._do_capture(self._now, rule, self._zone_now, orbit)
        if aid is None:
            return {"status": "storage_full"}
        return {"asset_id": aid}

    def _cmd_set_priority(self, cmd: dict) -> dict:
        aid = self._arg(cmd, "asset_id", int)
        priority = self._arg(cmd, "priority", int)
        if aid not in self.catalog.assets:
            raise CommandError(f"no asset {aid}")
        self.catalog.set_priority(aid, priority)
        return {"asset_id": aid, "priority": priority}

    def _cmd_start_transfer(self, cmd: dict) -> dict:
        aid = self._arg(cmd, "asset_id", int)
        target = self._arg(cmd, "target", str)
        if aid not in self.catalog.assets:
            raise CommandError(f"no asset {aid}")
        if target not in link.TARGETS:
            raise CommandError(f"target must be one of {link.TARGETS}")
        segments = int(cmd.get("segments", 3)) if target == "preview" else 0
        try:
            s = self._queue_session(aid, target, segments=segments)
        except (ValueError, ConfigError) as exc:
            raise CommandError(str(exc)) from exc
        return {"session_id": s.created, "state": s.state,
                "target_bytes": s.target_bytes}

    def _find_session(self, sid: int):
        for s in self.sessions:
            if s.created == sid:
                return s
        raise CommandError(f"no session {sid}")

    def _cmd_abort_transfer(self, cmd: dict) -> dict:
        s = self._find_session(self._arg(cmd, "session_id", int))
        s.abort()
        return {"session_id": s.created, "state": s.state}

    def _cmd_delete_asset(self, cmd: dict) -> dict:
        aid = self._arg(cmd, "asset_id", int)
        if aid not in self.catalog.assets:
            raise CommandError(f"no asset {aid}")
        for s in self.sessions:
            if s.asset_id == aid and s.state in ("queued", "active", "paused"):
                s.abort()
        self.catalog.delete(aid)
        self.truths.pop(aid, None)
        self.features.pop(aid, None)
        self._emit(self._now, "evict", asset=aid, reason="operator")
        return {"asset_id": aid}

    def _cmd_repair_upload(self, cmd: dict) -> dict:
        import base64
        name = self._arg(cmd, "name", str)
        b64 = self._arg(cmd, "content_b64", str)
        try:
            content = base64.b64decode(b64, validate=True)
        except Exception as exc:
            raise CommandError(f"content_b64 is not valid base64: {exc}") from exc
        link.uplink_submit(self.budget, "file_repair", len(content))
        try:
            self.monitor.repair_from_uplink(name, content)
        except KeyError as exc:
            raise CommandError(f"no integrity entry {name!r}") from exc
        except RejectedUploadError as exc:
            raise CommandError(str(exc)) from exc
        return {"name": name, "nbytes": len(content)}

    def _cmd_set_zone_policy(self, cmd: dict) -> dict:
        lat = self._arg(cmd, "polar_lat_deg", (int, float))
        try:
            policy = replace(self.scn.zones, polar_lat_deg=float(lat))
        except ConfigError as exc:
            raise CommandError(str(exc)) from exc
        self.scn = replace(self.scn, zones=policy)
        idx = int((self._now - self.scn.orbit.epoch).total_seconds()
                  % 86_400) // STEP_S
        self._zone_codes[idx:] = orbitsim.classify_zones(
            policy, self._lat[idx:], self._lon[idx:])
        return {"polar_lat_deg": float(lat)}

    def _cmd_trigger_finetune(self, cmd: dict) -> dict:
        before = self.model.version
        self._gt_cycle(self._now, list(self.catalog.assets))
        return {"version_before": before, "version_after": self.model.version}
