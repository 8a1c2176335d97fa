/** DOM wiring for the operator console. All state shown comes from the
 * last server snapshot or a GET; all changes go through api.sendCommand.
 */
import { ApiClient, ApiError, AssetRow, Snapshot } from "./api";
import { alertNames, fetchGroundModel, repairUpload } from "./integrity";
import { buildPreviewModel, PreviewModel, requestMore, stopTransfer } from "./preview";
import { QueueEditor } from "./queue";
import { fmtBytes, pct, StateStore } from "./state";

const api = new ApiClient("");
const store = new StateStore();
const queue = new QueueEditor();
let selectedAsset: number | null = null;
let refreshing = false;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function banner(text: string | null, cls = "warn"): void {
  const box = el<HTMLDivElement>("banner");
  box.textContent = text ?? "";
  box.className = text ? `banner ${cls}` : "banner hidden";
}

async function guarded<T>(work: () => Promise<T>): Promise<T | undefined> {
  try {
    const out = await work();
    banner(null);
    return out;
  } catch (exc) {
    if (exc instanceof ApiError) {
      const label = { budget: "uplink budget", gate: "gate", validation: "rejected", not_found: "missing", network: "offline" }[exc.kind];
      banner(`${label}: ${exc.message}`);
      return undefined;
    }
    throw exc;
  }
}

function gauge(used: number, cap: number, label: string, extra = ""): string {
  return `<div class="gauge${extra ? " " + extra : ""}">
    <span class="glabel">${label}</span>
    <div class="bar"><div class="fill" style="width:${pct(used, cap).toFixed(1)}%"></div></div>
    <span class="gval">${fmtBytes(used)} / ${fmtBytes(cap)}</span>
  </div>`;
}

function renderStatus(s: Snapshot): void {
  el("status").innerHTML = `
    <span>${s.time}</span>
    <span>day ${s.day}${s.finished ? " (finished)" : ""}</span>
    <span class="zone ${s.zone}">${s.zone}</span>
    <span>${s.eclipse ? "eclipse" : "sunlit"}</span>
    <span>lat ${s.orbit.lat_deg.toFixed(1)} lon ${s.orbit.lon_deg.toFixed(1)}</span>
    <span>nano ${s.thermal.t_nano_c.toFixed(1)}C frame ${s.thermal.t_frame_c.toFixed(1)}C</span>
    <span class="gate ${s.thermal.gate}">${s.thermal.gate}</span>
    <span>model v${s.model.version}${s.model.accuracy != null ? ` acc ${(s.model.accuracy * 100).toFixed(1)}%` : ""}</span>`;
  el("budget").innerHTML =
    gauge(s.budget.downlink_used, s.budget.downlink_cap, "downlink") +
    gauge(s.budget.uplink_used, s.budget.uplink_cap, "uplink") +
    gauge(s.budget.reserve_used, s.budget.reserve_cap, "command reserve", "reserve") +
    gauge(s.storage.used_bytes, s.storage.capacity_bytes, "storage");
}

function renderSessions(s: Snapshot): void {
  const rows = s.sessions
    .map(
      (t) => `<tr>
      <td>${t.id}</td><td>${t.asset_id}</td><td>${t.target}</td>
      <td class="state ${t.state}">${t.state}</td>
      <td>${fmtBytes(t.next_offset)} / ${fmtBytes(t.target_bytes)}</td>
      <td>${["queued", "active", "paused"].includes(t.state) ? `<button data-abort="${t.id}">abort</button>` : ""}</td>
    </tr>`,
    )
    .join("");
  el("sessions").innerHTML = `<tr><th>id</th><th>asset</th><th>target</th><th>state</th><th>progress</th><th></th></tr>${rows}`;
  el("sessions").querySelectorAll<HTMLButtonElement>("button[data-abort]").forEach((btn) => {
    btn.onclick = () =>
      guarded(() => api.sendCommand({ type: "abort_transfer", session_id: Number(btn.dataset.abort) })).then(refreshPanels);
  });
}

function assetRowHtml(a: AssetRow, idx: number, count: number): string {
  const progress = pct(a.downlinked_bytes, a.stream_length).toFixed(0);
  const label = a.label ? `${a.label}${a.probability != null ? ` ${(a.probability * 100).toFixed(0)}%` : ""}` : "-";
  return `<tr class="${a.asset_id === selectedAsset ? "selected" : ""}" data-asset="${a.asset_id}">
    <td>${a.asset_id}</td><td>${a.kind}${a.channel}</td><td>${a.width}x${a.height}</td>
    <td><div class="bar small"><div class="fill" style="width:${progress}%"></div></div>
        ${fmtBytes(a.downlinked_bytes)}</td>
    <td>${label}</td><td>${a.priority}</td>
    <td>
      <button data-up="${a.asset_id}" ${idx === 0 ? "disabled" : ""}>up</button>
      <button data-down="${a.asset_id}" ${idx === count - 1 ? "disabled" : ""}>down</button>
      <button data-del="${a.asset_id}">delete</button>
    </td>
  </tr>`;
}

function renderAssets(): void {
  const order = queue.order();
  const byId = new Map(queue.rows.map((r) => [r.asset_id, r]));
  const rows = order.map((id, i) => assetRowHtml(byId.get(id)!, i, order.length)).join("");
  el("assets").innerHTML =
    `<tr><th>id</th><th>sensor</th><th>size</th><th>on ground</th><th>label</th><th>prio</th><th></th></tr>${rows}`;
  const table = el("assets");
  table.querySelectorAll<HTMLTableRowElement>("tr[data-asset]").forEach((tr) => {
    tr.onclick = (ev) => {
      if ((ev.target as HTMLElement).tagName === "BUTTON") return;
      selectedAsset = Number(tr.dataset.asset);
      void showPreview();
      renderAssets();
    };
  });
  const move = (id: number, delta: number) => {
    const order2 = queue.order();
    const i = order2.indexOf(id);
    const j = i + delta;
    if (j < 0 || j >= order2.length) return;
    [order2[i], order2[j]] = [order2[j], order2[i]];
    void queue.applyOrder(api, order2).then((out) => {
      if (out.banner) banner(out.banner);
      renderAssets();
      void refreshPlan();
    });
  };
  table.querySelectorAll<HTMLButtonElement>("button[data-up]").forEach((b) => (b.onclick = () => move(Number(b.dataset.up), -1)));
  table.querySelectorAll<HTMLButtonElement>("button[data-down]").forEach((b) => (b.onclick = () => move(Number(b.dataset.down), 1)));
  table.querySelectorAll<HTMLButtonElement>("button[data-del]").forEach(
    (b) =>
      (b.onclick = () =>
        guarded(() => api.sendCommand({ type: "delete_asset", asset_id: Number(b.dataset.del) })).then(refreshPanels)),
  );
}

function renderPreview(model: PreviewModel | null): void {
  const box = el("preview");
  if (!model) {
    box.innerHTML = `<p class="dim">select an asset</p>`;
    return;
  }
  const ladder = model.ladder
    .map(
      (s) => `<tr class="${s.received ? "got" : "missing"}">
      <td>seg ${s.segments}</td><td>${fmtBytes(s.bytes)}</td>
      <td>${s.psnr == null ? (s.received ? "exact" : "-") : s.psnr.toFixed(1) + " dB"}</td>
      <td>${s.received ? "received" : "-"}</td></tr>`,
    )
    .join("");
  box.innerHTML = `
    <h3>asset ${model.assetId} (${model.segmentsReceived}/${model.segmentsTotal} segments)</h3>
    ${model.available ? `<img src="${model.imageUrl}&t=${Date.now()}" alt="preview">` : `<p class="dim">${model.placeholder}</p>`}
    <table class="ladder">${ladder}</table>
    <p>
      <button id="more" ${model.nextTarget ? "" : "disabled"}>request more${model.nextTarget ? ` (${model.nextTarget})` : ""}</button>
      <button id="stop" ${model.stopSession ? "" : "disabled"}>sufficient - stop</button>
    </p>`;
  el<HTMLButtonElement>("more").onclick = () => guarded(() => requestMore(api, model)).then(refreshPanels);
  el<HTMLButtonElement>("stop").onclick = () => guarded(() => stopTransfer(api, model)).then(refreshPanels);
}

async function showPreview(): Promise<void> {
  if (selectedAsset == null || !store.current) return renderPreview(null);
  const detail = await guarded(() => api.getAsset(selectedAsset!));
  if (detail) renderPreview(buildPreviewModel(api, detail, store.current.sessions));
}

async function refreshPlan(): Promise<void> {
  const grants = await guarded(() => api.getPlan());
  if (!grants) return;
  const rows = grants
    .map((g) => `<tr><td>w${g.window}</td><td>${g.channel}</td><td>asset ${g.asset_id}</td><td>${g.target}</td><td>${fmtBytes(g.nbytes)}</td></tr>`)
    .join("");
  el("plan").innerHTML = `<tr><th>window</th><th>channel</th><th>asset</th><th>target</th><th>bytes</th></tr>${rows}`;
}

async function refreshIntegrity(): Promise<void> {
  const summary = await guarded(() => api.getIntegrity());
  if (!summary) return;
  const alerts = alertNames(summary);
  const entries = Object.entries(summary.entries)
    .map(
      ([name, e]) => `<tr class="${e.unrecoverable ? "alert" : ""}">
      <td>${name}</td><td>${e.copies} copies</td><td class="mono">${e.digest.slice(0, 12)}</td>
      <td>${e.unrecoverable ? `UNRECOVERABLE ${name === "cloud_model" ? `<button data-repair="${name}">repair from ground copy</button>` : ""}` : "ok"}</td>
    </tr>`,
    )
    .join("");
  el("integrity").innerHTML = `<tr><th>file</th><th></th><th>digest</th><th>status</th></tr>${entries}`;
  el("alerts").textContent = alerts.length ? `unrecoverable: ${alerts.join(", ")}` : "";
  el("integrity").querySelectorAll<HTMLButtonElement>("button[data-repair]").forEach((btn) => {
    btn.onclick = async () => {
      const content = await guarded(() => fetchGroundModel(api));
      if (!content) return;
      const out = await repairUpload(api, btn.dataset.repair!, content);
      if (!out.ok) banner(out.banner);
      await refreshPanels();
    };
  });
}

async function refreshPanels(): Promise<void> {
  if (refreshing) return;
  refreshing = true;
  try {
    const rows = await guarded(() => api.getAssets());
    if (rows) {
      queue.load(rows);
      renderAssets();
    }
    await Promise.all([refreshPlan(), refreshIntegrity(), showPreview()]);
  } finally {
    refreshing = false;
  }
}

function wireAdvance(): void {
  el<HTMLButtonElement>("adv-min").onclick = () => guarded(() => api.advance(6)).then(() => refreshPanels());
  el<HTMLButtonElement>("adv-orbit").onclick = () => guarded(() => api.advance(572)).then(() => refreshPanels());
  el<HTMLButtonElement>("adv-day").onclick = () => guarded(() => api.advance(8640)).then(() => refreshPanels());
  el<HTMLButtonElement>("capture").onclick = () =>
    guarded(() => api.sendCommand({ type: "capture", channel: 0 })).then(refreshPanels);
  el<HTMLButtonElement>("finetune").onclick = () =>
    guarded(() => api.sendCommand({ type: "trigger_finetune" })).then(refreshPanels);
}

function start(): void {
  wireAdvance();
  store.subscribe((s) => {
    renderStatus(s);
    renderSessions(s);
  });
  const ctl = new AbortController();
  void store.watch(api, ctl.signal);
  void refreshPanels();
  // panels poll lazily off the push stream: a new snapshot means state moved
  let lastTime = "";
  store.subscribe((s) => {
    if (s.time !== lastTime) {
      lastTime = s.time;
      void refreshPanels();
    }
  });
}

start();
