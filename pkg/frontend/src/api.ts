/** Typed client for the mission server's HTTP interface.
 *
 * Reads are plain GETs. Every state change goes through POST /api/command;
 * commands are serialized through one in-flight queue and each carries a
 * correlation id so a retry is always a visible, distinct submission.
 */

export interface OrbitState {
  lat_deg: number;
  lon_deg: number;
  alt_km: number;
}

export interface ThermalReadout {
  t_nano_c: number;
  t_frame_c: number;
  gate: string;
}

export interface BudgetGauges {
  day: number;
  downlink_used: number;
  downlink_cap: number;
  uplink_used: number;
  uplink_cap: number;
  reserve_used: number;
  reserve_cap: number;
}

export interface SessionRow {
  id: number;
  asset_id: number;
  target: string;
  state: string;
  next_offset: number;
  target_bytes: number;
}

export interface Snapshot {
  time: string;
  day: number;
  finished: boolean;
  orbit: OrbitState;
  zone: string;
  eclipse: boolean;
  thermal: ThermalReadout;
  budget: BudgetGauges;
  storage: { used_bytes: number; capacity_bytes: number; assets: number };
  integrity: { entries: number; unrecoverable: string[] };
  model: { version: number; trained_on: number; accuracy: number | null };
  sessions: SessionRow[];
}

export interface AssetRow {
  asset_id: number;
  time: string;
  kind: string;
  channel: number;
  width: number;
  height: number;
  stream_length: number;
  downlinked_bytes: number;
  priority: number;
  label: string | null;
  probability: number | null;
  label_source: string | null;
}

export interface LadderStep {
  segments: number;
  bytes: number;
  received: boolean;
  psnr: number | null;
}

export interface Ladder {
  asset_id: number;
  total_bytes: number;
  downlinked_bytes: number;
  lossless: boolean;
  steps: LadderStep[];
}

export interface AssetDetail extends AssetRow {
  ladder: Ladder;
}

export interface PlanGrant {
  window: number;
  channel: string;
  asset_id: number;
  offset: number;
  nbytes: number;
  target: string;
}

export interface IntegrityEntry {
  digest: string;
  copies: number;
  unrecoverable: boolean;
}

export interface IntegritySummary {
  entries: Record<string, IntegrityEntry>;
  unrecoverable: string[];
}

export type Command =
  | { type: "capture"; channel: number; quality?: number; lossless?: boolean }
  | { type: "set_priority"; asset_id: number; priority: number }
  | { type: "start_transfer"; asset_id: number; target: string; segments?: number }
  | { type: "abort_transfer"; session_id: number }
  | { type: "delete_asset"; asset_id: number }
  | { type: "repair_upload"; name: string; content_b64: string }
  | { type: "set_zone_policy"; polar_lat_deg: number }
  | { type: "trigger_finetune" };

export interface CommandResult {
  status: string;
  [key: string]: unknown;
}

/** Failure classes the panels care about, mapped from HTTP status. */
export type ErrorKind = "validation" | "budget" | "gate" | "not_found" | "network";

export class ApiError extends Error {
  kind: ErrorKind;
  status: number;

  constructor(kind: ErrorKind, status: number, message: string) {
    super(message);
    this.kind = kind;
    this.status = status;
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

function kindFor(status: number): ErrorKind {
  if (status === 429) return "budget";
  if (status === 409) return "gate";
  if (status === 404) return "not_found";
  return "validation";
}

async function reasonFrom(res: Response): Promise<string> {
  try {
    const doc = await res.json();
    return typeof doc?.error === "string" ? doc.error : JSON.stringify(doc);
  } catch {
    return `http ${res.status}`;
  }
}

export class ApiClient {
  readonly base: string;
  private fetchFn: FetchLike;
  private nextCid = 1;
  private inFlight: Promise<unknown> = Promise.resolve();

  constructor(base: string, fetchFn?: FetchLike) {
    this.base = base.replace(/\/$/, "");
    this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
  }

  private async getJson<T>(path: string): Promise<T> {
    let res: Response;
    try {
      res = await this.fetchFn(this.base + path);
    } catch (exc) {
      throw new ApiError("network", 0, String(exc));
    }
    if (!res.ok) throw new ApiError(kindFor(res.status), res.status, await reasonFrom(res));
    return (await res.json()) as T;
  }

  getState(): Promise<Snapshot> {
    return this.getJson("/api/state");
  }

  async getAssets(): Promise<AssetRow[]> {
    const doc = await this.getJson<{ assets: AssetRow[] }>("/api/assets");
    return doc.assets;
  }

  getAsset(assetId: number): Promise<AssetDetail> {
    return this.getJson(`/api/assets/${assetId}`);
  }

  async getPlan(): Promise<PlanGrant[]> {
    const doc = await this.getJson<{ grants: PlanGrant[] }>("/api/plan");
    return doc.grants;
  }

  getIntegrity(): Promise<IntegritySummary> {
    return this.getJson("/api/integrity");
  }

  async getModelContent(): Promise<{ name: string; content_b64: string }> {
    return this.getJson("/api/integrity/cloud_model/content");
  }

  previewUrl(assetId: number, segments?: number): string {
    const q = segments === undefined ? "" : `?segments=${segments}`;
    return `${this.base}/api/assets/${assetId}/preview.png${q}`;
  }

  /** Submit one command. Commands never overlap: each waits for the
   * previous response, and a failed send is never retried implicitly. */
  sendCommand(cmd: Command): Promise<CommandResult> {
    const cid = this.nextCid++;
    const run = async (): Promise<CommandResult> => {
      let res: Response;
      try {
        res = await this.fetchFn(this.base + "/api/command", {
          method: "POST",
          headers: { "Content-Type": "application/json" },
          body: JSON.stringify({ ...cmd, cid }),
        });
      } catch (exc) {
        throw new ApiError("network", 0, String(exc));
      }
      if (!res.ok) throw new ApiError(kindFor(res.status), res.status, await reasonFrom(res));
      return (await res.json()) as CommandResult;
    };
    const settled = this.inFlight.then(run, run);
    this.inFlight = settled.catch(() => undefined);
    return settled;
  }

  async advance(steps: number): Promise<Snapshot> {
    let res: Response;
    try {
      res = await this.fetchFn(this.base + "/api/advance", {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ steps }),
      });
    } catch (exc) {
      throw new ApiError("network", 0, String(exc));
    }
    if (!res.ok) throw new ApiError(kindFor(res.status), res.status, await reasonFrom(res));
    const doc = (await res.json()) as { steps_run: number; state: Snapshot };
    return doc.state;
  }

  /** Consume the server-push snapshot stream until it ends or is aborted.
   * Resolves normally on disconnect so callers can resynchronize. */
  async streamSnapshots(onSnapshot: (s: Snapshot) => void, signal?: AbortSignal): Promise<void> {
    let res: Response;
    try {
      res = await this.fetchFn(this.base + "/api/stream", { signal });
    } catch (exc) {
      if (signal?.aborted) return;
      throw new ApiError("network", 0, String(exc));
    }
    if (!res.ok || !res.body) throw new ApiError("network", res.status, "stream unavailable");
    const reader = res.body.getReader();
    const decoder = new TextDecoder();
    let buf = "";
    try {
      for (;;) {
        const { done, value } = await reader.read();
        if (done) return;
        buf += decoder.decode(value, { stream: true });
        let sep;
        while ((sep = buf.indexOf("\n\n")) >= 0) {
          const block = buf.slice(0, sep);
          buf = buf.slice(sep + 2);
          for (const line of block.split("\n")) {
            if (line.startsWith("data: ")) onSnapshot(JSON.parse(line.slice(6)) as Snapshot);
          }
        }
      }
    } catch (exc) {
      if (signal?.aborted) return;
      throw new ApiError("network", 0, String(exc));
    } finally {
      reader.releaseLock();
    }
  }
}
