/** Preview panel logic: which image to show, the quality ladder, and the
 * "request more" / "sufficient, stop" actions. Pure functions over the
 * asset detail plus the live session list; rendering stays in main.ts.
 */
import { ApiClient, AssetDetail, CommandResult, SessionRow } from "./api";

export interface PreviewModel {
  assetId: number;
  /** at least one full segment is on the ground */
  available: boolean;
  /** url for the best received rung, or null when nothing decodes yet */
  imageUrl: string | null;
  segmentsReceived: number;
  segmentsTotal: number;
  ladder: AssetDetail["ladder"]["steps"];
  /** the transfer target a "request more" click would queue, if any */
  nextTarget: "thumbnail" | "preview" | "full" | null;
  /** live session that "sufficient - stop" would abort, if any */
  stopSession: SessionRow | null;
  /** shown instead of an image when available is false */
  placeholder: string | null;
}

const LIVE = new Set(["queued", "active", "paused"]);

export function buildPreviewModel(api: ApiClient, detail: AssetDetail, sessions: SessionRow[]): PreviewModel {
  const steps = detail.ladder.steps;
  const received = steps.filter((s) => s.received).length;
  const live = sessions.filter((s) => s.asset_id === detail.asset_id && LIVE.has(s.state));
  const stopSession = live.length ? live[live.length - 1] : null;

  let nextTarget: PreviewModel["nextTarget"] = null;
  if (received >= steps.length) {
    nextTarget = null; // ladder complete
  } else if (live.length) {
    nextTarget = null; // a transfer is already bringing more
  } else if (received === 0) {
    nextTarget = "thumbnail";
  } else if (received < Math.min(3, steps.length)) {
    nextTarget = "preview";
  } else {
    nextTarget = "full";
  }

  let placeholder: string | null = null;
  if (received === 0) {
    placeholder = stopSession
      ? `no segment on the ground yet (session ${stopSession.id} ${stopSession.state}, ` +
        `${stopSession.next_offset}/${stopSession.target_bytes} bytes)`
      : "no segment on the ground yet";
  }

  return {
    assetId: detail.asset_id,
    available: received > 0,
    imageUrl: received > 0 ? api.previewUrl(detail.asset_id, received) : null,
    segmentsReceived: received,
    segmentsTotal: steps.length,
    ladder: steps,
    nextTarget,
    stopSession,
    placeholder,
  };
}

export function requestMore(api: ApiClient, model: PreviewModel): Promise<CommandResult> {
  if (!model.nextTarget) return Promise.reject(new Error("nothing more to request"));
  return api.sendCommand({
    type: "start_transfer",
    asset_id: model.assetId,
    target: model.nextTarget,
  });
}

export function stopTransfer(api: ApiClient, model: PreviewModel): Promise<CommandResult> {
  if (!model.stopSession) return Promise.reject(new Error("no live session to stop"));
  return api.sendCommand({ type: "abort_transfer", session_id: model.stopSession.id });
}
