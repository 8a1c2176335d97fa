/** Integrity panel: unrecoverable alerts and the repair-upload action. */
import { ApiClient, ApiError, CommandResult, IntegritySummary } from "./api";

export function alertNames(summary: IntegritySummary): string[] {
  return summary.unrecoverable;
}

export function toBase64(bytes: Uint8Array): string {
  if (typeof Buffer !== "undefined") return Buffer.from(bytes).toString("base64");
  let bin = "";
  for (let i = 0; i < bytes.length; i += 0x8000) {
    bin += String.fromCharCode(...bytes.subarray(i, i + 0x8000));
  }
  return btoa(bin);
}

export type RepairOutcome =
  | { ok: true; result: CommandResult }
  | { ok: false; banner: string };

/** Upload a known-good copy. Digest mismatches and budget rejections come
 * back as banners instead of throws so the panel can render them inline. */
export async function repairUpload(api: ApiClient, name: string, content: Uint8Array): Promise<RepairOutcome> {
  try {
    const result = await api.sendCommand({
      type: "repair_upload",
      name,
      content_b64: toBase64(content),
    });
    return { ok: true, result };
  } catch (exc) {
    if (exc instanceof ApiError && exc.kind === "budget") {
      return { ok: false, banner: `repair rejected by uplink budget: ${exc.message}` };
    }
    if (exc instanceof ApiError && /digest/i.test(exc.message)) {
      return { ok: false, banner: `not a valid copy: ${exc.message}` };
    }
    throw exc;
  }
}

/** Fetch the ground-side copy of the model file for a one-click repair. */
export async function fetchGroundModel(api: ApiClient): Promise<Uint8Array> {
  const doc = await api.getModelContent();
  if (typeof Buffer !== "undefined") return new Uint8Array(Buffer.from(doc.content_b64, "base64"));
  const bin = atob(doc.content_b64);
  const out = new Uint8Array(bin.length);
  for (let i = 0; i < bin.length; i++) out[i] = bin.charCodeAt(i);
  return out;
}
