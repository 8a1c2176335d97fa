/** Queue editor: turn a reorder of the asset list into the minimal set of
 * set_priority commands, apply them optimistically, and revert when the
 * uplink budget rejects one mid-batch.
 */
import { ApiClient, ApiError, AssetRow, Command } from "./api";

/** Priorities implied by a full ordering: top of the list gets the largest
 * value so the downlink planner (highest priority first) matches it. */
export function prioritiesFor(orderedIds: number[]): Map<number, number> {
  const out = new Map<number, number>();
  orderedIds.forEach((id, i) => out.set(id, orderedIds.length - i));
  return out;
}

/** Commands needed to realize `orderedIds`; a no-op reorder yields []. */
export function reorderCommands(rows: AssetRow[], orderedIds: number[]): Command[] {
  const currentOrder = [...rows]
    .sort((a, b) => b.priority - a.priority || a.asset_id - b.asset_id)
    .map((r) => r.asset_id);
  if (currentOrder.join(",") === orderedIds.join(",")) return [];
  const want = prioritiesFor(orderedIds);
  const cmds: Command[] = [];
  for (const row of rows) {
    const p = want.get(row.asset_id);
    if (p !== undefined && p !== row.priority) {
      cmds.push({ type: "set_priority", asset_id: row.asset_id, priority: p });
    }
  }
  return cmds;
}

export interface ReorderOutcome {
  applied: number;
  reverted: boolean;
  banner: string | null;
}

export class QueueEditor {
  rows: AssetRow[] = [];
  banner: string | null = null;

  load(rows: AssetRow[]): void {
    this.rows = rows.map((r) => ({ ...r }));
  }

  /** Ordered view the panel renders, highest priority first. */
  order(): number[] {
    return [...this.rows]
      .sort((a, b) => b.priority - a.priority || a.asset_id - b.asset_id)
      .map((r) => r.asset_id);
  }

  /** Apply a reorder optimistically; on budget rejection, revert the local
   * rows to their pre-reorder priorities and surface a banner. Commands
   * already accepted by the server stay accepted (the next snapshot wins);
   * only the local optimistic view rolls back.
   */
  async applyOrder(api: ApiClient, orderedIds: number[]): Promise<ReorderOutcome> {
    const cmds = reorderCommands(this.rows, orderedIds);
    if (cmds.length === 0) return { applied: 0, reverted: false, banner: null };
    const before = this.rows.map((r) => ({ ...r }));
    const want = prioritiesFor(orderedIds);
    for (const row of this.rows) {
      const p = want.get(row.asset_id);
      if (p !== undefined) row.priority = p;
    }
    let applied = 0;
    for (const cmd of cmds) {
      try {
        await api.sendCommand(cmd);
        applied++;
      } catch (exc) {
        if (exc instanceof ApiError && exc.kind === "budget") {
          this.rows = before;
          this.banner = `reorder rejected by uplink budget: ${exc.message}`;
          return { applied, reverted: true, banner: this.banner };
        }
        throw exc;
      }
    }
    this.banner = null;
    return { applied, reverted: false, banner: null };
  }
}
