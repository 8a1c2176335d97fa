/** Last-received mission state, and the loop that keeps it fresh.
 *
 * The store renders only what the server sent: it holds the latest
 * snapshot verbatim and never synthesizes values. When the push stream
 * drops, the watcher pulls one full snapshot, then reconnects; commands
 * live elsewhere (api.ts), so a reconnect can never re-emit one.
 */
import { ApiClient, Snapshot } from "./api";

export type Listener = (snapshot: Snapshot) => void;

export interface WatchStats {
  streams: number;
  resyncs: number;
  snapshots: number;
}

export class StateStore {
  private listeners: Listener[] = [];
  current: Snapshot | null = null;
  stats: WatchStats = { streams: 0, resyncs: 0, snapshots: 0 };

  subscribe(fn: Listener): () => void {
    this.listeners.push(fn);
    if (this.current) fn(this.current);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== fn);
    };
  }

  apply(snapshot: Snapshot): void {
    this.current = snapshot;
    this.stats.snapshots++;
    for (const fn of this.listeners) fn(snapshot);
  }

  /** Follow the push stream; on any drop, resync from a full snapshot and
   * reconnect after `retryMs`. Runs until the signal aborts. */
  async watch(api: ApiClient, signal: AbortSignal, retryMs = 1000): Promise<void> {
    while (!signal.aborted) {
      this.stats.streams++;
      try {
        await api.streamSnapshots((s) => this.apply(s), signal);
      } catch {
        // fall through to resync
      }
      if (signal.aborted) return;
      this.stats.resyncs++;
      try {
        this.apply(await api.getState());
      } catch {
        // server unreachable; retry below
      }
      if (signal.aborted) return;
      await new Promise((r) => setTimeout(r, retryMs));
    }
  }
}

export function fmtBytes(n: number): string {
  if (n >= 1_000_000) return (n / 1_000_000).toFixed(2) + " MB";
  if (n >= 1_000) return (n / 1_000).toFixed(1) + " kB";
  return n + " B";
}

export function pct(used: number, cap: number): number {
  return cap > 0 ? Math.min(100, (100 * used) / cap) : 0;
}
