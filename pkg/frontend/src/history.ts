/** Generation history with exact replay.
 *
 * Every entry stores the request as sent plus the seed the server echoed
 * back, so replaying an entry re-issues a byte-identical request and the
 * service reproduces the same rows.
 */

import type { CounterfactualRequest, CounterfactualResponse } from "./api.js";

export interface HistoryEntry {
  id: number;
  at: string;
  request: CounterfactualRequest;
  seed: number;
  method: string;
  rows: string[][];
  validity: number;
}

export class HistoryStore {
  private entries: HistoryEntry[] = [];
  private nextId = 1;

  record(request: CounterfactualRequest, response: CounterfactualResponse): HistoryEntry {
    const entry: HistoryEntry = {
      id: this.nextId++,
      at: new Date().toISOString(),
      // Pin the seed the server actually used so a replay is exact even
      // when the original request left the seed to the server default.
      request: { ...request, seed: response.seed },
      seed: response.seed,
      method: response.method,
      rows: response.rows.map((r) => [...r]),
      validity: response.report.validity,
    };
    this.entries.push(entry);
    return entry;
  }

  /** The request to re-send for an exact replay of entry `id`. */
  replayRequest(id: number): CounterfactualRequest {
    const entry = this.entries.find((e) => e.id === id);
    if (!entry) throw new Error(`no history entry ${id}`);
    return { ...entry.request };
  }

  list(): readonly HistoryEntry[] {
    return this.entries;
  }

  clear(): void {
    this.entries = [];
  }
}

/** True when a replay reproduced the recorded rows exactly. */
export function sameRows(a: string[][], b: string[][]): boolean {
  return (
    a.length === b.length &&
    a.every((row, i) => {
      const other = b[i];
      return (
        other !== undefined &&
        row.length === other.length &&
        row.every((v, j) => v === other[j])
      );
    })
  );
}
