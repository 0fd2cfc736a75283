import { describe, expect, it } from "vitest";

import type { CounterfactualRequest, CounterfactualResponse } from "../src/api.js";
import { HistoryStore, sameRows } from "../src/history.js";

function fakeResponse(seed: number, rows: string[][]): CounterfactualResponse {
  return {
    method: "scd",
    seed,
    rows,
    per_row: [],
    report: {
      method: "scd",
      validity: 1,
      proximity: 0.8,
      raw_mean_distance: 0.2,
      diversity: 0.3,
      plausibility_recurrent: 5,
      plausibility_transformer: 5,
      valid_only: {},
    },
    loss_trace: [],
  };
}

const REQUEST: CounterfactualRequest = {
  row: ["red", "crimson", "wood", "55", "50", "matte"],
  desired_label: "pos",
  method: "scd",
  B: 4,
};

describe("HistoryStore", () => {
  it("pins the server-echoed seed even when the request omitted one", () => {
    const store = new HistoryStore();
    const entry = store.record(REQUEST, fakeResponse(17, [["amber"]]));
    expect(entry.request.seed).toBe(17);
    expect(store.replayRequest(entry.id)).toEqual({ ...REQUEST, seed: 17 });
  });

  it("keeps entries in order with distinct ids", () => {
    const store = new HistoryStore();
    const a = store.record(REQUEST, fakeResponse(1, []));
    const b = store.record({ ...REQUEST, method: "dice" }, fakeResponse(2, []));
    expect(store.list().map((e) => e.id)).toEqual([a.id, b.id]);
    expect(a.id).not.toBe(b.id);
  });

  it("snapshots rows so later mutation cannot corrupt history", () => {
    const store = new HistoryStore();
    const rows = [["amber", "honey"]];
    const entry = store.record(REQUEST, fakeResponse(3, rows));
    rows[0]![0] = "mutated";
    expect(entry.rows[0]![0]).toBe("amber");
  });

  it("throws for unknown replay ids", () => {
    expect(() => new HistoryStore().replayRequest(99)).toThrow(/no history entry/);
  });
});

describe("sameRows", () => {
  it("compares cell-by-cell", () => {
    expect(sameRows([["a", "b"]], [["a", "b"]])).toBe(true);
    expect(sameRows([["a", "b"]], [["a", "c"]])).toBe(false);
    expect(sameRows([["a"]], [])).toBe(false);
  });
});
