import { describe, expect, it } from "vitest";

import type { ColumnSchema } from "../src/api.js";
import { changedCells, changeFraction, numericDelta } from "../src/diff.js";

const ORIGINAL = ["red", "crimson", "wood", "55", "50", "matte"];

describe("changedCells", () => {
  it("flags exactly the differing columns", () => {
    const row = ["amber", "honey", "wood", "55", "50", "matte"];
    expect(changedCells(ORIGINAL, row)).toEqual([true, true, false, false, false, false]);
  });

  it("is all-false for an identical row", () => {
    expect(changedCells(ORIGINAL, [...ORIGINAL])).toEqual(new Array(6).fill(false));
  });

  it("rejects rows of the wrong width", () => {
    expect(() => changedCells(ORIGINAL, ["red"])).toThrow(/expected 6/);
  });
});

describe("changeFraction", () => {
  it("is the fraction of changed columns", () => {
    const row = ["amber", "honey", "wood", "55", "50", "gloss"];
    expect(changeFraction(ORIGINAL, row)).toBeCloseTo(3 / 6);
  });
});

describe("numericDelta", () => {
  const numeric: ColumnSchema = {
    name: "size",
    kind: "numeric",
    values: [],
    bin_edges: [0, 100],
    bin_representatives: [50],
  };

  it("reports the signed move for numeric columns", () => {
    expect(numericDelta(numeric, "50", "62.5")).toBeCloseTo(12.5);
  });

  it("is null for categorical columns and unparsable values", () => {
    expect(numericDelta({ ...numeric, kind: "categorical" }, "red", "blue")).toBeNull();
    expect(numericDelta(numeric, "oops", "62.5")).toBeNull();
  });
});
