/** Cell-level comparison between an input row and its counterfactuals. */

import type { ColumnSchema } from "./api.js";

/** True where the counterfactual differs from the original in that column. */
export function changedCells(original: string[], row: string[]): boolean[] {
  if (row.length !== original.length) {
    throw new Error(`row has ${row.length} cells, expected ${original.length}`);
  }
  return row.map((v, i) => v !== original[i]);
}

/** Fraction of columns changed, the explorer's at-a-glance sparsity figure. */
export function changeFraction(original: string[], row: string[]): number {
  const changed = changedCells(original, row);
  return changed.filter(Boolean).length / changed.length;
}

/**
 * For numeric columns, report the signed move in bin representatives so the
 * UI can say "weight: 50 -> 62 (+12)"; categorical columns get null.
 */
export function numericDelta(
  column: ColumnSchema,
  before: string,
  after: string,
): number | null {
  if (column.kind !== "numeric") return null;
  const a = Number(before);
  const b = Number(after);
  if (Number.isNaN(a) || Number.isNaN(b)) return null;
  return b - a;
}
