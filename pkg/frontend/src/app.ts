/** DOM wiring for the what-if explorer.
 *
 * The page has three panels: a row composer driven by the server schema,
 * a counterfactual table with changed cells highlighted, and a history
 * list whose entries replay with their stored seeds.  Knob defaults come
 * from GET /api/schema, never from hardcoded values.
 */

import { ApiError, TabcfClient } from "./api.js";
import type { CounterfactualRequest, CounterfactualResponse, Schema } from "./api.js";
import { changedCells } from "./diff.js";
import { HistoryStore } from "./history.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: Array<Node | string>
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  node.append(...children);
  return node;
}

export class ExplorerApp {
  private history = new HistoryStore();
  private schema!: Schema;

  constructor(
    private readonly client: TabcfClient,
    private readonly root: HTMLElement,
  ) {}

  async start(): Promise<void> {
    this.schema = await this.client.getSchema();
    this.root.replaceChildren(
      el("section", { id: "composer" }, el("h2", {}, "Input row")),
      el("section", { id: "knobs" }, el("h2", {}, "Generation knobs")),
      el("section", { id: "prediction" }),
      el("section", { id: "results" }),
      el("section", { id: "compare" }),
      el("section", { id: "history" }, el("h2", {}, "History")),
    );
    this.renderComposer();
    this.renderKnobs();
  }

  private field(id: string): HTMLInputElement | HTMLSelectElement {
    return this.root.querySelector(`#${id}`) as HTMLInputElement | HTMLSelectElement;
  }

  private renderComposer(): void {
    const section = this.root.querySelector("#composer")!;
    for (const column of this.schema.columns) {
      let input: HTMLElement;
      if (column.kind === "categorical") {
        input = el(
          "select",
          { id: `col-${column.name}` },
          ...column.values.map((v) => el("option", { value: v }, v)),
        );
      } else {
        const first = column.bin_representatives[0] ?? 0;
        input = el("input", {
          id: `col-${column.name}`,
          type: "number",
          value: String(first),
        });
      }
      section.append(el("label", { for: `col-${column.name}` }, column.name), input);
    }
    const desired = el(
      "select",
      { id: "desired" },
      ...this.schema.classes.map((c) => el("option", { value: c }, c)),
    );
    section.append(
      el("label", { for: "desired" }, "desired class"),
      desired,
      el("button", { id: "predict" }, "Predict"),
      el("button", { id: "generate" }, "Counterfactuals"),
      el("button", { id: "compare-methods" }, "Compare methods"),
    );
    section.querySelector("#predict")!.addEventListener("click", () => void this.predict());
    section.querySelector("#generate")!.addEventListener("click", () => void this.generate());
    section
      .querySelector("#compare-methods")!
      .addEventListener("click", () => void this.compareMethods());
  }

  private renderKnobs(): void {
    const d = this.schema.defaults;
    const section = this.root.querySelector("#knobs")!;
    section.append(
      el("label", { for: "method" }, "method"),
      el(
        "select",
        { id: "method" },
        ...d.methods.map((m) =>
          el("option", m === d.method ? { value: m, selected: "" } : { value: m }, m),
        ),
      ),
      el("label", { for: "knob-B" }, "B"),
      el("input", { id: "knob-B", type: "number", min: "1", value: String(d.B) }),
      el("label", { for: "knob-tau" }, "guided steps"),
      el("input", {
        id: "knob-tau",
        type: "number",
        min: "1",
        max: String(d.tau_max),
        value: String(d.tau),
      }),
      el("label", { for: "knob-eta" }, "step size"),
      el("input", { id: "knob-eta", type: "number", step: "0.05", value: String(d.eta) }),
      el("label", { for: "knob-seed" }, "seed"),
      el("input", { id: "knob-seed", type: "number", value: String(d.seed) }),
    );
  }

  currentRow(): string[] {
    return this.schema.columns.map((c) => String(this.field(`col-${c.name}`).value));
  }

  private currentRequest(): CounterfactualRequest {
    return {
      row: this.currentRow(),
      desired_label: this.field("desired").value,
      method: this.field("method").value,
      B: Number(this.field("knob-B").value),
      tau: Number(this.field("knob-tau").value),
      eta: Number(this.field("knob-eta").value),
      seed: Number(this.field("knob-seed").value),
    };
  }

  private showError(target: Element, err: unknown): void {
    const problems =
      err instanceof ApiError
        ? err.problems.map((p) => `${p.column ?? "request"}: ${p.error}`)
        : [String(err)];
    target.replaceChildren(
      el("ul", { class: "errors" }, ...problems.map((p) => el("li", {}, p))),
    );
  }

  async predict(): Promise<void> {
    const target = this.root.querySelector("#prediction")!;
    try {
      const pred = await this.client.predict(this.currentRow());
      target.replaceChildren(
        el("h2", {}, `Predicted: ${pred.predicted}`),
        el(
          "ul",
          {},
          ...Object.entries(pred.probabilities).map(([name, p]) =>
            el("li", {}, `${name}: ${(p * 100).toFixed(1)}%`),
          ),
        ),
      );
    } catch (err) {
      this.showError(target, err);
    }
  }

  async generate(request?: CounterfactualRequest): Promise<CounterfactualResponse | null> {
    const target = this.root.querySelector("#results")!;
    const req = request ?? this.currentRequest();
    try {
      const res = await this.client.counterfactuals(req);
      this.history.record(req, res);
      this.renderResult(target, req.row, res);
      this.renderHistory();
      return res;
    } catch (err) {
      this.showError(target, err);
      return null;
    }
  }

  private renderResult(target: Element, original: string[], res: CounterfactualResponse): void {
    const header = el(
      "tr",
      {},
      el("th", {}, "#"),
      ...this.schema.columns.map((c) => el("th", {}, c.name)),
      el("th", {}, "predicted"),
    );
    const body = res.rows.map((row, i) => {
      const changed = changedCells(original, row);
      return el(
        "tr",
        {},
        el("td", {}, String(i + 1)),
        ...row.map((v, j) => el("td", changed[j] ? { class: "changed" } : {}, v)),
        el("td", {}, res.per_row[i]?.predicted_label ?? "?"),
      );
    });
    const r = res.report;
    target.replaceChildren(
      el("h2", {}, `${res.method} (seed ${res.seed})`),
      el("table", {}, header, ...body),
      el(
        "p",
        {},
        `validity ${r.validity.toFixed(2)} · proximity ${r.proximity.toFixed(2)} · ` +
          `diversity ${r.diversity.toFixed(2)} · ` +
          `nll ${r.plausibility_recurrent.toFixed(2)}/${r.plausibility_transformer.toFixed(2)}`,
      ),
    );
  }

  /** Run every server-advertised method on the same row, side by side. */
  async compareMethods(): Promise<void> {
    const target = this.root.querySelector("#compare")!;
    const base = this.currentRequest();
    target.replaceChildren(el("h2", {}, "Method comparison"));
    for (const method of this.schema.defaults.methods) {
      const holder = el("div", { class: "method-result" });
      target.append(holder);
      try {
        const res = await this.client.counterfactuals({ ...base, method });
        this.history.record({ ...base, method }, res);
        this.renderResult(holder, base.row, res);
      } catch (err) {
        this.showError(holder, err);
      }
    }
    this.renderHistory();
  }

  private renderHistory(): void {
    const target = this.root.querySelector("#history")!;
    const items = this.history.list().map((entry) => {
      const button = el("button", {}, "replay");
      button.addEventListener("click", () => {
        void this.generate(this.history.replayRequest(entry.id));
      });
      return el(
        "li",
        {},
        `#${entry.id} ${entry.method} seed=${entry.seed} ` +
          `validity=${entry.validity.toFixed(2)} `,
        button,
      );
    });
    target.replaceChildren(el("h2", {}, "History"), el("ul", {}, ...items));
  }
}
