import { ApiClient, describeError, isAbort } from "./api.js";
import { SessionState } from "./state.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  node.append(...children);
  return node;
}

export class App {
  readonly state = new SessionState();
  measures: string[] = [];
  aggregations: string[] = ["min", "mean", "max", "sum"];
  // resolves when the most recently started action has settled; tests await it
  lastOp: Promise<void> = Promise.resolve();

  // Stale-response guard: every action bumps seq and aborts the previous
  // request; a response only touches state if its seq is still current.
  private seq = 0;
  private inflight: AbortController | null = null;

  constructor(private readonly root: HTMLElement, private readonly api: ApiClient) {}

  async init(): Promise<void> {
    try {
      const m = await this.api.measures();
      this.measures = m.measures;
      this.aggregations = m.aggregations;
      this.state.measure = m.default;
      this.state.aggregation = m.default_aggregation;
      this.state.n = m.default_n;
    } catch (err) {
      this.state.error = describeError(err);
    }
    this.render();
  }

  private begin(): { seq: number; signal: AbortSignal } {
    this.inflight?.abort();
    this.inflight = new AbortController();
    this.seq += 1;
    return { seq: this.seq, signal: this.inflight.signal };
  }

  private fresh(seq: number): boolean {
    return seq === this.seq;
  }

  async doResolve(): Promise<void> {
    const { seq, signal } = this.begin();
    try {
      const resp = await this.api.resolve(this.state.text, signal);
      if (!this.fresh(seq)) return;
      this.state.setResolved(resp);
      if (resp.recognized.length > 0) {
        this.state.step = "confirm";
        this.state.error = null;
      } else {
        this.state.error = "no paper ids found in the text";
      }
    } catch (err) {
      if (!this.fresh(seq) || isAbort(err)) return;
      this.state.error = describeError(err);
    }
    this.render();
  }

  async doRecommend(): Promise<void> {
    const ids = this.state.keptIds();
    if (ids.length === 0) {
      this.state.error = "keep at least one id";
      this.render();
      return;
    }
    const { seq, signal } = this.begin();
    const measure = this.state.measure || null;
    const aggregation = this.state.aggregation;
    try {
      const resp = await this.api.recommend({ ids, measure, aggregation, n: this.state.n }, signal);
      if (!this.fresh(seq)) return;
      this.state.items = resp.items;
      this.state.unknownIds = resp.unknown_ids;
      this.state.resultsFor = { ids, measure: resp.measure, aggregation: resp.aggregation };
      this.state.step = "results";
      this.state.error = null;
    } catch (err) {
      if (!this.fresh(seq) || isAbort(err)) return;
      this.state.error = describeError(err);
    }
    this.render();
  }

  async doRandom(): Promise<void> {
    const { seq, signal } = this.begin();
    try {
      const resp = await this.api.randomPaper(signal);
      if (!this.fresh(seq)) return;
      this.state.text = this.state.text ? `${this.state.text} ${resp.id}` : resp.id;
      this.state.error = null;
    } catch (err) {
      if (!this.fresh(seq) || isAbort(err)) return;
      this.state.error = describeError(err);
    }
    this.render();
  }

  render(): void {
    const s = this.state;
    this.root.replaceChildren();
    this.root.append(el("h1", {}, "paper recommendations"));
    if (s.error !== null) {
      this.root.append(el("p", { class: "error", "data-testid": "error" }, s.error));
    }
    if (s.step === "input") this.renderInput();
    else if (s.step === "confirm") this.renderConfirm();
    else this.renderResults();
  }

  private run(action: () => Promise<void>): void {
    this.lastOp = action();
  }

  private renderInput(): void {
    const s = this.state;
    const textarea = el("textarea", {
      "data-testid": "paste",
      rows: "6",
      placeholder: "paste text containing paper ids",
    });
    textarea.value = s.text;
    textarea.addEventListener("input", () => {
      s.text = textarea.value;
    });

    const resolveBtn = el("button", { "data-testid": "resolve" }, "Find ids");
    resolveBtn.addEventListener("click", () => this.run(() => this.doResolve()));
    const randomBtn = el("button", { "data-testid": "random" }, "Random paper");
    randomBtn.addEventListener("click", () => this.run(() => this.doRandom()));

    this.root.append(
      el("p", {}, "Paste text that mentions papers, or start from a random one."),
      textarea,
      el("div", { class: "actions" }, resolveBtn, randomBtn),
    );
  }

  private renderConfirm(): void {
    const s = this.state;
    const list = el("ul", { "data-testid": "resolved" });
    for (const choice of s.choices) {
      const box = el("input", {
        type: "checkbox",
        "data-testid": `keep-${choice.id}`,
      }) as HTMLInputElement;
      box.checked = choice.kept;
      box.addEventListener("change", () => {
        s.toggle(choice.id);
        this.render();
      });
      const label = el("label", {}, box, ` ${choice.id}`);
      if (!choice.known) label.append(el("span", { class: "badge" }, " (not in corpus)"));
      list.append(el("li", { "data-id": choice.id }, label));
    }

    const recommendBtn = el("button", { "data-testid": "recommend" }, "Recommend");
    recommendBtn.addEventListener("click", () => this.run(() => this.doRecommend()));
    const backBtn = el("button", { "data-testid": "back" }, "Back");
    backBtn.addEventListener("click", () => {
      s.step = "input";
      this.render();
    });

    const kept = s.keptIds().length;
    this.root.append(
      el("p", {}, `Found ${s.choices.length} ids, ${kept} kept. Untick any to drop them.`),
      list,
    );
    if (s.unrecognized.length > 0) {
      const frag = el("ul", { "data-testid": "unrecognized" });
      for (const text of s.unrecognized) frag.append(el("li", {}, text));
      this.root.append(el("p", {}, "Not recognized as ids:"), frag);
    }
    this.root.append(el("div", { class: "actions" }, recommendBtn, backBtn));
  }

  private renderResults(): void {
    const s = this.state;
    const ctx = s.resultsFor;
    if (ctx !== null) {
      this.root.append(
        el(
          "p",
          { "data-testid": "results-for" },
          `${ctx.ids.length} input papers · ${ctx.measure} · ${ctx.aggregation}`,
        ),
      );
    }

    const measureSel = el("select", { "data-testid": "measure-select" }) as HTMLSelectElement;
    for (const name of this.measures) measureSel.append(el("option", { value: name }, name));
    measureSel.value = s.measure;
    measureSel.addEventListener("change", () => {
      s.measure = measureSel.value;
      this.run(() => this.doRecommend());
    });

    const aggSel = el("select", { "data-testid": "aggregation-select" }) as HTMLSelectElement;
    for (const name of this.aggregations) aggSel.append(el("option", { value: name }, name));
    aggSel.value = s.aggregation;
    aggSel.addEventListener("change", () => {
      s.aggregation = aggSel.value;
      this.run(() => this.doRecommend());
    });

    const table = el("table", { "data-testid": "results" });
    table.append(
      el(
        "thead",
        {},
        el("tr", {}, el("th", {}, "rank"), el("th", {}, "id"), el("th", {}, "title"), el("th", {}, "score")),
      ),
    );
    const tbody = el("tbody");
    // rows appear exactly in response order; the service owns the ranking
    for (const item of s.items) {
      tbody.append(
        el(
          "tr",
          { "data-id": item.id },
          el("td", {}, String(item.rank)),
          el("td", {}, item.id),
          el("td", {}, item.title ?? ""),
          el("td", {}, item.score.toPrecision(6)),
        ),
      );
    }
    table.append(tbody);

    const adjustBtn = el("button", { "data-testid": "adjust" }, "Adjust ids");
    adjustBtn.addEventListener("click", () => {
      s.step = "confirm";
      this.render();
    });
    const restartBtn = el("button", { "data-testid": "restart" }, "Start over");
    restartBtn.addEventListener("click", () => {
      s.step = "input";
      this.render();
    });

    this.root.append(
      el("div", { class: "controls" }, el("label", {}, "measure ", measureSel), el("label", {}, "aggregation ", aggSel)),
      table,
    );
    if (s.unknownIds.length > 0) {
      this.root.append(
        el("p", { "data-testid": "unknown-ids" }, `ignored unknown ids: ${s.unknownIds.join(", ")}`),
      );
    }
    if (s.items.length === 0) {
      this.root.append(el("p", {}, "No recommendations for this set."));
    }
    this.root.append(el("div", { class: "actions" }, adjustBtn, restartBtn));
  }
}
