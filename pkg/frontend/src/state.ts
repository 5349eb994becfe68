import type { RecommendItem, ResolveResponse } from "./api.js";

export type Step = "input" | "confirm" | "results";

export interface IdChoice {
  id: string;
  known: boolean;
  kept: boolean;
}

// Everything the UI shows lives here; rendering is a pure function of this
// object, so a discarded stale response simply never mutates it.
export class SessionState {
  step: Step = "input";
  text = "";
  choices: IdChoice[] = [];
  unrecognized: string[] = [];
  measure = "";
  aggregation = "sum";
  n = 20;
  items: RecommendItem[] = [];
  unknownIds: string[] = [];
  // what the visible result list was computed from
  resultsFor: { ids: string[]; measure: string; aggregation: string } | null = null;
  error: string | null = null;

  keptIds(): string[] {
    return this.choices.filter((c) => c.kept).map((c) => c.id);
  }

  setResolved(resp: ResolveResponse): void {
    this.choices = resp.recognized.map((r) => ({ id: r.id, known: r.known, kept: true }));
    this.unrecognized = [...resp.unrecognized];
  }

  toggle(id: string): void {
    for (const choice of this.choices) {
      if (choice.id === id) choice.kept = !choice.kept;
    }
  }
}
