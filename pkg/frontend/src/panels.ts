// Panel lifecycle: open charts, recompute on interaction, discard stale
// responses by sequence number, and round-trip through the state document.

import { ApiClient, ApiError } from './api.js';
import { Explanation, StateChart, StateDoc } from './types.js';
import { WhatIfDraft } from './whatif.js';

export const PREDICT_LEVEL_KINDS = new Set(['breakdown', 'shapley', 'cp']);

export interface Panel {
  id: number;
  kind: string;
  models: string[];
  params: Record<string, unknown>;
  seq: number;
  payloads: Explanation[] | null;
  error: string | null;
}

export class PanelManager {
  panels: Panel[] = [];
  private nextId = 0;
  onChange: (panel: Panel) => void = () => {};

  constructor(private api: ApiClient) {}

  async open(
    kind: string,
    models: string[],
    params: Record<string, unknown>
  ): Promise<Panel> {
    const panel: Panel = {
      id: this.nextId++,
      kind,
      models: [...models],
      params: { ...params },
      seq: 0,
      payloads: null,
      error: null,
    };
    this.panels.push(panel);
    await this.recompute(panel);
    return panel;
  }

  close(id: number): void {
    this.panels = this.panels.filter((p) => p.id !== id);
  }

  /** At most one in-flight compute matters per panel: newer calls supersede. */
  async recompute(panel: Panel): Promise<void> {
    const seq = ++panel.seq;
    try {
      const payloads = await Promise.all(
        panel.models.map((model) => this.api.compute(panel.kind, model, panel.params))
      );
      if (panel.seq !== seq) return; // a newer interaction superseded this one
      panel.payloads = payloads;
      panel.error = null;
    } catch (error) {
      if (panel.seq !== seq) return;
      panel.payloads = null;
      panel.error =
        error instanceof ApiError
          ? `${error.status}: ${error.message}`
          : String(error);
    }
    this.onChange(panel);
  }

  /** Recompute every open predict-level panel with the draft's overrides. */
  async applyWhatIf(draft: WhatIfDraft): Promise<void> {
    const affected = this.panels.filter((p) => PREDICT_LEVEL_KINDS.has(p.kind));
    await Promise.all(
      affected.map((panel) => {
        panel.params = {
          ...panel.params,
          instance: draft.row,
          overrides: { ...draft.overrides },
        };
        if (Object.keys(draft.overrides).length === 0) {
          delete (panel.params as Record<string, unknown>).overrides;
        }
        return this.recompute(panel);
      })
    );
  }

  stateCharts(): StateChart[] {
    return this.panels.map((p) => ({
      kind: p.kind,
      models: [...p.models],
      params: { ...p.params },
    }));
  }

  /** Replace all panels with the ones described by a state document. */
  async restore(doc: StateDoc): Promise<void> {
    this.panels = [];
    for (const chart of doc.charts) {
      await this.open(chart.kind, chart.models, chart.params);
    }
  }
}
