// Browser bootstrap: wires the service API, panel manager, what-if form and
// state persistence into the page. All explanation math happens server-side;
// this file only moves payloads around and renders them.

import { ApiClient, ApiError, StateConflictError } from './api.js';
import { Panel, PanelManager, PREDICT_LEVEL_KINDS } from './panels.js';
import { renderChart, renderErrorCard } from './render.js';
import { persistState, restoreState } from './state.js';
import { ColumnInfo, ServiceInfo, StateDoc } from './types.js';
import { validateDraft, WhatIfDraft } from './whatif.js';

const api = new ApiClient('');
const manager = new PanelManager(api);

let info: ServiceInfo;
let draft: WhatIfDraft = { row: 0, overrides: {} };

function $(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
}

function renderPanel(panel: Panel): string {
  const title = `${panel.kind} &middot; ${panel.models.join(', ')}`;
  const body = panel.error
    ? renderErrorCard(panel.error)
    : panel.payloads
      ? renderChart(panel.kind, panel.payloads)
      : '<div class="loading">computing&hellip;</div>';
  return (
    `<section class="panel" data-panel="${panel.id}">` +
    `<header><h3>${title}</h3>` +
    `<button class="close" data-close="${panel.id}">&times;</button></header>` +
    body +
    '</section>'
  );
}

function redraw(): void {
  const grid = $('panels');
  grid.innerHTML = manager.panels.map(renderPanel).join('');
  grid.querySelectorAll('button[data-close]').forEach((button) => {
    button.addEventListener('click', () => {
      manager.close(Number((button as HTMLElement).dataset.close));
      redraw();
    });
  });
}

function selectedModels(): string[] {
  const select = $('model-select') as HTMLSelectElement;
  return Array.from(select.selectedOptions).map((o) => o.value);
}

function chartParams(kind: string): Record<string, unknown> {
  const params: Record<string, unknown> = {};
  if (PREDICT_LEVEL_KINDS.has(kind)) {
    params.instance = draft.row;
    if (Object.keys(draft.overrides).length) params.overrides = { ...draft.overrides };
  }
  if (kind === 'fairness') {
    const protectedColumn = ($('protected-select') as HTMLSelectElement).value;
    const privileged = ($('privileged-input') as HTMLInputElement).value;
    params.protected = protectedColumn;
    params.privileged = privileged;
  }
  if (kind === 'profile') {
    params.profile_kind = ($('profile-kind') as HTMLSelectElement).value;
  }
  return params;
}

async function openChart(): Promise<void> {
  const kind = ($('kind-select') as HTMLSelectElement).value;
  const models = selectedModels();
  const status = $('open-status');
  status.textContent = '';
  if (!models.length) {
    status.textContent = 'pick at least one model';
    return;
  }
  if (PREDICT_LEVEL_KINDS.has(kind)) {
    const check = validateDraft(draft, featureColumns(), info.n_rows);
    if (!check.ok) {
      status.textContent = check.errors.map((e) => `${e.field}: ${e.message}`).join('; ');
      return;
    }
  }
  try {
    await manager.open(kind, models, chartParams(kind));
  } catch (error) {
    status.textContent = String(error);
  }
  redraw();
}

function featureColumns(): ColumnInfo[] {
  return info.columns.filter((c) => c.name !== info.target);
}

function renderWhatIfForm(): void {
  const form = $('whatif-fields');
  form.innerHTML = featureColumns()
    .map((column) => {
      const control =
        column.kind === 'numeric'
          ? `<input type="text" data-var="${column.name}" placeholder="unchanged">`
          : `<select data-var="${column.name}"><option value="">unchanged</option>` +
            (column.levels ?? []).map((l) => `<option>${l}</option>`).join('') +
            '</select>';
      return `<label>${column.name} ${control}<span class="field-error" data-err="${column.name}"></span></label>`;
    })
    .join('');
}

function collectDraft(): WhatIfDraft {
  const row = Number(($('row-input') as HTMLInputElement).value || '0');
  const overrides: Record<string, unknown> = {};
  $('whatif-fields')
    .querySelectorAll<HTMLInputElement | HTMLSelectElement>('[data-var]')
    .forEach((field) => {
      if (field.value !== '') overrides[field.dataset.var as string] = field.value;
    });
  return { row, overrides };
}

async function applyWhatIf(): Promise<void> {
  const candidate = collectDraft();
  const check = validateDraft(candidate, featureColumns(), info.n_rows);
  document
    .querySelectorAll<HTMLElement>('[data-err]')
    .forEach((el) => (el.textContent = ''));
  if (!check.ok) {
    for (const error of check.errors) {
      const slot = document.querySelector<HTMLElement>(`[data-err="${error.field}"]`);
      if (slot) slot.textContent = error.message;
      else $('whatif-status').textContent = `${error.field}: ${error.message}`;
    }
    return;
  }
  draft = { row: candidate.row, overrides: check.overrides };
  $('whatif-status').textContent = '';
  await manager.applyWhatIf(draft);
  redraw();
}

async function saveState(): Promise<void> {
  const doc = await persistState(api, manager, draft);
  const blob = new Blob([JSON.stringify(doc, null, 1)], { type: 'application/json' });
  const link = document.createElement('a');
  link.href = URL.createObjectURL(blob);
  link.download = 'arena-state.json';
  link.click();
  URL.revokeObjectURL(link.href);
}

async function loadState(file: File): Promise<void> {
  const status = $('state-status');
  status.textContent = '';
  let doc: StateDoc;
  try {
    doc = JSON.parse(await file.text());
  } catch {
    status.textContent = 'not a JSON state file';
    return;
  }
  try {
    const accepted = await restoreState(api, manager, doc);
    if (accepted.observations.length) {
      draft = {
        row: accepted.observations[0].row,
        overrides: { ...accepted.observations[0].overrides },
      };
      ($('row-input') as HTMLInputElement).value = String(draft.row);
    }
    redraw();
  } catch (error) {
    if (error instanceof StateConflictError) {
      status.textContent = `cannot restore, unresolved: ${error.unresolved.join(', ')}`;
    } else if (error instanceof ApiError) {
      status.textContent = error.message;
    } else {
      status.textContent = String(error);
    }
  }
}

async function boot(): Promise<void> {
  info = await api.info();
  $('service-label').textContent =
    `${info.models.length} model(s), ${info.n_rows} rows, target "${info.target}" (${info.task})`;

  const modelSelect = $('model-select') as HTMLSelectElement;
  modelSelect.innerHTML = info.models.map((m) => `<option selected>${m}</option>`).join('');

  const kindSelect = $('kind-select') as HTMLSelectElement;
  kindSelect.innerHTML = info.charts.map((c) => `<option>${c.kind}</option>`).join('');

  const protectedSelect = $('protected-select') as HTMLSelectElement;
  protectedSelect.innerHTML = featureColumns()
    .filter((c) => c.kind === 'categorical')
    .map((c) => `<option>${c.name}</option>`)
    .join('');

  ($('row-input') as HTMLInputElement).max = String(info.n_rows - 1);
  renderWhatIfForm();

  manager.onChange = () => redraw();
  $('open-button').addEventListener('click', () => void openChart());
  $('whatif-button').addEventListener('click', () => void applyWhatIf());
  $('save-button').addEventListener('click', () => void saveState());
  ($('load-input') as HTMLInputElement).addEventListener('change', (event) => {
    const file = (event.target as HTMLInputElement).files?.[0];
    if (file) void loadState(file);
  });
  $('row-input').addEventListener('change', () => {
    draft = { ...draft, row: Number(($('row-input') as HTMLInputElement).value || '0') };
  });
}

void boot();
