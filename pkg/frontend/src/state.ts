// Dashboard persistence: build the state document from open panels, push it
// to the service, and reopen panels from a restored document.

import { ApiClient } from './api.js';
import { PanelManager } from './panels.js';
import { StateDoc } from './types.js';
import { WhatIfDraft } from './whatif.js';

export const STATE_VERSION = '1';

export function buildState(manager: PanelManager, draft: WhatIfDraft | null): StateDoc {
  return {
    version: STATE_VERSION,
    charts: manager.stateCharts(),
    observations: draft ? [{ row: draft.row, overrides: { ...draft.overrides } }] : [],
    layout: manager.panels.map((p) => p.id),
  };
}

/** Upload the current dashboard and return the service's stored copy. */
export async function persistState(
  api: ApiClient,
  manager: PanelManager,
  draft: WhatIfDraft | null
): Promise<StateDoc> {
  await api.putState(buildState(manager, draft));
  return api.getState();
}

/**
 * Upload a saved document, then reopen every panel from the state the
 * service accepted. Raises StateConflictError (409) when the document
 * references models this service does not know.
 */
export async function restoreState(
  api: ApiClient,
  manager: PanelManager,
  doc: StateDoc
): Promise<StateDoc> {
  await api.putState(doc);
  const accepted = await api.getState();
  await manager.restore(accepted);
  return accepted;
}
