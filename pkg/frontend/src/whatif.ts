// What-if drafts: a base observation plus typed per-variable overrides,
// validated against the dataset schema before any request leaves the client.

import { ColumnInfo, FieldError } from './types.js';

export interface WhatIfDraft {
  row: number;
  overrides: Record<string, unknown>;
}

export interface DraftCheck {
  ok: boolean;
  overrides: Record<string, number | string>;
  errors: FieldError[];
}

export function validateDraft(
  draft: WhatIfDraft,
  columns: ColumnInfo[],
  nRows: number
): DraftCheck {
  const errors: FieldError[] = [];
  const overrides: Record<string, number | string> = {};
  if (!Number.isInteger(draft.row) || draft.row < 0 || draft.row >= nRows) {
    errors.push({ field: 'row', message: `row must be an integer in [0, ${nRows})` });
  }
  const byName = new Map(columns.map((c) => [c.name, c]));
  for (const [name, raw] of Object.entries(draft.overrides)) {
    const column = byName.get(name);
    if (!column) {
      errors.push({ field: name, message: 'unknown variable' });
      continue;
    }
    if (column.kind === 'numeric') {
      const value = typeof raw === 'number' ? raw : Number(String(raw).trim());
      if (!Number.isFinite(value) || String(raw).trim() === '') {
        errors.push({ field: name, message: 'expected a finite number' });
      } else {
        overrides[name] = value;
      }
    } else {
      const value = String(raw);
      if (!column.levels || !column.levels.includes(value)) {
        errors.push({
          field: name,
          message: `unknown level; expected one of ${column.levels?.join(', ') ?? ''}`,
        });
      } else {
        overrides[name] = value;
      }
    }
  }
  return { ok: errors.length === 0, overrides, errors };
}
