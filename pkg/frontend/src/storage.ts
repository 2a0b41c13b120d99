// In-progress verdict drafts, keyed per reviewer and case, so a reload or
// crash never loses half-entered judgments. localStorage satisfies the
// interface; tests inject a Map-backed stub.

import { isVerdict } from './types.js';
import type { Dimension, VerdictDraft } from './types.js';
import { DIMENSIONS } from './types.js';

export interface KeyValueStore {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

export interface Draft {
  verdicts: VerdictDraft;
  note: string;
}

function draftKey(reviewer: string, caseId: string): string {
  return `review-draft:${reviewer}:${caseId}`;
}

export function saveDraft(
  store: KeyValueStore,
  reviewer: string,
  caseId: string,
  draft: Draft,
): void {
  store.setItem(draftKey(reviewer, caseId), JSON.stringify(draft));
}

export function loadDraft(
  store: KeyValueStore,
  reviewer: string,
  caseId: string,
): Draft | null {
  const raw = store.getItem(draftKey(reviewer, caseId));
  if (raw === null) return null;
  let parsed: unknown;
  try {
    parsed = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof parsed !== 'object' || parsed === null) return null;
  const data = parsed as { verdicts?: unknown; note?: unknown };
  const verdicts: VerdictDraft = {};
  if (typeof data.verdicts === 'object' && data.verdicts !== null) {
    for (const dim of DIMENSIONS) {
      const value = (data.verdicts as Record<Dimension, unknown>)[dim];
      if (typeof value === 'string' && isVerdict(value)) {
        verdicts[dim] = value;
      }
    }
  }
  return { verdicts, note: typeof data.note === 'string' ? data.note : '' };
}

export function clearDraft(store: KeyValueStore, reviewer: string, caseId: string): void {
  store.removeItem(draftKey(reviewer, caseId));
}
