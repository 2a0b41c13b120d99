// Review session state machine. Owns the current case, the verdict draft,
// and the submission lifecycle; the view renders whatever this holds.

import { fetchNextCase, submitReview } from './api.js';
import type { FetchLike } from './api.js';
import { clearDraft, loadDraft, saveDraft } from './storage.js';
import type { KeyValueStore } from './storage.js';
import { DIMENSIONS } from './types.js';
import type { CasePayload, Dimension, Verdict, VerdictDraft } from './types.js';

export type SessionStatus = 'idle' | 'loading' | 'reviewing' | 'done' | 'error';

export interface SessionOptions {
  reviewer: string;
  store: KeyValueStore;
  fetchFn?: FetchLike;
  onChange?: (session: ReviewSession) => void;
}

export class ReviewSession {
  readonly reviewer: string;
  status: SessionStatus = 'idle';
  current: CasePayload | null = null;
  verdicts: VerdictDraft = {};
  note = '';
  submitting = false;
  lastError = '';

  private readonly store: KeyValueStore;
  private readonly fetchFn: FetchLike;
  private readonly onChange: (session: ReviewSession) => void;

  constructor(options: SessionOptions) {
    this.reviewer = options.reviewer;
    this.store = options.store;
    this.fetchFn = options.fetchFn ?? fetch;
    this.onChange = options.onChange ?? (() => undefined);
  }

  private notify(): void {
    this.onChange(this);
  }

  async start(): Promise<void> {
    this.status = 'loading';
    this.notify();
    await this.advance();
  }

  private async advance(): Promise<void> {
    const result = await fetchNextCase(this.reviewer, this.fetchFn);
    if (result.kind === 'done') {
      this.status = 'done';
      this.current = null;
      this.verdicts = {};
      this.note = '';
    } else if (result.kind === 'error') {
      this.status = 'error';
      this.lastError = result.message;
    } else {
      this.status = 'reviewing';
      this.current = result.payload;
      const draft = loadDraft(this.store, this.reviewer, result.payload.case_id);
      this.verdicts = draft ? { ...draft.verdicts } : {};
      this.note = draft ? draft.note : '';
    }
    this.notify();
  }

  setVerdict(dimension: Dimension, verdict: Verdict): void {
    if (this.status !== 'reviewing' || this.current === null) return;
    this.verdicts[dimension] = verdict;
    this.persistDraft();
    this.notify();
  }

  // No notify here: a re-render per keystroke would steal textarea focus,
  // and nothing else on screen depends on the note.
  setNote(note: string): void {
    if (this.status !== 'reviewing' || this.current === null) return;
    this.note = note;
    this.persistDraft();
  }

  private persistDraft(): void {
    if (this.current === null) return;
    saveDraft(this.store, this.reviewer, this.current.case_id, {
      verdicts: this.verdicts,
      note: this.note,
    });
  }

  canSubmit(): boolean {
    return (
      this.status === 'reviewing' &&
      !this.submitting &&
      this.current !== null &&
      DIMENSIONS.every((dim) => this.verdicts[dim] !== undefined)
    );
  }

  /** Submit the current verdicts. Returns true when the case was recorded. */
  async submit(): Promise<boolean> {
    if (!this.canSubmit() || this.current === null) return false;
    const caseId = this.current.case_id;
    const verdicts = Object.fromEntries(
      DIMENSIONS.map((dim) => [dim, this.verdicts[dim] as Verdict]),
    ) as Record<Dimension, Verdict>;

    this.submitting = true;
    this.lastError = '';
    this.notify();
    try {
      const result = await submitReview(
        { reviewer_id: this.reviewer, case_id: caseId, verdicts, note: this.note },
        this.fetchFn,
      );
      if (result.kind === 'ok' || result.kind === 'duplicate') {
        // Duplicate means another tab or an earlier attempt already recorded
        // this case; either way it is done for this reviewer.
        clearDraft(this.store, this.reviewer, caseId);
        this.submitting = false;
        await this.advance();
        return true;
      }
      // Rejected or unreachable: keep the draft so nothing typed is lost.
      this.lastError = result.message;
      return false;
    } finally {
      this.submitting = false;
      this.notify();
    }
  }
}
