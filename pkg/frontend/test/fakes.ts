// Test doubles: a fetch implementation speaking the review service wire
// contract, and a Map-backed key-value store standing in for localStorage.

import type { KeyValueStore } from '../src/storage.js';
import { DIMENSIONS, VERDICTS } from '../src/types.js';
import type { CasePayload, Dimension } from '../src/types.js';

export class MemoryStore implements KeyValueStore {
  map = new Map<string, string>();

  getItem(key: string): string | null {
    return this.map.has(key) ? (this.map.get(key) as string) : null;
  }

  setItem(key: string, value: string): void {
    this.map.set(key, String(value));
  }

  removeItem(key: string): void {
    this.map.delete(key);
  }
}

function json(body: unknown, status: number): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'Content-Type': 'application/json' },
  });
}

export function makeCase(caseId: string, text?: string): CasePayload {
  const classification = {} as CasePayload['classification'];
  const codes: Record<Dimension, { code: string; label: string }> = {
    av_failed: { code: 'Y', label: 'Yes' },
    late_ai: { code: 'true', label: 'Yes' },
    primary_cause: { code: 'S', label: 'System' },
    failed_system: { code: 'PE', label: 'Perception' },
  };
  for (const dim of DIMENSIONS) classification[dim] = codes[dim];
  return {
    case_id: caseId,
    full_text: text ?? `Narrative:\nIncident ${caseId}.`,
    classification,
    progress: { submitted: 0, total: 0 },
  };
}

export class FakeReviewServer {
  queues = new Map<string, CasePayload[]>();
  submitted = new Set<string>();
  posts: Array<Record<string, unknown>> = [];
  failPosts = 0; // next N POSTs throw before reaching the "server"
  postDelayMs = 0;

  assign(reviewer: string, cases: CasePayload[]): void {
    this.queues.set(reviewer, cases);
  }

  private key(reviewer: string, caseId: string): string {
    return `${reviewer}:${caseId}`;
  }

  fetch = async (input: string, init?: RequestInit): Promise<Response> => {
    const url = new URL(input, 'http://review.test');
    if (url.pathname === '/api/cases/next') {
      return this.nextCase(url.searchParams.get('reviewer') ?? '');
    }
    if (url.pathname === '/api/reviews' && init?.method === 'POST') {
      return this.submitReview(init);
    }
    if (url.pathname === '/api/assignment') {
      return this.assignment(url.searchParams.get('reviewer') ?? '');
    }
    return json({ detail: 'not found' }, 404);
  };

  private nextCase(reviewer: string): Response {
    const queue = this.queues.get(reviewer);
    if (!queue) return json({ detail: `unknown reviewer '${reviewer}'` }, 404);
    const pending = queue.filter((c) => !this.submitted.has(this.key(reviewer, c.case_id)));
    if (pending.length === 0) return new Response(null, { status: 204 });
    const head = pending[0] as CasePayload;
    return json(
      {
        ...head,
        progress: { submitted: queue.length - pending.length, total: queue.length },
      },
      200,
    );
  }

  private async submitReview(init: RequestInit): Promise<Response> {
    if (this.postDelayMs > 0) {
      await new Promise((resolve) => setTimeout(resolve, this.postDelayMs));
    }
    if (this.failPosts > 0) {
      this.failPosts -= 1;
      throw new TypeError('fetch failed');
    }
    const body = JSON.parse(String(init.body)) as Record<string, unknown>;
    this.posts.push(body);
    for (const field of ['reviewer_id', 'case_id', 'verdicts']) {
      if (!(field in body)) return json({ detail: `missing field '${field}'` }, 400);
    }
    const reviewer = String(body.reviewer_id);
    const caseId = String(body.case_id);
    const queue = this.queues.get(reviewer);
    if (!queue) return json({ detail: `unknown reviewer '${reviewer}'` }, 404);
    if (!queue.some((c) => c.case_id === caseId)) {
      return json({ detail: `case '${caseId}' is not assigned to reviewer '${reviewer}'` }, 400);
    }
    const verdicts = body.verdicts as Record<string, string>;
    const missing = DIMENSIONS.filter((dim) => !(dim in verdicts));
    if (missing.length > 0) {
      return json({ detail: `missing verdicts for: ${missing.join(', ')}` }, 400);
    }
    const invalid = Object.entries(verdicts).filter(
      ([dim, verdict]) =>
        !(DIMENSIONS as readonly string[]).includes(dim) ||
        !(VERDICTS as readonly string[]).includes(verdict),
    );
    if (invalid.length > 0) {
      return json({ detail: `invalid verdicts: ${invalid.map(([d]) => d).join(', ')}` }, 400);
    }
    const key = this.key(reviewer, caseId);
    if (this.submitted.has(key)) {
      return json({ detail: `duplicate review for case '${caseId}' by '${reviewer}'` }, 409);
    }
    this.submitted.add(key);
    return json({ status: 'ok', case_id: caseId }, 200);
  }

  private assignment(reviewer: string): Response {
    const queue = this.queues.get(reviewer);
    if (!queue) return json({ detail: `unknown reviewer '${reviewer}'` }, 404);
    const ids = queue.map((c) => c.case_id);
    const submitted = ids.filter((cid) => this.submitted.has(this.key(reviewer, cid)));
    return json(
      {
        reviewer_id: reviewer,
        cases: ids,
        submitted,
        remaining: ids.filter((cid) => !submitted.includes(cid)),
      },
      200,
    );
  }
}
