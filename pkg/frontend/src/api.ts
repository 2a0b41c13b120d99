// Thin typed wrappers over the review service HTTP API.

import type { AssignmentView, CasePayload, ReviewSubmission } from './types.js';

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export type NextCaseResult =
  | { kind: 'case'; payload: CasePayload }
  | { kind: 'done' }
  | { kind: 'error'; status: number; message: string };

export type SubmitResult =
  | { kind: 'ok' }
  | { kind: 'duplicate'; message: string }
  | { kind: 'rejected'; status: number; message: string }
  | { kind: 'network'; message: string };

async function errorDetail(response: Response): Promise<string> {
  try {
    const data = await response.json();
    if (data && typeof data.detail === 'string') return data.detail;
  } catch {
    // non-JSON error body; fall through to the status line
  }
  return `request failed with status ${response.status}`;
}

export async function fetchNextCase(
  reviewer: string,
  fetchFn: FetchLike = fetch,
): Promise<NextCaseResult> {
  let response: Response;
  try {
    response = await fetchFn(`/api/cases/next?reviewer=${encodeURIComponent(reviewer)}`);
  } catch (e) {
    return { kind: 'error', status: 0, message: `cannot reach review service: ${e}` };
  }
  if (response.status === 204) return { kind: 'done' };
  if (!response.ok) {
    return { kind: 'error', status: response.status, message: await errorDetail(response) };
  }
  return { kind: 'case', payload: (await response.json()) as CasePayload };
}

export async function submitReview(
  submission: ReviewSubmission,
  fetchFn: FetchLike = fetch,
): Promise<SubmitResult> {
  let response: Response;
  try {
    response = await fetchFn('/api/reviews', {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(submission),
    });
  } catch (e) {
    return { kind: 'network', message: `submission did not reach the service: ${e}` };
  }
  if (response.ok) return { kind: 'ok' };
  const message = await errorDetail(response);
  if (response.status === 409) return { kind: 'duplicate', message };
  return { kind: 'rejected', status: response.status, message };
}

export async function fetchAssignment(
  reviewer: string,
  fetchFn: FetchLike = fetch,
): Promise<AssignmentView | null> {
  let response: Response;
  try {
    response = await fetchFn(`/api/assignment?reviewer=${encodeURIComponent(reviewer)}`);
  } catch {
    return null;
  }
  if (!response.ok) return null;
  return (await response.json()) as AssignmentView;
}
