// Wire types for the review service API. Field names mirror the JSON exactly.

export const DIMENSIONS = [
  'av_failed',
  'late_ai',
  'primary_cause',
  'failed_system',
] as const;

export type Dimension = (typeof DIMENSIONS)[number];

export const DIMENSION_TITLES: Record<Dimension, string> = {
  av_failed: 'AV failed',
  late_ai: 'Late AI response',
  primary_cause: 'Primary cause',
  failed_system: 'Failed system',
};

export const VERDICTS = ['Correct', 'Incorrect', 'InsufficientContext'] as const;

export type Verdict = (typeof VERDICTS)[number];

export interface CodedValue {
  code: string;
  label: string;
}

export interface CasePayload {
  case_id: string;
  full_text: string;
  classification: Record<Dimension, CodedValue>;
  progress: { submitted: number; total: number };
}

export interface ReviewSubmission {
  reviewer_id: string;
  case_id: string;
  verdicts: Record<Dimension, Verdict>;
  note?: string;
}

export interface AssignmentView {
  reviewer_id: string;
  cases: string[];
  submitted: string[];
  remaining: string[];
}

export type VerdictDraft = Partial<Record<Dimension, Verdict>>;

export function isVerdict(value: string): value is Verdict {
  return (VERDICTS as readonly string[]).includes(value);
}
