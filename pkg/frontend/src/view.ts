// DOM rendering. Rebuilt wholesale on every state change; the state object
// is small enough that diffing would buy nothing.

import type { ReviewSession } from './state.js';
import { DIMENSIONS, DIMENSION_TITLES, VERDICTS } from './types.js';
import type { Verdict } from './types.js';

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderStatusLine(session: ReviewSession): HTMLElement {
  if (session.status === 'done') {
    return el('p', 'status status-done', 'All assigned cases are reviewed. Thank you.');
  }
  if (session.status === 'error') {
    return el('p', 'status status-error', session.lastError || 'Something went wrong.');
  }
  return el('p', 'status', 'Loading next case...');
}

function renderCase(session: ReviewSession): HTMLElement {
  const payload = session.current;
  if (payload === null) return renderStatusLine(session);

  const panel = el('div', 'case-panel');
  const header = el('div', 'case-header');
  header.appendChild(el('h2', 'case-id', `Case ${payload.case_id}`));
  header.appendChild(
    el(
      'span',
      'progress',
      `${payload.progress.submitted} of ${payload.progress.total} reviewed`,
    ),
  );
  panel.appendChild(header);

  const report = el('pre', 'report-text');
  report.textContent = payload.full_text;
  panel.appendChild(report);

  const form = el('div', 'verdict-form');
  for (const dim of DIMENSIONS) {
    const coded = payload.classification[dim];
    const group = el('fieldset', 'dimension');
    const legend = el('legend', undefined, `${DIMENSION_TITLES[dim]}: ${coded.label} (${coded.code})`);
    group.appendChild(legend);
    for (const verdict of VERDICTS) {
      const label = el('label', 'verdict-option');
      const radio = el('input');
      radio.type = 'radio';
      radio.name = `verdict-${dim}`;
      radio.value = verdict;
      radio.checked = session.verdicts[dim] === verdict;
      radio.addEventListener('change', () => session.setVerdict(dim, verdict as Verdict));
      label.appendChild(radio);
      label.appendChild(document.createTextNode(` ${verdict}`));
      group.appendChild(label);
    }
    form.appendChild(group);
  }
  panel.appendChild(form);

  const note = el('textarea', 'note');
  note.placeholder = 'Optional note';
  note.value = session.note;
  note.addEventListener('input', () => session.setNote(note.value));
  panel.appendChild(note);

  const submit = el('button', 'submit');
  submit.textContent = session.submitting ? 'Submitting...' : 'Submit review';
  submit.disabled = !session.canSubmit();
  submit.addEventListener('click', () => void session.submit());
  panel.appendChild(submit);

  if (session.lastError) {
    panel.appendChild(el('p', 'status status-error', session.lastError));
  }
  return panel;
}

export function render(root: HTMLElement, session: ReviewSession): void {
  root.textContent = '';
  const title = el('h1', undefined, 'Incident review');
  root.appendChild(title);
  root.appendChild(el('p', 'reviewer', `Reviewer: ${session.reviewer}`));
  if (session.status === 'reviewing') {
    root.appendChild(renderCase(session));
  } else {
    root.appendChild(renderStatusLine(session));
  }
}
