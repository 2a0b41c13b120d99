import { ReviewSession } from './state.js';
import { render } from './view.js';

function reviewerFromUrl(): string {
  return new URLSearchParams(window.location.search).get('reviewer') ?? '';
}

function promptForReviewer(root: HTMLElement): void {
  root.textContent = '';
  const title = document.createElement('h1');
  title.textContent = 'Incident review';
  const hint = document.createElement('p');
  hint.textContent = 'Open this page with ?reviewer=<your id> to begin.';
  root.appendChild(title);
  root.appendChild(hint);
}

function boot(): void {
  const root = document.getElementById('app');
  if (root === null) return;
  const reviewer = reviewerFromUrl();
  if (!reviewer) {
    promptForReviewer(root);
    return;
  }
  const session = new ReviewSession({
    reviewer,
    store: window.localStorage,
    fetchFn: (input, init) => window.fetch(input, init),
    onChange: (s) => render(root, s),
  });
  void session.start();
}

boot();
