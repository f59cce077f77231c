/** Application shell: pick a problem queue, annotate, validate. */

import { ApiClient } from './api';
import { SessionView } from './session';
import { ValidationView } from './validation';

export interface AppConfig {
  baseUrl: string;
  annotatorId: string;
  /** Problem ids annotated in order; an accepted submission advances the queue. */
  problemQueue: string[];
}

export function createApp(root: HTMLElement, config: AppConfig) {
  const api = new ApiClient(config.baseUrl);
  root.innerHTML = `
    <nav class="mode-nav">
      <button data-testid="mode-annotate">annotate</button>
      <button data-testid="mode-validate">validate</button>
    </nav>
    <main data-testid="view"></main>
  `;
  const view = root.querySelector('main') as HTMLElement;
  let queueIndex = 0;

  const sessionView = new SessionView(view, api, {
    annotatorId: config.annotatorId,
    onAccepted: () => {
      queueIndex += 1;
      const next = config.problemQueue[queueIndex];
      if (next) void sessionView.start(next);
    },
  });
  const validationView = new ValidationView(view, api, config.annotatorId);

  const annotate = () => {
    const problemId = config.problemQueue[queueIndex];
    if (problemId) void sessionView.start(problemId);
  };
  root.querySelector('[data-testid="mode-annotate"]')!
    .addEventListener('click', annotate);
  root.querySelector('[data-testid="mode-validate"]')!
    .addEventListener('click', () => void validationView.load());

  annotate();
  return { api, sessionView, validationView };
}

declare global {
  interface Window {
    OPPROG_CONFIG?: Partial<AppConfig>;
  }
}

if (typeof document !== 'undefined' && document.getElementById('app')) {
  const params = new URLSearchParams(window.location.search);
  const config: AppConfig = {
    baseUrl: window.OPPROG_CONFIG?.baseUrl ?? params.get('base') ?? 'http://127.0.0.1:8000',
    annotatorId: window.OPPROG_CONFIG?.annotatorId ?? params.get('annotator') ?? 'anonymous',
    problemQueue:
      window.OPPROG_CONFIG?.problemQueue ??
      (params.get('problems')?.split(',') ?? []),
  };
  createApp(document.getElementById('app') as HTMLElement, config);
}
