/** Validation workflow: candidate programs rendered step by step with the
 * server-computed value of every step, one independent vote per card, and
 * controls that lock once the vote is in. Up to two cards render side by
 * side so conflicting candidates for the same problem can be compared. */

import { ApiClient, ApiError } from './api';
import type { TaskPayload } from './types';

export class ValidationView {
  private tasks: TaskPayload[] = [];
  private voted = new Set<string>();

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    private readonly annotatorId: string,
    private readonly maxCards = 2,
  ) {}

  async load(): Promise<void> {
    this.tasks = [];
    this.voted.clear();
    try {
      for (let i = 0; i < this.maxCards; i += 1) {
        const task = await this.api.nextValidationTask(
          this.annotatorId, this.tasks.map((t) => t.task_id));
        if (!task) break;
        this.tasks.push(task);
      }
    } catch (err) {
      this.renderError(err);
      return;
    }
    this.render();
  }

  private renderError(err: unknown): void {
    this.root.innerHTML = '';
    const banner = document.createElement('div');
    banner.className = 'banner error';
    banner.dataset.testid = 'validation-error';
    banner.textContent = err instanceof ApiError ? err.message : String(err);
    this.root.appendChild(banner);
  }

  private render(): void {
    this.root.innerHTML = '';
    if (this.tasks.length === 0) {
      const empty = document.createElement('p');
      empty.dataset.testid = 'no-tasks';
      empty.textContent = 'No validation tasks waiting.';
      this.root.appendChild(empty);
      return;
    }
    const row = document.createElement('div');
    row.className = 'task-row';
    for (const task of this.tasks) {
      row.appendChild(this.renderCard(task));
    }
    this.root.appendChild(row);
  }

  private renderCard(task: TaskPayload): HTMLElement {
    const card = document.createElement('section');
    card.className = 'task-card';
    card.dataset.testid = 'task-card';
    card.dataset.taskId = task.task_id;
    card.dataset.voted = this.voted.has(task.task_id) ? 'true' : 'false';

    const problem = document.createElement('p');
    problem.dataset.testid = 'task-problem';
    problem.textContent = task.problem;
    card.appendChild(problem);

    const steps = document.createElement('ol');
    steps.dataset.testid = 'task-steps';
    task.steps.forEach((step, index) => {
      const item = document.createElement('li');
      item.dataset.testid = 'task-step';
      item.dataset.value = String(step.value);
      item.textContent = `#${index} ${step.op}(${step.args.join(', ')}) = ${step.value}`;
      steps.appendChild(item);
    });
    card.appendChild(steps);

    const locked = this.voted.has(task.task_id);
    for (const [label, valid] of [['valid', true], ['invalid', false]] as const) {
      const button = document.createElement('button');
      button.dataset.testid = `vote-${label}`;
      button.textContent = label;
      button.disabled = locked;
      button.addEventListener('click', () => void this.castVote(task, valid));
      card.appendChild(button);
    }
    return card;
  }

  private async castVote(task: TaskPayload, valid: boolean): Promise<void> {
    try {
      await this.api.vote(task.task_id, this.annotatorId, valid);
    } catch (err) {
      // duplicate or already-resolved votes just lock the card and move on
      if (!(err instanceof ApiError && (err.status === 409 || err.status === 403))) {
        this.renderError(err);
        return;
      }
    }
    this.voted.add(task.task_id);
    this.render();
  }
}
