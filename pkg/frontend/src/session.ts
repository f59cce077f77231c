/** Interactive annotation session: operation palette with hover hints, the
 * valid-argument chip stack, arity-slot argument picking, per-step history,
 * undo, and the gated submission flow.
 *
 * The server is authoritative: every number on screen comes from a service
 * response, and each mutation re-renders from the returned session payload.
 */

import { ApiClient, ApiError } from './api';
import type { OperationSpec, SessionPayload } from './types';

const GATE_MESSAGES: Record<string, (v: { final: number; target: number | null }) => string> = {
  no_problem_number: () =>
    'Rejected: the program must use at least one number from the problem.',
  not_close: (v) =>
    `Rejected: final value ${v.final} is not close enough to the correct ` +
    `answer${v.target === null ? '' : ` (${v.target})`}.`,
};

export interface SessionViewOptions {
  annotatorId: string;
  /** Called after an accepted submission so the shell can load the next problem. */
  onAccepted?: (problemId: string) => void;
}

export class SessionView {
  private session: SessionPayload | null = null;
  private ops = new Map<string, OperationSpec>();
  private selectedOp: string | null = null;
  private selectedArgs: string[] = [];

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    private readonly options: SessionViewOptions,
  ) {}

  async start(problemId: string): Promise<void> {
    const registry = await this.api.getRegistry().catch((err) => {
      this.renderOffline(err);
      return null;
    });
    if (!registry) return;
    this.ops = new Map(registry.operations.map((o) => [o.name, o]));
    this.session = await this.api.createSession(problemId, this.options.annotatorId);
    this.selectedOp = null;
    this.selectedArgs = [];
    this.render();
  }

  get sessionId(): string | null {
    return this.session?.session_id ?? null;
  }

  private renderOffline(err: unknown): void {
    this.root.innerHTML = '';
    const banner = el('div', 'banner offline');
    banner.dataset.testid = 'offline-banner';
    banner.textContent = `Service unreachable: ${String(err)}`;
    this.root.appendChild(banner);
  }

  private arity(op: string): number {
    return this.ops.get(op)?.arity ?? 0;
  }

  private render(status?: { kind: string; text: string; reason?: string }): void {
    const session = this.session;
    this.root.innerHTML = '';
    if (!session) return;

    const problem = el('p', 'problem');
    problem.dataset.testid = 'problem-text';
    problem.textContent = session.problem;
    this.root.appendChild(problem);

    if (status) {
      const banner = el('div', `banner ${status.kind}`);
      banner.dataset.testid = 'gate-banner';
      if (status.reason) banner.dataset.reason = status.reason;
      banner.textContent = status.text;
      this.root.appendChild(banner);
    }

    this.root.appendChild(this.renderPalette(session));
    this.root.appendChild(this.renderSlots());
    this.root.appendChild(this.renderChips(session));
    this.root.appendChild(this.renderHistory(session));
    this.root.appendChild(this.renderControls(session));
  }

  private renderPalette(session: SessionPayload): HTMLElement {
    const palette = el('div', 'palette');
    palette.dataset.testid = 'palette';
    if (session.palette.length === 0) {
      const empty = el('p', 'empty');
      empty.dataset.testid = 'palette-empty';
      empty.textContent = 'No operations available for this category.';
      palette.appendChild(empty);
      return palette;
    }
    for (const name of session.palette) {
      const spec = this.ops.get(name);
      const button = el('button', 'op') as HTMLButtonElement;
      button.dataset.testid = 'palette-op';
      button.dataset.op = name;
      button.textContent = name;
      if (name === this.selectedOp) button.classList.add('selected');
      const popover = el('span', 'hint-popover');
      popover.dataset.testid = 'hint-popover';
      popover.hidden = true;
      if (spec) {
        popover.textContent =
          `${spec.hint.formula} | ${spec.hint.args} | ${spec.hint.explanation}`;
        button.title = spec.hint.formula;
      }
      button.addEventListener('mouseenter', () => { popover.hidden = false; });
      button.addEventListener('mouseleave', () => { popover.hidden = true; });
      button.addEventListener('click', () => {
        this.selectedOp = name;
        this.selectedArgs = [];
        this.render();
      });
      const wrap = el('span', 'op-wrap');
      wrap.appendChild(button);
      wrap.appendChild(popover);
      palette.appendChild(wrap);
    }
    return palette;
  }

  private renderSlots(): HTMLElement {
    const slots = el('div', 'slots');
    slots.dataset.testid = 'slots';
    if (!this.selectedOp) return slots;
    const arity = this.arity(this.selectedOp);
    const label = el('span', 'slots-label');
    label.textContent = `${this.selectedOp}(`;
    slots.appendChild(label);
    for (let i = 0; i < arity; i += 1) {
      const slot = el('span', 'slot');
      slot.dataset.testid = 'arg-slot';
      slot.textContent = this.selectedArgs[i] ?? '_';
      slots.appendChild(slot);
      if (i < arity - 1) slots.appendChild(document.createTextNode(', '));
    }
    slots.appendChild(document.createTextNode(')'));
    return slots;
  }

  private renderChips(session: SessionPayload): HTMLElement {
    const stack = el('div', 'chips');
    stack.dataset.testid = 'chip-stack';
    for (const arg of session.valid_args) {
      const chip = el('button', 'chip') as HTMLButtonElement;
      chip.dataset.testid = 'chip';
      chip.dataset.ref = arg.ref;
      chip.dataset.value = String(arg.value);
      chip.textContent = `${arg.ref} = ${arg.value}`;
      chip.addEventListener('click', () => this.pickArg(arg.ref));
      stack.appendChild(chip);
    }
    return stack;
  }

  private renderHistory(session: SessionPayload): HTMLElement {
    const list = el('ol', 'history');
    list.dataset.testid = 'history';
    session.history.forEach((step, index) => {
      const item = el('li', 'history-step');
      item.dataset.testid = 'history-step';
      item.dataset.value = String(step.value);
      item.textContent = `#${index} ${step.op}(${step.args.join(', ')}) = ${step.value}`;
      list.appendChild(item);
    });
    return list;
  }

  private renderControls(session: SessionPayload): HTMLElement {
    const controls = el('div', 'controls');
    const apply = el('button', 'apply') as HTMLButtonElement;
    apply.dataset.testid = 'apply';
    apply.textContent = 'apply';
    const arity = this.selectedOp ? this.arity(this.selectedOp) : 0;
    apply.disabled =
      session.status !== 'open' ||
      !this.selectedOp ||
      this.selectedArgs.length !== arity;
    apply.addEventListener('click', () => void this.apply());

    const undo = el('button', 'undo') as HTMLButtonElement;
    undo.dataset.testid = 'undo';
    undo.textContent = 'undo';
    undo.disabled = session.status !== 'open' || session.history.length === 0;
    undo.addEventListener('click', () => void this.undo());

    const submit = el('button', 'submit') as HTMLButtonElement;
    submit.dataset.testid = 'submit';
    submit.textContent = 'submit';
    submit.disabled = session.status !== 'open' || session.history.length === 0;
    submit.addEventListener('click', () => void this.submit());

    controls.append(apply, undo, submit);
    return controls;
  }

  private pickArg(ref: string): void {
    if (!this.selectedOp) return;
    if (this.selectedArgs.length >= this.arity(this.selectedOp)) return;
    this.selectedArgs.push(ref);
    this.render();
  }

  private async apply(): Promise<void> {
    if (!this.session || !this.selectedOp) return;
    const op = this.selectedOp;
    const args = [...this.selectedArgs];
    try {
      this.session = await this.api.applyOperation(this.session.session_id, op, args);
      this.selectedOp = null;
      this.selectedArgs = [];
      this.render();
    } catch (err) {
      // surface the failure inline; the current selection survives
      const message = err instanceof ApiError ? err.message : String(err);
      const reason = err instanceof ApiError ? err.code : 'error';
      this.render({ kind: 'error', text: message, reason });
    }
  }

  private async undo(): Promise<void> {
    if (!this.session) return;
    try {
      this.session = await this.api.undo(this.session.session_id);
      this.render();
    } catch (err) {
      const message = err instanceof ApiError ? err.message : String(err);
      this.render({ kind: 'error', text: message });
    }
  }

  private async submit(): Promise<void> {
    if (!this.session) return;
    try {
      const verdict = await this.api.submit(this.session.session_id);
      if (verdict.accepted) {
        this.session = await this.api.getSession(this.session.session_id);
        this.render({ kind: 'success', text: 'Submission accepted.', reason: 'accepted' });
        this.options.onAccepted?.(this.session.problem_id);
      } else {
        const reason = verdict.reason ?? 'rejected';
        const message = GATE_MESSAGES[reason]?.(verdict)
          ?? `Rejected: ${reason}`;
        this.render({ kind: 'rejected', text: message, reason });
      }
    } catch (err) {
      const message = err instanceof ApiError ? err.message : String(err);
      this.render({ kind: 'error', text: message });
    }
  }
}

function el(tag: string, className: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  return node;
}
