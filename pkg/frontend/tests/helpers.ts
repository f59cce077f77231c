/** Shared DOM-driving helpers for the UI tests. Mutations are awaited by
 * polling the re-rendered DOM, so the same flows run against the instant
 * mock and a real HTTP service. */

export async function flush(): Promise<void> {
  await new Promise((resolve) => setTimeout(resolve, 0));
  await new Promise((resolve) => setTimeout(resolve, 0));
}

export async function waitFor(
  condition: () => boolean, timeoutMs = 5000,
): Promise<void> {
  const start = Date.now();
  while (!condition()) {
    if (Date.now() - start > timeoutMs) {
      throw new Error('timed out waiting for the UI to settle');
    }
    await new Promise((resolve) => setTimeout(resolve, 5));
  }
}

export function byTestId(root: HTMLElement, id: string): HTMLElement {
  const node = root.querySelector(`[data-testid="${id}"]`);
  if (!node) throw new Error(`missing [data-testid=${id}]`);
  return node as HTMLElement;
}

export function allByTestId(root: HTMLElement, id: string): HTMLElement[] {
  return [...root.querySelectorAll(`[data-testid="${id}"]`)] as HTMLElement[];
}

export function maybeBanner(root: HTMLElement): HTMLElement | null {
  return root.querySelector('[data-testid="gate-banner"]') as HTMLElement | null;
}

export function clickOp(root: HTMLElement, op: string): void {
  const button = root.querySelector(`[data-testid="palette-op"][data-op="${op}"]`);
  if (!button) throw new Error(`palette has no op ${op}`);
  (button as HTMLElement).click();
}

export function clickChip(root: HTMLElement, ref: string): void {
  const chip = root.querySelector(`[data-testid="chip"][data-ref="${ref}"]`);
  if (!chip) throw new Error(`stack has no chip ${ref}`);
  (chip as HTMLElement).click();
}

export function chipValues(root: HTMLElement): number[] {
  return allByTestId(root, 'chip').map((c) => Number(c.dataset.value));
}

export function stackRefs(root: HTMLElement): string[] {
  return allByTestId(root, 'chip').map((c) => c.dataset.ref as string);
}

function historyCount(root: HTMLElement): number {
  return allByTestId(root, 'history-step').length;
}

/** Select an op, click its argument chips, apply, and wait for the outcome:
 * either the history grew or a (new) banner reported the failure. */
export async function applyStep(
  root: HTMLElement, op: string, refs: string[],
): Promise<void> {
  clickOp(root, op);
  for (const ref of refs) clickChip(root, ref);
  const before = historyCount(root);
  const bannerBefore = maybeBanner(root);
  byTestId(root, 'apply').click();
  await waitFor(() => {
    const banner = maybeBanner(root);
    return historyCount(root) !== before
      || (banner !== null && banner !== bannerBefore);
  });
}

export async function undoStep(root: HTMLElement): Promise<void> {
  const before = historyCount(root);
  byTestId(root, 'undo').click();
  await waitFor(() => historyCount(root) !== before || maybeBanner(root) !== null);
}

/** Click submit and wait for the verdict banner. */
export async function submitAndWait(root: HTMLElement): Promise<HTMLElement> {
  const bannerBefore = maybeBanner(root);
  byTestId(root, 'submit').click();
  await waitFor(() => {
    const banner = maybeBanner(root);
    return banner !== null && banner !== bannerBefore;
  });
  return byTestId(root, 'gate-banner');
}
