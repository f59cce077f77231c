/** Thin typed client over the annotation service's HTTP+JSON API. */

import type {
  ProblemPayload,
  RegistryPayload,
  SessionPayload,
  SubmitVerdict,
  TaskPayload,
} from './types';

export class ApiError extends Error {
  constructor(
    public readonly code: string,
    message: string,
    public readonly status: number,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, init);
    } catch (err) {
      throw new ApiError('network', String(err), 0);
    }
    const body = await response.json().catch(() => ({}));
    if (!response.ok) {
      throw new ApiError(
        body.error ?? 'http_error',
        body.message ?? `HTTP ${response.status}`,
        response.status,
      );
    }
    return body as T;
  }

  private post<T>(path: string, payload?: unknown): Promise<T> {
    return this.request<T>(path, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: payload === undefined ? '{}' : JSON.stringify(payload),
    });
  }

  getRegistry(): Promise<RegistryPayload> {
    return this.request('/registry');
  }

  getProblem(problemId: string): Promise<ProblemPayload> {
    return this.request(`/problems/${encodeURIComponent(problemId)}`);
  }

  createSession(problemId: string, annotatorId: string): Promise<SessionPayload> {
    return this.post('/sessions', { problem_id: problemId, annotator_id: annotatorId });
  }

  getSession(sessionId: string): Promise<SessionPayload> {
    return this.request(`/sessions/${encodeURIComponent(sessionId)}`);
  }

  applyOperation(sessionId: string, op: string, args: string[]): Promise<SessionPayload> {
    return this.post(`/sessions/${encodeURIComponent(sessionId)}/ops`, { op, args });
  }

  undo(sessionId: string): Promise<SessionPayload> {
    return this.post(`/sessions/${encodeURIComponent(sessionId)}/undo`);
  }

  submit(sessionId: string): Promise<SubmitVerdict> {
    return this.post(`/sessions/${encodeURIComponent(sessionId)}/submit`);
  }

  async nextValidationTask(
    annotatorId: string,
    excludeIds: string[] = [],
  ): Promise<TaskPayload | null> {
    const params = new URLSearchParams({ annotator: annotatorId });
    if (excludeIds.length) params.set('exclude', excludeIds.join(','));
    const body = await this.request<{ task: TaskPayload | null }>(
      `/validation/next?${params.toString()}`,
    );
    return body.task;
  }

  vote(taskId: string, annotatorId: string, valid: boolean): Promise<TaskPayload> {
    return this.post(`/validation/${encodeURIComponent(taskId)}/vote`, {
      annotator_id: annotatorId,
      valid,
    });
  }
}
