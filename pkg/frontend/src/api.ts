// Typed client for the dashboard service. `fetchFn` is injectable so tests
// can run against a scripted service.

import { Explanation, FieldError, ServiceInfo, StateDoc } from './types.js';

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
    public detail: FieldError[] = []
  ) {
    super(message);
  }
}

export class StateConflictError extends Error {
  constructor(message: string, public unresolved: string[]) {
    super(message);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl = '',
    private fetchFn: FetchLike = (url, init) => fetch(url, init)
  ) {}

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    const body = await response.json().catch(() => null);
    if (!response.ok) {
      if (response.status === 409 && body && typeof body === 'object') {
        const doc = body as { message?: string; unresolved?: string[] };
        throw new StateConflictError(doc.message ?? 'conflict', doc.unresolved ?? []);
      }
      const detail =
        body && typeof body === 'object' && Array.isArray((body as { detail?: unknown }).detail)
          ? ((body as { detail: FieldError[] }).detail)
          : [];
      const message = detail.length
        ? detail.map((d) => `${d.field}: ${d.message}`).join('; ')
        : `request failed with status ${response.status}`;
      throw new ApiError(response.status, message, detail);
    }
    return body;
  }

  info(): Promise<ServiceInfo> {
    return this.request('/api/info') as Promise<ServiceInfo>;
  }

  compute(
    kind: string,
    model: string,
    params: Record<string, unknown>
  ): Promise<Explanation> {
    return this.request('/api/compute', {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ kind, model, params }),
    }) as Promise<Explanation>;
  }

  getState(): Promise<StateDoc> {
    return this.request('/api/state') as Promise<StateDoc>;
  }

  async putState(doc: StateDoc): Promise<void> {
    await this.request('/api/state', {
      method: 'PUT',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(doc),
    });
  }
}
