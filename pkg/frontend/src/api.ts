import type { FacetMetadata, Mode, Page, WireFilter } from './types.js';

/** Error raised for any non-2xx response, carrying the server's code. */
export class ApiError extends Error {
  readonly status: number;
  readonly code: string;

  constructor(status: number, code: string, message: string) {
    super(message);
    this.name = 'ApiError';
    this.status = status;
    this.code = code;
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/**
 * Thin typed client for the browsing service. The fetch implementation is
 * injectable so tests can run without a server.
 */
export class BrowseApi {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(base = '', fetchImpl?: FetchLike) {
    this.base = base.replace(/\/+$/, '');
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  health(): Promise<{ status: string }> {
    return this.request('GET', '/v1/health');
  }

  facets(): Promise<FacetMetadata> {
    return this.request('GET', '/v1/catalog/facets');
  }

  createSession(query: string): Promise<Page> {
    return this.request('POST', '/v1/sessions', { query });
  }

  applyFilter(sessionId: string, filter: WireFilter, mode?: Mode): Promise<Page> {
    const body: Record<string, unknown> = { ...filter };
    if (mode !== undefined) body.mode = mode;
    return this.request('POST', `/v1/sessions/${encodeURIComponent(sessionId)}/filters`, body);
  }

  undoLast(sessionId: string): Promise<Page> {
    return this.request('DELETE', `/v1/sessions/${encodeURIComponent(sessionId)}/filters/last`);
  }

  setMode(sessionId: string, mode: Mode): Promise<Page> {
    return this.request('PUT', `/v1/sessions/${encodeURIComponent(sessionId)}/mode`, { mode });
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { Accept: 'application/json' } };
    if (body !== undefined) {
      init.headers = { ...init.headers, 'Content-Type': 'application/json' };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(this.base + path, init);

    let parsed: unknown = null;
    try {
      parsed = await response.json();
    } catch {
      // non-JSON body; fall through with null
    }

    if (!response.ok) {
      const err = (parsed as { error?: { code?: string; message?: string } } | null)?.error;
      throw new ApiError(
        response.status,
        err?.code ?? `http_${response.status}`,
        err?.message ?? `request failed with status ${response.status}`,
      );
    }
    return parsed as T;
  }
}
