import { ApiError, BrowseApi } from './api.js';
import type { Mode, Page, WireFilter } from './types.js';

export interface BrowseState {
  page: Page | null;
  busy: boolean;
  /** transient, e.g. a filter the server refused; cleared by the next success */
  notice: string | null;
  /** sticky failure, e.g. the session expired */
  error: string | null;
}

export type Listener = (state: BrowseState) => void;

/** Error codes where the session is still usable and we just tell the user. */
const RECOVERABLE = new Set(['zero_posterior', 'no_filters', 'empty_query']);

/**
 * Holds the current page and serializes mutations.
 *
 * Every mutation is appended to a single promise chain, so at most one
 * request is in flight and responses can never arrive out of order. A
 * rejected filter (409 zero_posterior) keeps the current page and only
 * sets a notice, matching the server, which leaves the session unchanged.
 */
export class BrowseStore {
  private readonly api: BrowseApi;
  private readonly listeners = new Set<Listener>();
  private chain: Promise<void> = Promise.resolve();
  private state: BrowseState = { page: null, busy: false, notice: null, error: null };

  constructor(api: BrowseApi) {
    this.api = api;
  }

  getState(): BrowseState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  start(query: string): Promise<void> {
    return this.enqueue(() => this.api.createSession(query));
  }

  applyBrand(name: string): Promise<void> {
    return this.mutateSession((id) => this.api.applyFilter(id, { facet: 'brand', value: name }));
  }

  applyPrice(lo: number | null, hi: number | null): Promise<void> {
    return this.mutateSession((id) => this.api.applyFilter(id, { facet: 'price', lo, hi }));
  }

  undo(): Promise<void> {
    return this.mutateSession((id) => this.api.undoLast(id));
  }

  switchMode(mode: Mode): Promise<void> {
    return this.mutateSession((id) => this.api.setMode(id, mode));
  }

  private mutateSession(fn: (sessionId: string) => Promise<Page>): Promise<void> {
    return this.enqueue(() => {
      const page = this.state.page;
      if (!page) {
        return Promise.reject(new ApiError(0, 'no_session', 'start a search first'));
      }
      return fn(page.session_id);
    });
  }

  private enqueue(fn: () => Promise<Page>): Promise<void> {
    const step = this.chain.then(() => this.run(fn));
    // keep the chain alive even when a step fails
    this.chain = step.catch(() => undefined);
    return step;
  }

  private async run(fn: () => Promise<Page>): Promise<void> {
    this.setState({ ...this.state, busy: true });
    try {
      const page = await fn();
      this.setState({ page, busy: false, notice: null, error: null });
    } catch (err) {
      if (err instanceof ApiError && (RECOVERABLE.has(err.code) || err.code === 'no_session')) {
        this.setState({ ...this.state, busy: false, notice: err.message });
      } else {
        const message = err instanceof Error ? err.message : String(err);
        this.setState({ ...this.state, busy: false, error: message });
      }
    }
  }

  private setState(next: BrowseState): void {
    this.state = next;
    for (const listener of this.listeners) {
      listener(next);
    }
  }
}
