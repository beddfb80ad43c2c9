import { BrowseApi } from './api.js';
import { mount } from './render.js';
import { BrowseStore } from './state.js';

declare global {
  interface Window {
    /** override when the API is not served from the same origin */
    __API_BASE__?: string;
  }
}

async function boot(): Promise<void> {
  const root = document.getElementById('app');
  const form = document.getElementById('search') as HTMLFormElement | null;
  const input = document.getElementById('query') as HTMLInputElement | null;
  if (!root || !form || !input) {
    throw new Error('missing #app, #search, or #query element');
  }

  const api = new BrowseApi(window.__API_BASE__ ?? '');
  const store = new BrowseStore(api);
  const meta = await api.facets();
  mount(root, store, meta);

  form.addEventListener('submit', (event) => {
    event.preventDefault();
    const query = input.value.trim();
    if (query) void store.start(query);
  });
}

boot().catch((err) => {
  const root = document.getElementById('app');
  if (root) {
    root.textContent = `failed to start: ${err instanceof Error ? err.message : err}`;
  }
});
