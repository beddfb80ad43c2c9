import type { BrowseState, BrowseStore } from './state.js';
import type { FacetMetadata, Page, WireFilter } from './types.js';

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;')
    .replace(/'/g, '&#39;');
}

export function formatPrice(price: number): string {
  return `$${price.toFixed(2)}`;
}

/** Human label for an applied filter, matching the facet control wording. */
export function filterLabel(filter: WireFilter): string {
  if (filter.facet === 'brand') {
    return `brand: ${filter.value ?? '?'}`;
  }
  const lo = filter.lo ?? null;
  const hi = filter.hi ?? null;
  if (lo === null && hi !== null) return `price under ${hi}`;
  if (lo !== null && hi === null) return `price over ${lo}`;
  return `price ${lo} to ${hi}`;
}

export function renderResults(page: Page): string {
  if (page.results.length === 0) {
    return '<p class="empty">No items to show.</p>';
  }
  const rows = page.results.map((row, i) => {
    const badge = row.within_filter
      ? ''
      : '<span class="badge near-miss" title="kept despite the active filters">outside filters</span>';
    const width = Math.max(1, Math.round(row.score * 100));
    return `
      <li class="result ${row.within_filter ? '' : 'is-near-miss'}" data-item-id="${escapeHtml(row.item_id)}">
        <span class="rank">${i + 1}</span>
        <span class="title">${escapeHtml(row.title || row.item_id)}</span>
        ${badge}
        <span class="brand">${escapeHtml(row.brand)}</span>
        <span class="price">${formatPrice(row.price)}</span>
        <span class="score" title="${row.score.toExponential(3)}">
          <span class="score-bar" style="width:${width}%"></span>
        </span>
      </li>`;
  });
  return `<ol class="results">${rows.join('')}</ol>`;
}

export function renderFilterPills(page: Page): string {
  if (page.applied_filters.length === 0) {
    return '<p class="no-filters">No filters applied.</p>';
  }
  const pills = page.applied_filters
    .map((f) => `<span class="pill">${escapeHtml(filterLabel(f))}</span>`)
    .join('');
  return `${pills}<button class="undo" data-action="undo">undo last</button>`;
}

export function renderStatus(state: BrowseState): string {
  const page = state.page;
  const parts: string[] = [];
  if (page) {
    parts.push(`<span class="query">results for "${escapeHtml(page.query)}"</span>`);
    parts.push(`<span class="count">${page.results.length} of ${page.total_items} items</span>`);
    if (page.untrained) {
      parts.push('<span class="untrained">no history for this query yet; ranking is uniform</span>');
    }
  }
  if (state.notice) parts.push(`<span class="notice">${escapeHtml(state.notice)}</span>`);
  if (state.error) parts.push(`<span class="error">${escapeHtml(state.error)}</span>`);
  return parts.join(' ');
}

export function renderFacetControls(meta: FacetMetadata): string {
  const brandOptions = meta.brands
    .map((b) => `<option value="${escapeHtml(b)}">${escapeHtml(b)}</option>`)
    .join('');
  const buckets = meta.price_buckets
    .map((bucket) => {
      const lo = bucket.lo === null ? '' : String(bucket.lo);
      const hi = bucket.hi === null ? '' : String(bucket.hi);
      return `<button class="bucket" data-lo="${lo}" data-hi="${hi}">${escapeHtml(bucket.label)}</button>`;
    })
    .join('');
  const modes = meta.modes
    .map((m) => `<button class="mode" data-mode="${m}">${m}</button>`)
    .join('');
  return `
    <div class="facet brands">
      <label>brand
        <select data-facet="brand">
          <option value="">any</option>
          ${brandOptions}
        </select>
      </label>
    </div>
    <div class="facet prices">${buckets}</div>
    <div class="facet modes">${modes}</div>`;
}

/**
 * Wire the whole page together: static skeleton once, then re-render the
 * dynamic regions on every store change. Events are delegated from the
 * root so re-renders don't lose handlers.
 */
export function mount(root: HTMLElement, store: BrowseStore, meta: FacetMetadata): void {
  root.innerHTML = `
    <div class="controls">${renderFacetControls(meta)}</div>
    <div class="status" data-region="status"></div>
    <div class="pills" data-region="pills"></div>
    <div class="list" data-region="results"></div>`;

  const regions = {
    status: root.querySelector('[data-region="status"]') as HTMLElement,
    pills: root.querySelector('[data-region="pills"]') as HTMLElement,
    results: root.querySelector('[data-region="results"]') as HTMLElement,
  };

  const update = (state: BrowseState) => {
    regions.status.innerHTML = renderStatus(state);
    regions.pills.innerHTML = state.page ? renderFilterPills(state.page) : '';
    regions.results.innerHTML = state.page ? renderResults(state.page) : '';
    root.classList.toggle('busy', state.busy);
    for (const btn of root.querySelectorAll<HTMLButtonElement>('button.mode')) {
      btn.classList.toggle('active', state.page?.mode === btn.dataset.mode);
    }
  };

  store.subscribe(update);
  update(store.getState());

  root.addEventListener('click', (event) => {
    const target = event.target as HTMLElement | null;
    if (!target) return;
    const bucket = target.closest<HTMLButtonElement>('button.bucket');
    if (bucket) {
      const lo = bucket.dataset.lo === '' ? null : Number(bucket.dataset.lo);
      const hi = bucket.dataset.hi === '' ? null : Number(bucket.dataset.hi);
      void store.applyPrice(lo, hi);
      return;
    }
    const mode = target.closest<HTMLButtonElement>('button.mode');
    if (mode && (mode.dataset.mode === 'soft' || mode.dataset.mode === 'hard')) {
      void store.switchMode(mode.dataset.mode);
      return;
    }
    if (target.closest('[data-action="undo"]')) {
      void store.undo();
    }
  });

  root.addEventListener('change', (event) => {
    const select = event.target as HTMLSelectElement | null;
    if (select?.dataset.facet === 'brand' && select.value) {
      void store.applyBrand(select.value);
    }
  });
}
