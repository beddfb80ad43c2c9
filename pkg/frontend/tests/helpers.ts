import type { Page, ResultRow } from '../src/types.js';

export function makeRow(overrides: Partial<ResultRow> = {}): ResultRow {
  return {
    item_id: 'item-a',
    title: 'Item A',
    brand: 'acme',
    price: 120,
    score: 0.5,
    within_filter: true,
    ...overrides,
  };
}

export function makePage(overrides: Partial<Page> = {}): Page {
  return {
    session_id: 'sess-1',
    query: 'boots',
    mode: 'soft',
    untrained: false,
    applied_filters: [],
    total_items: 4,
    page_size: 20,
    results: [
      makeRow(),
      makeRow({ item_id: 'item-b', title: 'Item B', brand: 'bolt', price: 250, score: 0.3 }),
      makeRow({ item_id: 'item-c', title: 'Item C', brand: 'crux', price: 480, score: 0.2 }),
    ],
    ...overrides,
  };
}

export function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'Content-Type': 'application/json' },
  });
}
