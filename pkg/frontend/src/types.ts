/**
 * Wire types for the /v1 browsing API.
 *
 * These mirror the JSON the server produces; field names are kept
 * snake_case to match the payloads exactly.
 */

export type Mode = 'soft' | 'hard';

export interface WireFilter {
  facet: 'brand' | 'price';
  /** brand filters carry the brand name here */
  value?: string;
  /** price filters; null means the end is open */
  lo?: number | null;
  hi?: number | null;
}

export interface ResultRow {
  item_id: string;
  title: string;
  brand: string;
  price: number;
  score: number;
  /** false for items kept in the list even though they violate a filter */
  within_filter: boolean;
}

export interface Page {
  session_id: string;
  query: string;
  mode: Mode;
  untrained: boolean;
  applied_filters: WireFilter[];
  total_items: number;
  page_size: number;
  results: ResultRow[];
}

export interface PriceBucket {
  lo: number | null;
  hi: number | null;
  label: string;
}

export interface FacetMetadata {
  brands: string[];
  price_buckets: PriceBucket[];
  modes: Mode[];
}

export interface ErrorBody {
  error: {
    code: string;
    message: string;
  };
}
