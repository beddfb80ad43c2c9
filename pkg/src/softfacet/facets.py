"""Catalog entities and facet filters.

Filters are a tagged union: a categorical filter selects one brand by
vocabulary index, a range filter selects a closed price interval whose
ends may be the infinity sentinels for open-ended buckets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

NEG_INF = float("-inf")
POS_INF = float("inf")


@dataclass(frozen=True)
class BrandVocabulary:
    """Ordered collection of distinct brand names; position is the brand index."""

    names: tuple[str, ...]

    def __post_init__(self):
        if len(self.names) == 0:
            raise ValueError("vocabulary must contain at least one brand")
        if len(set(self.names)) != len(self.names):
            raise ValueError("vocabulary contains duplicate brand names")

    def __len__(self) -> int:
        return len(self.names)

    def index_of(self, name: str) -> int:
        """Index of a brand name, or KeyError if unknown."""
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown brand: {name!r}") from None

    def name_of(self, index: int) -> str:
        if not 0 <= index < len(self.names):
            raise IndexError(f"brand index {index} out of range [0, {len(self.names)})")
        return self.names[index]


@dataclass(frozen=True)
class Item:
    """One catalog entry."""

    id: str
    brand_index: int
    price: float
    title: str = ""

    def __post_init__(self):
        if not self.id:
            raise ValueError("item id must be non-empty")
        if self.brand_index < 0:
            raise ValueError(f"item {self.id}: brand_index must be >= 0")
        if not (math.isfinite(self.price) and self.price >= 0.0):
            raise ValueError(f"item {self.id}: price must be finite and >= 0")


@dataclass(frozen=True)
class CategoricalFilter:
    """Selection of a single brand."""

    brand_index: int

    def __post_init__(self):
        if self.brand_index < 0:
            raise ValueError("brand_index must be >= 0")


@dataclass(frozen=True)
class RangeFilter:
    """Closed price interval [lo, hi]; either end may be infinite."""

    lo: float
    hi: float

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise ValueError("range bounds must not be NaN")
        if self.lo > self.hi:
            raise ValueError(f"range lower bound {self.lo} exceeds upper bound {self.hi}")


FacetFilter = Union[CategoricalFilter, RangeFilter]


def satisfies(item: Item, filt: FacetFilter) -> bool:
    """Literal filter membership: brand equality or price inside the closed interval."""
    if isinstance(filt, CategoricalFilter):
        return item.brand_index == filt.brand_index
    if isinstance(filt, RangeFilter):
        return filt.lo <= item.price <= filt.hi
    raise TypeError(f"not a facet filter: {filt!r}")


class Catalog:
    """Immutable item collection with its brand vocabulary and id lookup."""

    def __init__(self, items, vocabulary: BrandVocabulary):
        items = tuple(items)
        by_id: dict[str, Item] = {}
        for it in items:
            if it.id in by_id:
                raise ValueError(f"duplicate item id: {it.id!r}")
            if it.brand_index >= len(vocabulary):
                raise ValueError(
                    f"item {it.id}: brand_index {it.brand_index} outside vocabulary of size {len(vocabulary)}"
                )
            by_id[it.id] = it
        self.items = items
        self.vocabulary = vocabulary
        self._by_id = by_id

    def __len__(self) -> int:
        return len(self.items)

    def __contains__(self, item_id: str) -> bool:
        return item_id in self._by_id

    def get(self, item_id: str) -> Item:
        try:
            return self._by_id[item_id]
        except KeyError:
            raise KeyError(f"unknown item id: {item_id!r}") from None

    def brand_name(self, item: Item) -> str:
        return self.vocabulary.name_of(item.brand_index)

    @classmethod
    def from_items(cls, raw: list[tuple[str, str, float, str]]) -> "Catalog":
        """Build from (id, brand_name, price, title) rows; vocabulary is the sorted brand set."""
        names = tuple(sorted({brand for _, brand, _, _ in raw}))
        vocab = BrandVocabulary(names)
        items = [
            Item(id=i, brand_index=vocab.index_of(b), price=p, title=t)
            for i, b, p, t in raw
        ]
        return cls(items, vocab)
