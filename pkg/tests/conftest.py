import pytest

from softfacet.facets import BrandVocabulary, Catalog, CategoricalFilter, Item, RangeFilter
from softfacet.training import Session


@pytest.fixture
def vocab():
    return BrandVocabulary(("acme", "bolt", "crux"))


@pytest.fixture
def small_catalog(vocab):
    items = [
        Item("item-a", 0, 100.0, "acme one"),
        Item("item-b", 1, 250.0, "bolt two"),
        Item("item-c", 2, 480.0, "crux three"),
        Item("item-d", 0, 105.0, "acme four"),
    ]
    return Catalog(items, vocab)


@pytest.fixture
def make_sessions():
    """Factory for randomized session logs over an arbitrary catalog."""

    def _make(rng, catalog, n, queries=("q1", "q2")):
        out = []
        ids = [it.id for it in catalog.items]
        k = len(catalog.vocabulary)
        for j in range(n):
            actions = []
            for _ in range(int(rng.integers(0, 4))):
                if rng.random() < 0.5:
                    actions.append(CategoricalFilter(int(rng.integers(0, k))))
                else:
                    lo = float(rng.uniform(50, 400))
                    actions.append(RangeFilter(lo, lo + float(rng.uniform(10, 120))))
            purchased = ids[int(rng.integers(0, len(ids)))] if rng.random() < 0.7 else None
            out.append(
                Session(
                    session_id=f"s{j:03d}",
                    query=str(rng.choice(list(queries))),
                    actions=tuple(actions),
                    purchased=purchased,
                )
            )
        return out

    return _make
