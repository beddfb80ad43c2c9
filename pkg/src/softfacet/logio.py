"""File formats: catalog JSONL, session log JSONL, and the trained model file.

Catalog lines look like {"id", "title", "brand", "price"}; session lines
carry a query, a list of filter actions, and an optional purchase. Open
range ends are encoded as null. The model file groups the per-item state
documents by query and round-trips float64 values exactly.
"""

from __future__ import annotations

import json
import math
import os
from typing import Mapping, Optional, Sequence

from .facets import BrandVocabulary, Catalog, CategoricalFilter, FacetFilter, Item, RangeFilter
from .rerank import ItemModel
from .training import (
    ModelConfig,
    QueryModel,
    Session,
    TrainedModel,
    item_state_doc,
    item_state_from_doc,
)

MODEL_FORMAT_VERSION = 1


class FileFormatError(ValueError):
    """A data file violated its schema; carries the offending line number."""

    def __init__(self, path: str, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


def _parse_line(path: str, line_no: int, raw: str) -> dict:
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise FileFormatError(path, line_no, f"invalid JSON: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise FileFormatError(path, line_no, "line must be a JSON object")
    return doc


def read_catalog(path: str) -> Catalog:
    """Load a catalog from JSONL; schema errors report the line number."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            doc = _parse_line(path, line_no, raw)
            for key in ("id", "brand", "price"):
                if key not in doc:
                    raise FileFormatError(path, line_no, f"missing field {key!r}")
            if not isinstance(doc["id"], str) or not doc["id"]:
                raise FileFormatError(path, line_no, "id must be a non-empty string")
            if not isinstance(doc["brand"], str) or not doc["brand"]:
                raise FileFormatError(path, line_no, "brand must be a non-empty string")
            price = doc["price"]
            if not isinstance(price, (int, float)) or isinstance(price, bool):
                raise FileFormatError(path, line_no, "price must be a number")
            if not (math.isfinite(float(price)) and float(price) >= 0.0):
                raise FileFormatError(path, line_no, "price must be finite and >= 0")
            rows.append((doc["id"], doc["brand"], float(price), str(doc.get("title", ""))))
    if not rows:
        raise FileFormatError(path, 0, "catalog is empty")
    try:
        return Catalog.from_items(rows)
    except ValueError as exc:
        raise FileFormatError(path, 0, str(exc)) from None


def write_catalog(catalog: Catalog, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for item in catalog.items:
            fh.write(
                json.dumps(
                    {
                        "id": item.id,
                        "title": item.title,
                        "brand": catalog.brand_name(item),
                        "price": item.price,
                    }
                )
                + "\n"
            )


def filter_to_wire(filt: FacetFilter, vocabulary: BrandVocabulary) -> dict:
    """Wire form of a filter: brand by name, price with null open ends."""
    if isinstance(filt, CategoricalFilter):
        return {"facet": "brand", "value": vocabulary.name_of(filt.brand_index)}
    if isinstance(filt, RangeFilter):
        return {
            "facet": "price",
            "lo": None if math.isinf(filt.lo) else filt.lo,
            "hi": None if math.isinf(filt.hi) else filt.hi,
        }
    raise TypeError(f"not a facet filter: {filt!r}")


class UnknownBrandError(KeyError):
    pass


def filter_from_wire(doc: Mapping, vocabulary: BrandVocabulary) -> FacetFilter:
    """Parse one wire-format filter; raises on schema or vocabulary problems."""
    facet = doc.get("facet")
    if facet == "brand":
        value = doc.get("value")
        if not isinstance(value, str) or not value:
            raise ValueError("brand filter needs a non-empty string 'value'")
        try:
            index = vocabulary.index_of(value)
        except KeyError:
            raise UnknownBrandError(value) from None
        return CategoricalFilter(index)
    if facet == "price":
        lo, hi = doc.get("lo"), doc.get("hi")
        for name, v in (("lo", lo), ("hi", hi)):
            if v is not None and (not isinstance(v, (int, float)) or isinstance(v, bool)):
                raise ValueError(f"price filter {name!r} must be a number or null")
        lo_f = float("-inf") if lo is None else float(lo)
        hi_f = float("inf") if hi is None else float(hi)
        if math.isnan(lo_f) or math.isnan(hi_f):
            raise ValueError("price bounds must not be NaN")
        if lo_f > hi_f:
            raise ValueError(f"price filter lower bound {lo_f} exceeds upper bound {hi_f}")
        return RangeFilter(lo_f, hi_f)
    raise ValueError(f"facet must be 'brand' or 'price', got {facet!r}")


def read_sessions(path: str, catalog: Catalog) -> tuple[list[Session], dict[str, int]]:
    """Load a session log; unknown brand names are dropped and counted.

    Malformed lines fail hard with the line number; unknown purchased
    item ids are preserved so the extraction step can report them.
    """
    sessions: list[Session] = []
    rejects = {"unknown_brand": 0}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            doc = _parse_line(path, line_no, raw)
            for key in ("session_id", "query", "actions"):
                if key not in doc:
                    raise FileFormatError(path, line_no, f"missing field {key!r}")
            if not isinstance(doc["actions"], list):
                raise FileFormatError(path, line_no, "actions must be a list")
            actions = []
            for action_doc in doc["actions"]:
                if not isinstance(action_doc, dict):
                    raise FileFormatError(path, line_no, "each action must be an object")
                try:
                    actions.append(filter_from_wire(action_doc, catalog.vocabulary))
                except UnknownBrandError:
                    rejects["unknown_brand"] += 1
                except ValueError as exc:
                    raise FileFormatError(path, line_no, str(exc)) from None
            purchased = doc.get("purchased")
            if purchased is not None and not isinstance(purchased, str):
                raise FileFormatError(path, line_no, "purchased must be a string or null")
            sessions.append(
                Session(
                    session_id=str(doc["session_id"]),
                    query=str(doc["query"]),
                    actions=tuple(actions),
                    purchased=purchased,
                )
            )
    return sessions, rejects


def write_sessions(sessions: Sequence[Session], vocabulary: BrandVocabulary, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in sessions:
            fh.write(
                json.dumps(
                    {
                        "session_id": s.session_id,
                        "query": s.query,
                        "actions": [filter_to_wire(a, vocabulary) for a in s.actions],
                        "purchased": s.purchased,
                    }
                )
                + "\n"
            )


def save_model(model: TrainedModel, path: str) -> None:
    """Write the trained model as one JSON document grouped per query."""
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "config": model.config.to_dict(),
        "vocabulary": list(model.catalog.vocabulary.names),
        "metadata": {
            "session_count": model.session_count,
            "trained_at": model.trained_at,
        },
        "queries": [
            {
                "query": qm.query,
                "session_count": qm.session_count,
                "relevance": {i: qm.relevance[i] for i in sorted(qm.relevance)},
                "states": [item_state_doc(qm.states[i]) for i in sorted(qm.states)],
            }
            for _, qm in sorted(model.queries.items())
        ],
    }
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
    os.replace(tmp, path)


def load_model(path: str, catalog: Catalog) -> TrainedModel:
    """Load a model file back against its catalog."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version: {version!r}")
    if tuple(doc["vocabulary"]) != catalog.vocabulary.names:
        raise ValueError("model vocabulary does not match the catalog")
    config = ModelConfig.from_dict(doc["config"])
    queries: dict[str, QueryModel] = {}
    for qdoc in doc["queries"]:
        states = {
            sdoc["item_id"]: item_state_from_doc(sdoc, catalog) for sdoc in qdoc["states"]
        }
        queries[qdoc["query"]] = QueryModel(
            query=qdoc["query"],
            states=states,
            relevance={k: float(v) for k, v in qdoc["relevance"].items()},
            session_count=int(qdoc["session_count"]),
        )
    return TrainedModel(
        config=config,
        catalog=catalog,
        queries=queries,
        session_count=int(doc["metadata"]["session_count"]),
        trained_at=doc["metadata"].get("trained_at"),
    )
