"""HTTP browsing service.

Serves the reranking engine over a small JSON API under /v1. Sessions
live in memory with a TTL; one write at a time per session. Every error
body has the shape {"error": {"code", "message"}}.
"""

from __future__ import annotations

import json
import math
import threading
import time
import uuid
from dataclasses import dataclass, field
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .facets import Catalog, FacetFilter, satisfies
from .logio import filter_from_wire, filter_to_wire, load_model, read_catalog, UnknownBrandError
from .rerank import (
    BrowseSession,
    PriorPropensity,
    ZeroLikelihoodError,
    new_session,
    normalize_prior,
    replay_filters,
)
from .training import ModelConfig, TrainedModel, prior_states

DEFAULT_PAGE_SIZE = 20
DEFAULT_SESSION_TTL = 1800.0


@dataclass
class ServiceConfig:
    catalog_path: str
    model_path: Optional[str] = None
    host: str = "127.0.0.1"
    port: int = 8080
    page_size: int = DEFAULT_PAGE_SIZE
    default_mode: str = "soft"
    session_ttl_seconds: float = DEFAULT_SESSION_TTL
    bucket_width: float = 50.0

    def __post_init__(self):
        if self.page_size < 1:
            raise ValueError("page_size must be >= 1")
        if self.default_mode not in ("soft", "hard"):
            raise ValueError("default_mode must be 'soft' or 'hard'")
        if self.session_ttl_seconds <= 0:
            raise ValueError("session_ttl_seconds must be > 0")

    @classmethod
    def load(cls, path: str) -> "ServiceConfig":
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown service config fields: {sorted(unknown)}")
        return cls(**doc)


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message


@dataclass
class StoredSession:
    session: BrowseSession
    mode: str
    untrained: bool
    last_access: float
    lock: threading.Lock = field(default_factory=threading.Lock)


class SessionStore:
    """In-memory sessions with lazy TTL eviction."""

    def __init__(self, ttl_seconds: float):
        self.ttl = ttl_seconds
        self._lock = threading.Lock()
        self._sessions: dict[str, StoredSession] = {}

    def _evict(self, now: float) -> None:
        dead = [sid for sid, st in self._sessions.items() if now - st.last_access > self.ttl]
        for sid in dead:
            del self._sessions[sid]

    def put(self, stored: StoredSession) -> None:
        with self._lock:
            self._evict(time.monotonic())
            self._sessions[stored.session.session_id] = stored

    def get(self, session_id: str) -> StoredSession:
        with self._lock:
            now = time.monotonic()
            self._evict(now)
            stored = self._sessions.get(session_id)
            if stored is None:
                raise ApiError(404, "session_not_found", f"no session {session_id!r}")
            stored.last_access = now
            return stored

    def __len__(self) -> int:
        return len(self._sessions)


class CreateSessionBody(BaseModel):
    query: str


class ModeBody(BaseModel):
    mode: str


class Engine:
    """Catalog, trained model, and session bookkeeping behind the endpoints."""

    def __init__(self, catalog: Catalog, model: Optional[TrainedModel], config: ServiceConfig):
        self.catalog = catalog
        self.model = model
        self.config = config
        self.store = SessionStore(config.session_ttl_seconds)
        mc = model.config if model is not None else ModelConfig()
        self._fallback_states = prior_states(catalog, mc)

    def states_for(self, query: str):
        if self.model is not None and query in self.model.queries:
            return self.model.queries[query].states, False
        return self._fallback_states, True

    def prior_for(self, query: str) -> PriorPropensity:
        if self.model is not None and query in self.model.queries:
            relevance = self.model.queries[query].relevance
            ordered = sorted(relevance.items(), key=lambda kv: (-kv[1], kv[0]))
            return normalize_prior(ordered)
        uniform = [(item.id, 1.0) for item in self.catalog.items]
        return normalize_prior(sorted(uniform, key=lambda kv: kv[0]))

    def page(self, stored: StoredSession) -> dict:
        session = stored.session
        entries = session.current_propensity.entries
        filters = session.applied_filters
        results = []
        for item_id, score in entries[: self.config.page_size]:
            item = self.catalog.get(item_id)
            results.append(
                {
                    "item_id": item_id,
                    "title": item.title,
                    "brand": self.catalog.brand_name(item),
                    "price": item.price,
                    "score": score,
                    "within_filter": all(satisfies(item, f) for f in filters),
                }
            )
        return {
            "session_id": session.session_id,
            "query": session.query,
            "mode": stored.mode,
            "untrained": stored.untrained,
            "applied_filters": [
                filter_to_wire(f, self.catalog.vocabulary) for f in filters
            ],
            "total_items": len(entries),
            "page_size": self.config.page_size,
            "results": results,
        }

    def facet_metadata(self) -> dict:
        prices = [item.price for item in self.catalog.items]
        width = self.config.bucket_width
        first = math.floor(min(prices) / width)
        last = math.floor(max(prices) / width)
        buckets = [{"lo": None, "hi": first * width, "label": f"under {first * width:g}"}]
        for k in range(first, last + 1):
            buckets.append(
                {"lo": k * width, "hi": (k + 1) * width, "label": f"{k * width:g} to {(k + 1) * width:g}"}
            )
        buckets.append({"lo": (last + 1) * width, "hi": None, "label": f"over {(last + 1) * width:g}"})
        return {
            "brands": list(self.catalog.vocabulary.names),
            "price_buckets": buckets,
            "modes": ["soft", "hard"],
        }


def _replace_same_facet(filters: tuple[FacetFilter, ...], new: FacetFilter) -> tuple[FacetFilter, ...]:
    """Same-facet selection replaces the previous one, except an exact repost.

    Reposting the identical filter is a re-assertion and chains another
    update; picking a different value within the facet swaps the old
    filter out and the remaining sequence is replayed.
    """
    if new in filters:
        return filters + (new,)
    kept = tuple(f for f in filters if type(f) is not type(new))
    return kept + (new,)


def create_app(engine: Engine) -> FastAPI:
    app = FastAPI(title="soft faceted browsing", version="1.0")

    @app.exception_handler(ApiError)
    async def api_error_handler(request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status,
            content={"error": {"code": exc.code, "message": exc.message}},
        )

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422,
            content={"error": {"code": "invalid_request", "message": str(exc.errors()[:1])}},
        )

    @app.get("/v1/health")
    async def health():
        return {"status": "ok"}

    @app.get("/v1/catalog/facets")
    async def facets():
        return engine.facet_metadata()

    @app.post("/v1/sessions")
    async def create_session(body: CreateSessionBody):
        query = body.query.strip()
        if not query:
            raise ApiError(400, "empty_query", "query must be non-empty")
        if len(engine.catalog) == 0:
            raise ApiError(404, "catalog_empty", "no catalog items to rank")
        prior = engine.prior_for(query)
        _, untrained = engine.states_for(query)
        session = new_session(uuid.uuid4().hex, query, prior)
        stored = StoredSession(
            session=session,
            mode=engine.config.default_mode,
            untrained=untrained,
            last_access=time.monotonic(),
        )
        engine.store.put(stored)
        # untrained queries still get a session, but flagged and not 201
        status = 200 if untrained else 201
        return JSONResponse(status_code=status, content=engine.page(stored))

    @app.post("/v1/sessions/{session_id}/filters")
    async def post_filter(session_id: str, request: Request):
        stored = engine.store.get(session_id)
        try:
            body = await request.json()
        except json.JSONDecodeError:
            raise ApiError(422, "invalid_filter", "body must be a JSON object")
        if not isinstance(body, dict):
            raise ApiError(422, "invalid_filter", "body must be a JSON object")
        mode = body.pop("mode", None)
        if mode is not None and mode not in ("soft", "hard"):
            raise ApiError(422, "invalid_mode", f"mode must be 'soft' or 'hard', got {mode!r}")
        try:
            filt = filter_from_wire(body, engine.catalog.vocabulary)
        except UnknownBrandError as exc:
            raise ApiError(422, "unknown_brand", f"unknown brand {exc.args[0]!r}")
        except ValueError as exc:
            raise ApiError(422, "invalid_filter", str(exc))

        with stored.lock:
            if mode is not None:
                stored.mode = mode
            states, _ = engine.states_for(stored.session.query)
            new_filters = _replace_same_facet(stored.session.applied_filters, filt)
            try:
                stored.session = replay_filters(
                    stored.session, new_filters, states, mode=stored.mode
                )
            except ZeroLikelihoodError:
                # the selection would wipe out the whole list; leave the
                # session as it was instead of serving an empty page
                raise ApiError(
                    409, "zero_posterior", "filter leaves no posterior mass; not applied"
                )
            return engine.page(stored)

    @app.delete("/v1/sessions/{session_id}/filters/last")
    async def delete_last_filter(session_id: str):
        stored = engine.store.get(session_id)
        with stored.lock:
            filters = stored.session.applied_filters
            if not filters:
                raise ApiError(409, "no_filters", "session has no filters to remove")
            states, _ = engine.states_for(stored.session.query)
            try:
                stored.session = replay_filters(
                    stored.session, filters[:-1], states, mode=stored.mode
                )
            except ZeroLikelihoodError:
                raise ApiError(
                    409, "zero_posterior", "remaining filters leave no posterior mass"
                )
            return engine.page(stored)

    @app.put("/v1/sessions/{session_id}/mode")
    async def set_mode(session_id: str, body: ModeBody):
        if body.mode not in ("soft", "hard"):
            raise ApiError(422, "invalid_mode", f"mode must be 'soft' or 'hard', got {body.mode!r}")
        stored = engine.store.get(session_id)
        with stored.lock:
            states, _ = engine.states_for(stored.session.query)
            try:
                replayed = replay_filters(
                    stored.session, stored.session.applied_filters, states, mode=body.mode
                )
            except ZeroLikelihoodError:
                # keep the old mode rather than strand the session on an
                # unservable replay
                raise ApiError(
                    409, "zero_posterior", "applied filters leave no posterior mass in this mode"
                )
            stored.mode = body.mode
            stored.session = replayed
            return engine.page(stored)

    return app


def build_engine(config: ServiceConfig) -> Engine:
    catalog = read_catalog(config.catalog_path)
    model = None
    if config.model_path:
        model = load_model(config.model_path, catalog)
    return Engine(catalog, model, config)


def serve(config: ServiceConfig) -> None:
    import uvicorn

    app = create_app(build_engine(config))
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
