"""Three-tier time-bounded query cache.

Tier 1 matches the raw question string exactly. Tier 3 matches by
cosine similarity of hashed-trigram embeddings over the case-folded
question (default threshold 0.95). Tier 2 holds reusable query plans
keyed on normalized query text; it survives result invalidation because
plans depend only on the schema.

The clock is always injected (`now`), so expiry is deterministic under
test. Every tier is LRU-bounded and thread-safe.
"""

from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass
from typing import Any

import numpy as np

from .resolve import HashedTrigramEmbedding, cosine

DEFAULT_TTL = 300.0
DEFAULT_CAPACITY = 1024
DEFAULT_SEMANTIC_THRESHOLD = 0.95


@dataclass
class CacheEntry:
    key: str
    value: Any
    inserted_at: float
    ttl: float
    embedding: np.ndarray | None = None

    def expired(self, now: float) -> bool:
        return now > self.inserted_at + self.ttl


@dataclass(frozen=True)
class CacheHit:
    tier: str  # exact | semantic | plan
    value: Any
    similarity: float = 1.0


def _fold(question: str) -> str:
    return " ".join(question.lower().split())


class QueryCache:
    """Result cache (tiers 1 and 3) plus plan cache (tier 2)."""

    def __init__(
        self,
        ttl: float = DEFAULT_TTL,
        capacity: int = DEFAULT_CAPACITY,
        semantic_threshold: float = DEFAULT_SEMANTIC_THRESHOLD,
        provider: HashedTrigramEmbedding | None = None,
    ):
        if ttl <= 0:
            raise ValueError("ttl must be positive")
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.ttl = ttl
        self.capacity = capacity
        self.semantic_threshold = semantic_threshold
        self.provider = provider or HashedTrigramEmbedding()
        self._results: OrderedDict[str, CacheEntry] = OrderedDict()
        self._plans: OrderedDict[str, CacheEntry] = OrderedDict()
        self._lock = threading.Lock()
        self.counters = {
            "hits_exact": 0,
            "hits_semantic": 0,
            "hits_plan": 0,
            "misses": 0,
            "evictions": 0,
            "invalidations": 0,
        }

    # -- result tiers -----------------------------------------------------

    def get(self, question: str, now: float) -> CacheHit | None:
        with self._lock:
            self._purge(self._results, now)
            entry = self._results.get(question)
            if entry is not None:
                self._results.move_to_end(question)
                self.counters["hits_exact"] += 1
                return CacheHit(tier="exact", value=entry.value)
            probe = self.provider.embed(_fold(question))
            best: tuple[float, str] | None = None
            for key, entry in self._results.items():
                if entry.embedding is None:
                    continue
                sim = cosine(probe, entry.embedding)
                if sim >= self.semantic_threshold and (best is None or sim > best[0]):
                    best = (sim, key)
            if best is not None:
                sim, key = best
                self._results.move_to_end(key)
                self.counters["hits_semantic"] += 1
                return CacheHit(tier="semantic", value=self._results[key].value, similarity=sim)
            self.counters["misses"] += 1
            return None

    def put(self, question: str, value: Any, now: float, ttl: float | None = None) -> None:
        ttl = self.ttl if ttl is None else ttl
        if ttl <= 0:
            raise ValueError("ttl must be positive")
        with self._lock:
            entry = CacheEntry(
                key=question,
                value=value,
                inserted_at=now,
                ttl=ttl,
                embedding=self.provider.embed(_fold(question)),
            )
            self._results[question] = entry
            self._results.move_to_end(question)
            self._evict(self._results)

    # -- plan tier ---------------------------------------------------------

    def get_plan(self, normalized_query: str, now: float) -> CacheHit | None:
        with self._lock:
            self._purge(self._plans, now)
            entry = self._plans.get(normalized_query)
            if entry is None:
                return None
            self._plans.move_to_end(normalized_query)
            self.counters["hits_plan"] += 1
            return CacheHit(tier="plan", value=entry.value)

    def put_plan(self, normalized_query: str, plan: Any, now: float) -> None:
        with self._lock:
            self._plans[normalized_query] = CacheEntry(
                key=normalized_query, value=plan, inserted_at=now, ttl=self.ttl
            )
            self._plans.move_to_end(normalized_query)
            self._evict(self._plans)

    # -- invalidation ---------------------------------------------------------

    def invalidate_all(self, include_plans: bool = False) -> None:
        """Flush the result tiers; graph writes must call this. Plans are
        kept unless the schema changed (include_plans=True)."""
        with self._lock:
            self._results.clear()
            if include_plans:
                self._plans.clear()
            self.counters["invalidations"] += 1

    # -- internals ---------------------------------------------------------

    def _purge(self, store: OrderedDict, now: float) -> None:
        dead = [k for k, e in store.items() if e.expired(now)]
        for k in dead:
            del store[k]

    def _evict(self, store: OrderedDict) -> None:
        while len(store) > self.capacity:
            store.popitem(last=False)
            self.counters["evictions"] += 1

    def metrics(self) -> dict:
        with self._lock:
            return dict(self.counters, entries=len(self._results), plans=len(self._plans))
