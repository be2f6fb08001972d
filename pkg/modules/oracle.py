"""Batched ranking oracles backed by a search engine (live or recorded)."""

import time
import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Protocol, Sequence

from modules.budget import QueryBudget
from modules.cache import cache_key
from modules.dialects import HOST_ONLY, build_query, count_terms, query_bytes
from modules.errors import CacheMiss, MalformedResponse, TransportError
from modules.ingest import normalize_url, url_host

logger = logging.getLogger('url_ranker')

RETRY_BACKOFF = (1, 2, 4)


@dataclass(frozen=True)
class BatchResult:
    """One oracle answer: queried URLs best first, plus those the engine does not index"""

    ordered_urls: tuple
    unindexed: frozenset = frozenset()
    raw: object = field(default=None, compare=False)
    timestamp: str = None
    from_cache: bool = field(default=False, compare=False)

    def check(self, queried):
        """Enforce ordered_urls ∪ unindexed == queried, no duplicates"""
        queried = set(queried)
        if len(set(self.ordered_urls)) != len(self.ordered_urls):
            raise MalformedResponse(f"answer repeats a URL: {list(self.ordered_urls)}")
        if set(self.ordered_urls) | set(self.unindexed) != queried:
            raise MalformedResponse("answer does not cover exactly the queried URLs")
        if set(self.ordered_urls) & set(self.unindexed):
            raise MalformedResponse("a URL is both ranked and unindexed")
        return self


class RankingOracle(Protocol):
    """Anything that orders a batch of items: an engine, a replay, a simulation"""

    name: str

    def rank(self, items: Sequence) -> BatchResult:
        ...


def now_iso():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def attribute_hits(hits, urls, dialect):
    """Map result pages back to the queried URLs; first hit fixes the position"""
    if dialect.site_mode == HOST_ONLY:
        owners = {url_host(url): url for url in urls}

        def owner(hit):
            return owners.get(url_host(hit))
    else:
        normalized = [(normalize_url(url), url) for url in urls]

        def owner(hit):
            hit = normalize_url(hit)
            matches = [url for prefix, url in normalized if hit.startswith(prefix)
                       or hit.rstrip("/") == prefix.rstrip("/")]
            return max(matches, key=len) if matches else None

    ordered = []
    for hit in hits:
        url = owner(hit)
        if url is not None and url not in ordered:
            ordered.append(url)

    unindexed = frozenset(url for url in urls if url not in ordered)
    return BatchResult(ordered_urls=tuple(ordered), unindexed=unindexed, raw=list(hits))


def execute(urls, dialect, budget, transport, cache=None, engine=None, replay_only=False,
            sleep=time.sleep, backoff=RETRY_BACKOFF):
    """Run one batch against an engine, going through the cache and the budget"""
    urls = list(urls)
    engine = engine or dialect.name
    query = build_query(urls, dialect)
    key = cache_key(urls, engine)

    if cache is not None:
        recorded = cache.lookup(key, engine)
        if recorded is not None:
            logger.debug(f"{engine}: cache hit for {len(urls)} URLs")
            return BatchResult(
                ordered_urls=tuple(recorded["answer"]),
                unindexed=frozenset(recorded["unindexed"]),
                timestamp=recorded.get("timestamp"),
                from_cache=True,
            ).check(urls)

    if replay_only:
        raise CacheMiss(f"{engine}: no recorded answer for {sorted(urls)}")

    if cache is not None:
        logger.warning(f"{engine}: cache miss for {len(urls)} URLs, querying the engine")

    for url in urls:
        if dialect.unreliable(url):
            logger.warning(f"{engine}: {url} matches a pattern this engine answers unreliably")

    # Budget is checked before any I/O; every attempt counts against it
    hits = None
    last_error = None
    for delay in (0,) + tuple(backoff):
        if delay:
            logger.warning(f"{engine}: retrying in {delay}s after: {last_error}")
            sleep(delay)
        budget.consume()
        try:
            hits = transport.fetch(query, urls)
            break
        except TransportError as e:
            last_error = e
    else:
        raise TransportError(f"{engine}: giving up after {len(backoff) + 1} attempts: {last_error}")

    result = attribute_hits(hits, urls, dialect)
    result = BatchResult(
        ordered_urls=result.ordered_urls,
        unindexed=result.unindexed,
        raw=result.raw,
        timestamp=now_iso(),
    ).check(urls)

    if result.unindexed:
        logger.warning(f"{engine}: {len(result.unindexed)} of {len(urls)} URLs not indexed")

    if cache is not None:
        cache.record({
            "key": key,
            "engine": engine,
            "urls_sorted": sorted(urls),
            "urls_query_order": urls,
            "answer": list(result.ordered_urls),
            "unindexed": sorted(result.unindexed),
            "bytes": query_bytes(query),
            "terms": count_terms(query),
            "timestamp": result.timestamp,
        })
    return result


class EngineOracle:
    """RankingOracle over a search engine dialect, transport, budget and cache"""

    def __init__(self, name, dialect, transport=None, budget=None, cache=None,
                 replay_only=False, sleep=time.sleep, backoff=RETRY_BACKOFF, ledger_path=None):
        self.name = name
        self.dialect = dialect
        self.transport = transport
        self.budget = budget or QueryBudget(name, dialect.daily_quota, ledger_path=ledger_path)
        self.cache = cache
        self.replay_only = replay_only
        self.sleep = sleep
        self.backoff = backoff

    def rank(self, items):
        urls = [item.url for item in items]
        return execute(
            urls, self.dialect, self.budget, self.transport,
            cache=self.cache, engine=self.name, replay_only=self.replay_only,
            sleep=self.sleep, backoff=self.backoff,
        )
