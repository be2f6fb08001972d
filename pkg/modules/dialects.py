"""Engine query dialects: site: query construction and limit checks."""

import re
import json
import logging
from dataclasses import dataclass, field, replace
from urllib.parse import urlsplit

from modules.errors import ConfigError, HostOnlyCollision, QueryTooLarge

logger = logging.getLogger('url_ranker')

FULL_URL = "full-url"
HOST_ONLY = "host-only"


@dataclass(frozen=True)
class EngineDialect:
    """Query syntax and limits of one search engine"""

    name: str
    site_mode: str = FULL_URL
    or_token: str = "OR"
    max_query_bytes: int = 2048
    max_query_terms: int = None
    daily_quota: int = 1000
    unreliable_url_patterns: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.site_mode not in (FULL_URL, HOST_ONLY):
            raise ConfigError(f"{self.name}: unknown site_mode {self.site_mode!r}")
        if self.max_query_bytes <= 0:
            raise ConfigError(f"{self.name}: max_query_bytes must be positive")
        if self.daily_quota <= 0:
            raise ConfigError(f"{self.name}: daily_quota must be positive")
        if self.max_query_terms is not None and self.max_query_terms < 1:
            raise ConfigError(f"{self.name}: max_query_terms must be positive or null")

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        data["unreliable_url_patterns"] = tuple(data.get("unreliable_url_patterns") or ())
        try:
            return cls(**data)
        except TypeError as e:
            raise ConfigError(f"Bad dialect entry {data.get('name')!r}: {e}") from e

    def with_overrides(self, **overrides):
        overrides = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **overrides) if overrides else self

    def unreliable(self, url):
        """True when the URL matches a pattern this engine is known to mishandle"""
        return any(re.search(pattern, url) for pattern in self.unreliable_url_patterns)


def load_dialects(path):
    """Load the dialect table (JSON list of EngineDialect objects) keyed by name"""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            entries = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"Cannot read dialects file {path}: {e}") from e

    dialects = {}
    for entry in entries:
        dialect = EngineDialect.from_dict(entry)
        dialects[dialect.name] = dialect
    logger.debug(f"Loaded {len(dialects)} dialects from {path}")
    return dialects


def max_urls_per_batch(dialect):
    """Largest q whose query stays within the term limit (site clauses plus OR tokens)"""
    if dialect.max_query_terms is None:
        return None
    return (dialect.max_query_terms + 1) // 2


def site_target(url, dialect):
    """The text after site: for one URL"""
    if dialect.site_mode == FULL_URL:
        return url
    # Host-only engines accept neither a scheme nor a path
    host = urlsplit(url).netloc or urlsplit(f"//{url}").netloc
    return f"{host.lower()}/"


def host_only_conflicts(urls, dialect):
    """URLs whose host-only form is shared with another URL of the list"""
    if dialect.site_mode != HOST_ONLY:
        return []
    seen = {}
    for url in urls:
        seen.setdefault(site_target(url, dialect), []).append(url)
    return [url for group in seen.values() if len(group) > 1 for url in group]


def host_only_path_losses(urls, dialect):
    """URLs with a path that a host-only site: clause cannot express"""
    if dialect.site_mode != HOST_ONLY:
        return []
    return [url for url in urls if urlsplit(url).path not in ("", "/")]


def build_query(urls, dialect):
    """Combine site: clauses for the URLs with the dialect's OR token"""
    urls = list(urls)
    if not urls:
        raise ValueError("cannot build a query for zero URLs")

    targets = [site_target(url, dialect) for url in urls]

    if dialect.site_mode == HOST_ONLY:
        owners = {}
        for url, target in zip(urls, targets):
            if target in owners and owners[target] != url:
                raise HostOnlyCollision(
                    f"{owners[target]} and {url} both reduce to site:{target}",
                    urls=(owners[target], url),
                )
            owners[target] = url

    query = f" {dialect.or_token} ".join(f"site:{target}" for target in targets)

    violation = validate_query(query, dialect)
    if violation:
        raise QueryTooLarge(f"{dialect.name}: {violation}")
    return query


def count_terms(query):
    """Whitespace-delimited tokens; a site: clause and an OR token are one term each"""
    return len(query.split())


def query_bytes(query):
    return len(query.encode("utf-8", errors="surrogatepass"))


def validate_query(query, dialect):
    """Return None when the query is legal, otherwise a description of the violation"""
    terms = count_terms(query)
    if terms == 0:
        return "empty query (zero terms)"

    size = query_bytes(query)
    if size > dialect.max_query_bytes:
        return f"query is {size} bytes, exceeds the {dialect.max_query_bytes}-byte limit"

    if dialect.max_query_terms is not None and terms > dialect.max_query_terms:
        return f"query has {terms} terms, exceeds the {dialect.max_query_terms}-term limit"

    return None
