"""Expert lists: loading, URL normalization, dedup and list-length windows."""

import json
import logging
from dataclasses import dataclass, replace
from datetime import date
from pathlib import Path
from urllib.parse import urlsplit, urlunsplit

import pandas as pd

from modules.errors import DuplicateRank, MissingUrl, ParseError
from modules.ranking import Item

logger = logging.getLogger('url_ranker')

COLUMNS = ["rank", "label", "url"]


def normalize_url(url):
    """Trim whitespace and lowercase scheme and host; the path keeps its case"""
    url = url.strip()
    parts = urlsplit(url)
    return urlunsplit((parts.scheme.lower(), parts.netloc.lower(), parts.path, parts.query, parts.fragment))


def url_host(url):
    parts = urlsplit(url.strip())
    if not parts.netloc:
        parts = urlsplit(f"//{url.strip()}")
    return parts.netloc.lower()


def is_absolute_url(url):
    parts = urlsplit(url)
    return bool(parts.scheme) and bool(parts.netloc)


@dataclass(frozen=True)
class ExpertEntry:
    rank: int
    label: str
    url: str


@dataclass(frozen=True)
class ExpertList:
    """An authoritative ranking of real-world entities mapped to URLs (rank 1 best)"""

    name: str
    entries: tuple
    source_url: str = None
    retrieved_on: date = None

    def __len__(self):
        return len(self.entries)

    def items(self):
        """Ranking items in expert order; the normalized URL is the item id"""
        return [Item(id=entry.url, label=entry.label, url=entry.url) for entry in self.entries]

    def ids(self):
        return [entry.url for entry in self.entries]


def _text(value):
    """Cell as stripped text; short CSV rows leave NaN in the missing cells"""
    if value is None or (not isinstance(value, (list, dict)) and pd.isna(value)):
        return ""
    return str(value).strip()


def _renumber(entries):
    return tuple(replace(entry, rank=position) for position, entry in enumerate(entries, start=1))


def _read_rows(path, fmt):
    """Rows as (line number, dict) pairs plus list-level metadata"""
    meta = {}
    if fmt == "csv":
        try:
            frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
        except pd.errors.EmptyDataError as e:
            raise ParseError(f"{path} is empty") from e
        except (pd.errors.ParserError, UnicodeDecodeError) as e:
            raise ParseError(f"{path}: {e}") from e
        frame.columns = [str(column).strip().lower() for column in frame.columns]
        missing = [column for column in COLUMNS if column not in frame.columns]
        if missing:
            raise ParseError(f"{path}: missing column(s) {', '.join(missing)}", line=1)
        # header is line 1
        rows = [(index + 2, record) for index, record in enumerate(frame.to_dict("records"))]
    elif fmt == "json":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except ValueError as e:
            raise ParseError(f"{path}: {e}") from e
        if isinstance(data, dict):
            meta = {key: data.get(key) for key in ("name", "source_url", "retrieved_on")}
            data = data.get("entries")
        if not isinstance(data, list):
            raise ParseError(f"{path}: expected a list of entries")
        rows = [(index + 1, record) for index, record in enumerate(data)]
    else:
        raise ParseError(f"unknown expert list format {fmt!r}")

    if not rows:
        raise ParseError(f"{path} has no entries")
    return rows, meta


def load_expert_list(path, fmt=None):
    """Load and validate an expert list (CSV rank,label,url or JSON)"""
    path = Path(path)
    fmt = fmt or ("json" if path.suffix.lower() == ".json" else "csv")
    if not path.exists():
        raise ParseError(f"{path} does not exist")

    rows, meta = _read_rows(path, fmt)

    entries = []
    seen_ranks = {}
    for line, record in rows:
        if not isinstance(record, dict):
            raise ParseError("entry is not an object", line=line)
        try:
            rank = int(_text(record.get("rank")))
        except ValueError:
            raise ParseError(f"rank {record.get('rank')!r} is not an integer", line=line)
        if rank < 1:
            raise ParseError(f"rank {rank} must be positive", line=line)
        if rank in seen_ranks:
            raise DuplicateRank(f"rank {rank} also used on line {seen_ranks[rank]}", line=line)
        seen_ranks[rank] = line

        label = _text(record.get("label"))
        if not label:
            raise ParseError("empty label", line=line)

        url = _text(record.get("url"))
        if not url:
            raise MissingUrl(f"no URL for {label!r}", line=line)
        if not is_absolute_url(url):
            raise ParseError(f"{url!r} is not an absolute URL", line=line)

        entries.append(ExpertEntry(rank=rank, label=label, url=normalize_url(url)))

    entries.sort(key=lambda entry: entry.rank)

    retrieved_on = meta.get("retrieved_on")
    expert = ExpertList(
        name=meta.get("name") or path.stem,
        entries=_renumber(entries),
        source_url=meta.get("source_url") or str(path),
        retrieved_on=date.fromisoformat(retrieved_on) if retrieved_on else None,
    )
    logger.info(f"Loaded expert list {expert.name} with {len(expert)} entries")
    return expert


def save_expert_list(expert, path):
    """Write the canonical CSV form"""
    frame = pd.DataFrame(
        [(entry.rank, entry.label, entry.url) for entry in expert.entries],
        columns=COLUMNS,
    )
    frame.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")


def dedup(expert, key="url"):
    """Keep the best-ranked entry per key, renumbering ranks contiguously"""
    if key not in ("url", "label"):
        raise ValueError(f"dedup key must be url or label, got {key!r}")
    seen = set()
    kept = []
    for entry in expert.entries:
        value = getattr(entry, key)
        if value in seen:
            continue
        seen.add(value)
        kept.append(entry)
    if len(kept) != len(expert.entries):
        logger.info(f"{expert.name}: removed {len(expert.entries) - len(kept)} duplicate {key}s")
    return replace(expert, entries=_renumber(kept))


def truncate(expert, n):
    """First min(n, len) entries by rank"""
    if n < 1:
        raise ValueError("n must be at least 1")
    return replace(expert, entries=expert.entries[:n])


def window(expert, n, key="url", windowed=True):
    """The top-n list used for one comparison.

    Windowed: cut the raw list to n, then drop duplicates inside the window
    (a 50-entry chart with repeated artists gives 9/21/42 for n=10/25/50).
    Otherwise dedup the whole list first and cut to n.
    """
    if key is None:
        return truncate(expert, n)
    if windowed:
        return dedup(truncate(expert, n), key)
    return truncate(dedup(expert, key), n)
