"""Record/replay cache of engine answers, one JSON-lines file per engine."""

import json
import logging
import threading
from pathlib import Path

from modules.errors import CacheMiss, MalformedResponse

logger = logging.getLogger('url_ranker')


def cache_key(urls, engine):
    """Engine name plus the sorted URL set; independent of query order"""
    urls = set(urls)
    if not urls:
        raise ValueError("cache key needs at least one URL")
    return engine + "\t" + " ".join(sorted(urls))


class ReplayCache:
    """Answers recorded per engine, keyed by cache_key"""

    def __init__(self, directory):
        self.directory = Path(directory)
        self._records = {}
        self._loaded = set()
        self._lock = threading.Lock()

    @classmethod
    def open(cls, directory, create=True):
        directory = Path(directory)
        if create:
            directory.mkdir(parents=True, exist_ok=True)
        elif not directory.is_dir():
            raise CacheMiss(f"cache not found: {directory}")
        return cls(directory)

    def path_for(self, engine):
        safe = "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in engine)
        return self.directory / f"{safe}.jsonl"

    def _load_engine(self, engine):
        if engine in self._loaded:
            return
        path = self.path_for(engine)
        if path.exists():
            with open(path, 'r', encoding='utf-8') as f:
                for line_no, line in enumerate(f, start=1):
                    if not line.strip():
                        continue
                    try:
                        record = json.loads(line)
                        self._records[record["key"]] = record
                    except (ValueError, KeyError) as e:
                        raise MalformedResponse(f"{path}:{line_no}: bad cache record: {e}") from e
            logger.debug(f"Loaded cache for {engine} from {path}")
        self._loaded.add(engine)

    def lookup(self, key, engine):
        """Recorded record for the key, or None"""
        with self._lock:
            self._load_engine(engine)
            return self._records.get(key)

    def record(self, entry):
        """Append one batch record; the engine's file is written under a lock"""
        with self._lock:
            self._load_engine(entry["engine"])
            self._records[entry["key"]] = entry
            path = self.path_for(entry["engine"])
            with open(path, 'a', encoding='utf-8') as f:
                f.write(json.dumps(entry, sort_keys=True) + "\n")
                f.flush()

    def __len__(self):
        return len(self._records)
