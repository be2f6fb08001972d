"""Per-engine daily query budget with an optional JSON ledger."""

import json
import logging
import threading
from datetime import datetime, timezone
from pathlib import Path

from modules.errors import QuotaExhausted

logger = logging.getLogger('url_ranker')


def utc_today():
    return datetime.now(timezone.utc).date()


class QueryBudget:
    """Counts executed batches against an engine's daily quota (resets at UTC midnight)"""

    def __init__(self, engine, quota, ledger_path=None, today=utc_today):
        self.engine = engine
        self.quota = quota
        self.ledger_path = Path(ledger_path) if ledger_path else None
        self._today = today
        self._lock = threading.Lock()
        self.day = today()
        self.used_today = 0
        self._load()

    def _load(self):
        """Pick up today's count from the ledger, if one is kept"""
        if not self.ledger_path or not self.ledger_path.exists():
            return
        try:
            data = json.loads(self.ledger_path.read_text(encoding="utf-8"))
            entry = data.get(self.engine) or {}
            if entry.get("day") == self.day.isoformat():
                self.used_today = int(entry.get("used", 0))
        except (OSError, ValueError) as e:
            logger.warning(f"Failed to load budget ledger {self.ledger_path}: {e}")

    def _save(self):
        if not self.ledger_path:
            return
        try:
            data = {}
            if self.ledger_path.exists():
                data = json.loads(self.ledger_path.read_text(encoding="utf-8"))
            data[self.engine] = {"day": self.day.isoformat(), "used": self.used_today, "quota": self.quota}
            self.ledger_path.parent.mkdir(parents=True, exist_ok=True)
            self.ledger_path.write_text(json.dumps(data, indent=2, sort_keys=True), encoding="utf-8")
        except (OSError, ValueError) as e:
            logger.warning(f"Failed to save budget ledger {self.ledger_path}: {e}")

    def _roll_day(self):
        today = self._today()
        if today != self.day:
            logger.info(f"{self.engine}: new UTC day, budget reset ({self.used_today} used on {self.day})")
            self.day = today
            self.used_today = 0

    @property
    def remaining(self):
        with self._lock:
            self._roll_day()
            return self.quota - self.used_today

    def consume(self):
        """Take one query from the budget or raise QuotaExhausted"""
        with self._lock:
            self._roll_day()
            if self.used_today >= self.quota:
                raise QuotaExhausted(
                    f"{self.engine}: daily quota of {self.quota} queries exhausted for {self.day}"
                )
            self.used_today += 1
            self._save()
