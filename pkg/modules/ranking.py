"""Ordinal ranking of a URL set from a batched ranking oracle.

The oracle only ever sees up to q URLs at a time and answers with their
relative order. Batches overlap by one element (the overlap item, the
lowest-ranked URL of the previous answer) so that consecutive answers chain
into one order, and every URL that outranks the overlap item is inserted
into the sorted list by scanning it q-1 elements at a time.
"""

import json
import logging
from collections import deque
from dataclasses import dataclass, field
from datetime import datetime, timezone
from urllib.parse import urlsplit

import numpy as np

from modules.errors import InconsistentOracle, OracleError

logger = logging.getLogger('url_ranker')

DEFAULT_Q = 5


@dataclass(frozen=True)
class Item:
    """A real-world entity and the URL that stands for it"""

    id: str
    label: str
    url: str

    def __post_init__(self):
        parts = urlsplit(self.url or "")
        if not parts.scheme or not parts.netloc:
            raise ValueError(f"item {self.id!r}: {self.url!r} is not an absolute URL")


@dataclass(frozen=True)
class QueryRecord:
    """One issued batch and the oracle's answer"""

    seq: int
    engine: str
    ids: tuple
    urls_in_query_order: tuple
    answer_ids: tuple
    answer_order: tuple
    unindexed: tuple
    timestamp: str = None

    def to_dict(self):
        return {
            "seq": self.seq,
            "engine": self.engine,
            "ids": list(self.ids),
            "urls_in_query_order": list(self.urls_in_query_order),
            "answer_ids": list(self.answer_ids),
            "answer_order": list(self.answer_order),
            "unindexed": list(self.unindexed),
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            seq=data["seq"],
            engine=data["engine"],
            ids=tuple(data["ids"]),
            urls_in_query_order=tuple(data["urls_in_query_order"]),
            answer_ids=tuple(data["answer_ids"]),
            answer_order=tuple(data["answer_order"]),
            unindexed=tuple(data["unindexed"]),
            timestamp=data.get("timestamp"),
        )


@dataclass(frozen=True)
class Ranking:
    """Ordinal total order over item ids (rank 1 first) from one source"""

    items: tuple
    source: str
    unranked: frozenset = frozenset()
    query_log: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if len(set(self.items)) != len(self.items):
            raise ValueError(f"ranking from {self.source} repeats an item")
        if set(self.items) & set(self.unranked):
            raise ValueError(f"ranking from {self.source} both ranks and leaves unranked an item")

    def position(self, item_id):
        """1-based rank, or None for unranked items"""
        try:
            return self.items.index(item_id) + 1
        except ValueError:
            return None

    def emitted_order(self):
        """Ranked items, then unranked ones (sorted) for reports"""
        return list(self.items) + sorted(self.unranked)

    def to_dict(self):
        return {"source": self.source, "items": list(self.items), "unranked": sorted(self.unranked)}

    @classmethod
    def from_dict(cls, data):
        return cls(items=tuple(data["items"]), source=data["source"],
                   unranked=frozenset(data.get("unranked", ())))

    def to_json(self, **extra):
        """Ranking file body; extra keys describe the run it came from"""
        return json.dumps({**extra, **self.to_dict()}, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


@dataclass
class RankingState:
    """Working state of one ranking run"""

    unsorted: deque
    q: int
    source: str
    by_id: dict
    sorted: list = field(default_factory=list)
    overlap: str = None
    query_log: list = field(default_factory=list)
    unranked: set = field(default_factory=set)
    seen_ranked: set = field(default_factory=set)
    known_above: set = field(default_factory=set)

    def to_ranking(self):
        return Ranking(items=tuple(self.sorted), source=self.source,
                       unranked=frozenset(self.unranked), query_log=tuple(self.query_log))


def query_count(state):
    """Number of oracle batches issued so far"""
    return len(state.query_log)


def _ask(state, oracle, ids):
    """Send one batch, log it and fold the answer into what is known"""
    if len(ids) > state.q:
        raise ValueError(f"batch of {len(ids)} exceeds q={state.q}")

    items = [state.by_id[item_id] for item_id in ids]
    urls = [item.url for item in items]
    result = oracle.rank(items)
    result.check(urls)

    id_of = {item.url: item.id for item in items}
    answer = [id_of[url] for url in result.ordered_urls]
    missing = [id_of[url] for url in urls if url in result.unindexed]

    state.query_log.append(QueryRecord(
        seq=len(state.query_log) + 1,
        engine=getattr(oracle, "name", "oracle"),
        ids=tuple(ids),
        urls_in_query_order=tuple(urls),
        answer_ids=tuple(answer),
        answer_order=tuple(result.ordered_urls),
        unindexed=tuple(url for url in urls if url in result.unindexed),
        timestamp=result.timestamp or datetime.now(timezone.utc).isoformat(timespec="seconds"),
    ))
    logger.debug(f"{state.source} #{len(state.query_log)}: {ids} -> {answer}")

    for item_id in missing:
        if item_id in state.seen_ranked:
            raise InconsistentOracle(f"{item_id} was ranked before and is now reported unindexed")
        if item_id not in state.unranked:
            logger.warning(f"{state.source}: {state.by_id[item_id].url} not indexed")
        state.unranked.add(item_id)

    for i, upper in enumerate(answer):
        for lower in answer[i + 1:]:
            if (lower, upper) in state.known_above:
                raise InconsistentOracle(
                    f"answer #{len(state.query_log)} puts {upper} above {lower}, an earlier answer said otherwise"
                )
            state.known_above.add((upper, lower))
    state.seen_ranked.update(answer)
    return answer


def _find_position(item_id, start, state, oracle):
    """Scan SL from start in chunks of q-1; return the insertion index"""
    position = start
    while position < len(state.sorted):
        chunk = state.sorted[position:position + state.q - 1]
        answer = _ask(state, oracle, [item_id] + chunk)

        if [x for x in answer if x != item_id] != chunk:
            raise InconsistentOracle(f"answer {answer} reorders the already sorted items {chunk}")

        above = answer.index(item_id)
        if above < len(chunk):
            return position + above
        position += len(chunk)
    return len(state.sorted)


def merge_into_sorted(pending, state, oracle):
    """Insert the items that outranked the overlap item into SL.

    Each pending item is known to rank below the one before it, so its scan
    starts right after the previous insertion. The old overlap item ranks
    below all of SL, so it and everything after it are appended directly.
    """
    start = 0
    tail = False
    for item_id in pending:
        if item_id == state.overlap:
            tail = True
        if tail or start >= len(state.sorted):
            state.sorted.append(item_id)
            start = len(state.sorted)
            continue
        position = _find_position(item_id, start, state, oracle)
        state.sorted.insert(position, item_id)
        start = position + 1
    return state


def _check_inputs(items, q):
    if not items:
        raise ValueError("nothing to rank")
    if q < 2:
        raise ValueError(f"q must be at least 2, got {q}")
    ids = [item.id for item in items]
    if len(set(ids)) != len(ids):
        raise ValueError("item ids must be unique")
    urls = [item.url for item in items]
    if len(set(urls)) != len(urls):
        raise ValueError("item URLs must be unique")


def run_ranking(items, oracle, q=DEFAULT_Q):
    """Rank the items and return the final RankingState (SL plus query log)"""
    items = list(items)
    _check_inputs(items, q)

    state = RankingState(
        unsorted=deque(item.id for item in items),
        q=q,
        source=getattr(oracle, "name", "oracle"),
        by_id={item.id: item for item in items},
    )

    try:
        while state.unsorted:
            if state.overlap is None:
                batch = [state.unsorted.popleft() for _ in range(min(q, len(state.unsorted)))]
            else:
                fresh = [state.unsorted.popleft() for _ in range(min(q - 1, len(state.unsorted)))]
                batch = [state.overlap] + fresh

            answer = _ask(state, oracle, batch)
            if not answer:
                # nothing indexed yet, no overlap item to chain from
                continue

            merge_into_sorted(answer[:-1], state, oracle)
            state.overlap = answer[-1]

        if state.overlap is not None:
            state.sorted.append(state.overlap)
            state.overlap = None
    except OracleError as e:
        e.partial_state = state
        logger.error(
            f"{state.source}: ranking aborted after {query_count(state)} queries "
            f"({len(state.sorted)} sorted, {len(state.unsorted)} unseen): {e}"
        )
        raise

    logger.info(
        f"{state.source}: ranked {len(state.sorted)} of {len(items)} items "
        f"with {query_count(state)} queries (q={q}, {len(state.unranked)} unindexed)"
    )
    return state


def ordinal_rank(items, oracle, q=DEFAULT_Q):
    """Total ordinal ranking of the items as the oracle orders them"""
    return run_ranking(items, oracle, q).to_ranking()


@dataclass(frozen=True)
class CommutativityReport:
    batches_tested: int
    mismatches: tuple

    @property
    def ok(self):
        return not self.mismatches


def verify_commutativity(items, oracle, trials, seed, batch_size=DEFAULT_Q):
    """Ask random batches twice in different URL orders and list the batches whose answers differ"""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    items = list(items)
    size = min(batch_size, len(items))
    rng = np.random.default_rng(seed)

    mismatches = []
    for _ in range(trials):
        chosen = rng.choice(len(items), size=size, replace=False)
        first = rng.permutation(chosen)
        second = rng.permutation(chosen)
        if size > 1 and np.array_equal(first, second):
            second = np.roll(second, 1)

        a = oracle.rank([items[i] for i in first])
        b = oracle.rank([items[i] for i in second])
        if a.ordered_urls != b.ordered_urls or a.unindexed != b.unindexed:
            mismatches.append(tuple(sorted(items[i].id for i in chosen)))

    if mismatches:
        logger.warning(f"{getattr(oracle, 'name', 'oracle')}: {len(mismatches)} of {trials} batches depend on query order")
    return CommutativityReport(batches_tested=trials, mismatches=tuple(mismatches))


def write_query_log(path, records):
    """JSON lines, one batch per line"""
    with open(path, 'w', encoding='utf-8') as f:
        for record in records:
            f.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")


def read_query_log(path):
    with open(path, 'r', encoding='utf-8') as f:
        return [QueryRecord.from_dict(json.loads(line)) for line in f if line.strip()]
