"""Simulated ranking oracles: a hidden score order, noise and the noise sweep."""

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from modules.errors import UnknownItem
from modules.oracle import BatchResult, now_iso
from modules.ranking import Item, Ranking, ordinal_rank
from modules.stats import kendall_tau, pair_rankings

logger = logging.getLogger('url_ranker')

NOISE_KINDS = ("adjacent-swap", "dispersion", "reversal")
SWEEP_COLUMNS = ["n", "noise_kind", "strength", "replicates", "mean_tau", "sd_tau"]


@dataclass(frozen=True)
class HiddenScoreModel:
    """Item id -> quality score; higher is better, ties broken by id"""

    scores: dict

    @classmethod
    def from_order(cls, ids):
        """Scores that reproduce the given order, best first"""
        ids = list(ids)
        return cls(scores={item_id: float(len(ids) - position) for position, item_id in enumerate(ids)})

    def sort_key(self, item_id):
        return (-self.scores[item_id], item_id)

    def order(self):
        return sorted(self.scores, key=self.sort_key)


@dataclass(frozen=True)
class NoiseModel:
    kind: str = "adjacent-swap"
    strength: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"noise kind must be one of {', '.join(NOISE_KINDS)}, got {self.kind!r}")
        if self.strength < 0:
            raise ValueError(f"noise strength must be non-negative, got {self.strength}")

    def swap_count(self, rng):
        """How many random adjacent transpositions to apply"""
        if self.strength == 0:
            return 0
        if self.kind == "adjacent-swap":
            return int(round(self.strength))
        # geometric with mean == strength
        return int(rng.geometric(1.0 / (1.0 + self.strength))) - 1


def _adjacent_swaps(order, count, rng):
    order = list(order)
    if len(order) < 2:
        return order
    for position in rng.integers(0, len(order) - 1, size=count):
        order[position], order[position + 1] = order[position + 1], order[position]
    return order


def perturb(order, noise):
    """One fixed noisy copy of a full ranking"""
    if order.unranked:
        raise ValueError("cannot perturb a ranking with unranked items")
    if noise.strength == 0:
        return order

    if noise.kind == "reversal":
        items = list(reversed(order.items))
    else:
        rng = np.random.default_rng(noise.seed)
        items = _adjacent_swaps(order.items, noise.swap_count(rng), rng)
    return Ranking(items=tuple(items), source=order.source)


class ScoreOracle:
    """Answers every batch by sorting it on a hidden score"""

    def __init__(self, model, name="score", unindexed=(), per_query_noise=0, seed=0):
        self.name = name
        self.model = model
        self.unindexed = frozenset(unindexed)
        # Per-query noise breaks consistency; only used to exercise error paths
        self.per_query_noise = per_query_noise
        self._rng = np.random.default_rng(seed)

    def rank(self, items):
        indexed = []
        missing = []
        for item in items:
            if item.id in self.unindexed:
                missing.append(item)
            elif item.id in self.model.scores:
                indexed.append(item)
            else:
                raise UnknownItem(f"{self.name}: no score for {item.id!r}")

        indexed.sort(key=lambda item: self.model.sort_key(item.id))
        if self.per_query_noise:
            indexed = _adjacent_swaps(indexed, int(self.per_query_noise), self._rng)

        return BatchResult(
            ordered_urls=tuple(item.url for item in indexed),
            unindexed=frozenset(item.url for item in missing),
            timestamp=now_iso(),
        )


def make_score_oracle(model, name="score", unindexed=(), per_query_noise=0, seed=0):
    return ScoreOracle(model, name=name, unindexed=unindexed, per_query_noise=per_query_noise, seed=seed)


class SimulatedTransport:
    """Stands in for a search API: returns the queried URLs in a fixed hidden order"""

    def __init__(self, ranked_urls, missing=()):
        self.position = {url: index for index, url in enumerate(ranked_urls)}
        self.missing = frozenset(missing)
        self.calls = 0

    def fetch(self, query, urls):
        self.calls += 1
        hits = [url for url in urls if url in self.position and url not in self.missing]
        return sorted(hits, key=self.position.get)


def _synthetic_items(n):
    return [Item(id=f"i{index:03d}", label=f"item {index}", url=f"http://item{index:03d}.example/")
            for index in range(1, n + 1)]


def sweep(n_values, noise_strengths, seeds, noise_kind="adjacent-swap", seed=0, q=None):
    """Mean and sd of tau between the true order and a perturbed order, per (n, strength)"""
    if seeds < 1:
        raise ValueError("seeds must be at least 1")
    rows = []
    cell = 0
    for n in n_values:
        if n < 3:
            raise ValueError(f"sweep needs n >= 3, got {n}")
        items = _synthetic_items(n)
        truth = Ranking(items=tuple(item.id for item in items), source="expert")

        for strength in noise_strengths:
            # cell seed = base seed + cell index
            cell_rng = np.random.default_rng(seed + cell)
            replicate_seeds = cell_rng.integers(0, 2**32, size=seeds)
            cell += 1

            taus = np.empty(seeds)
            for replicate, replicate_seed in enumerate(replicate_seeds):
                noisy = perturb(truth, NoiseModel(noise_kind, strength, int(replicate_seed)))
                if q:
                    oracle = make_score_oracle(HiddenScoreModel.from_order(noisy.items), name="engine")
                    noisy = ordinal_rank(items, oracle, q)
                taus[replicate] = kendall_tau(pair_rankings(truth, noisy))

            rows.append({
                "n": n,
                "noise_kind": noise_kind,
                "strength": strength,
                "replicates": seeds,
                "mean_tau": float(taus.mean()),
                "sd_tau": float(taus.std(ddof=1)) if seeds > 1 else 0.0,
            })
            logger.debug(f"sweep n={n} {noise_kind} strength={strength}: mean tau {rows[-1]['mean_tau']:.4f}")

    logger.info(f"Sweep finished: {len(rows)} cells, {seeds} replicates each")
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)
