"""Kendall's tau on strict rankings, its two-sided tests and the strength classes."""

import math
import logging
from dataclasses import dataclass
from functools import lru_cache
from itertools import accumulate

import numpy as np
from scipy.stats import norm

from modules.errors import NOutOfRange, ParityViolation, StatsError, TiesPresent, TooFewItems

logger = logging.getLogger('url_ranker')

ALPHA = 0.05
EXACT_MAX_N = 30
NORMAL_MIN_N = 8

NONE = "none"
WEAK = "significant-weak"
MODERATE = "significant-moderate"
STRONG = "significant-strong"
VERY_STRONG = "significant-very-strong"
MARKED = frozenset({MODERATE, STRONG})

EXACT = "exact"
NORMAL = "normal-approx"


@dataclass(frozen=True)
class RankPairing:
    """(rank_a, rank_b) for the items both sides ranked"""

    n: int
    pairs: tuple
    ids: tuple = ()
    dropped: int = 0


def _pairing(ids, rank_a, rank_b, dropped):
    common = [item_id for item_id in ids if item_id in rank_b]
    pairs = tuple((rank_a[item_id], rank_b[item_id]) for item_id in common)
    return RankPairing(n=len(common), pairs=pairs, ids=tuple(common), dropped=dropped + len(ids) - len(common))


def pair_rankings(a, b):
    """Pair two Rankings on the items both of them ranked"""
    rank_a = {item_id: position for position, item_id in enumerate(a.items, start=1)}
    rank_b = {item_id: position for position, item_id in enumerate(b.items, start=1)}
    return _pairing(list(a.items), rank_a, rank_b, dropped=len(set(b.items) - set(a.items)))


def pair_with_expert(expert_ids, ranking):
    """Pair an expert order (rank 1 first) with an engine Ranking over the expert's items"""
    expert_ids = list(expert_ids)
    rank_a = {item_id: position for position, item_id in enumerate(expert_ids, start=1)}
    rank_b = {item_id: position for position, item_id in enumerate(ranking.items, start=1)}
    return _pairing(expert_ids, rank_a, rank_b, dropped=0)


def concordance(pairing):
    """Concordant and discordant pair counts"""
    if pairing.n < 2:
        raise TooFewItems(f"need at least 2 paired items, got {pairing.n}")
    ranks = np.asarray(pairing.pairs, dtype=np.int64).reshape(pairing.n, 2)
    a, b = ranks[:, 0], ranks[:, 1]
    if len(np.unique(a)) != pairing.n or len(np.unique(b)) != pairing.n:
        raise TiesPresent("rankings must be strict (no tied ranks)")

    upper = np.triu_indices(pairing.n, k=1)
    signs = np.sign(np.subtract.outer(a, a)[upper]) * np.sign(np.subtract.outer(b, b)[upper])
    return int(np.count_nonzero(signs > 0)), int(np.count_nonzero(signs < 0))


def total_pairs(n):
    return n * (n - 1) // 2


def statistic(pairing):
    """T = C - D"""
    concordant, discordant = concordance(pairing)
    return concordant - discordant


def kendall_tau(pairing):
    return statistic(pairing) / total_pairs(pairing.n)


@lru_cache(maxsize=None)
def inversion_counts(n):
    """Number of permutations of n items with k inversions, k = 0..n(n-1)/2"""
    if n < 0:
        raise ValueError("n must be non-negative")
    counts = [1]
    for size in range(2, n + 1):
        # row[k] = sum of counts[k - j] for j in 0..size-1
        prefix = [0] + list(accumulate(counts))
        width = len(counts) + size - 1
        counts = [prefix[min(k, len(counts) - 1) + 1] - prefix[max(0, k - size + 1)] for k in range(width)]
    return tuple(counts)


def _check_statistic(T, n):
    pairs = total_pairs(n)
    if abs(T) > pairs:
        raise StatsError(f"|T|={abs(T)} exceeds n(n-1)/2={pairs}")
    if (pairs - T) % 2:
        raise ParityViolation(f"T={T} cannot occur for n={n}: T must have the parity of {pairs}")
    return pairs


def permutation_p(T, n):
    """Exact two-sided p from the inversion distribution, for any n"""
    pairs = _check_statistic(T, n)
    discordant = (pairs - T) // 2
    counts = inversion_counts(n)
    tail = sum(counts[:min(discordant, pairs - discordant) + 1])
    total = math.factorial(n)
    if 2 * tail >= total:
        return 1.0
    return 2 * tail / total


def p_exact(T, n):
    """Exact two-sided p-value of T = C - D for 3 <= n <= 30"""
    if not 3 <= n <= EXACT_MAX_N:
        raise NOutOfRange(f"exact test covers 3 <= n <= {EXACT_MAX_N}, got n={n}")
    return permutation_p(T, n)


def p_normal(tau, n):
    """Two-sided normal approximation with continuity correction on T"""
    if n < NORMAL_MIN_N:
        raise NOutOfRange(f"normal approximation needs n >= {NORMAL_MIN_N}, got n={n}")
    T = round(tau * total_pairs(n))
    sd = math.sqrt(n * (n - 1) * (2 * n + 5) / 18)
    z = max(abs(T) - 1, 0) / sd
    return min(1.0, 2 * float(norm.sf(z)))


def choose_method(n, method="auto"):
    """Method actually used for n; a requested method outside its range falls back to the other"""
    if method == "auto":
        return EXACT if n <= EXACT_MAX_N else NORMAL
    if method == "exact":
        if n > EXACT_MAX_N:
            logger.info(f"n={n} is above the exact range, using the normal approximation")
            return NORMAL
        return EXACT
    if method == "normal":
        if n < NORMAL_MIN_N:
            logger.info(f"n={n} is below the normal range, using the exact test")
            return EXACT
        return NORMAL
    raise ValueError(f"unknown p-value method {method!r}")


def p_value(T, n, method="auto"):
    """(p, method label) for T = C - D"""
    chosen = choose_method(n, method)
    if chosen == EXACT:
        return p_exact(T, n), EXACT
    return p_normal(T / total_pairs(n), n), NORMAL


def classify(tau, p):
    if p >= ALPHA:
        return NONE
    magnitude = abs(tau)
    if magnitude <= 0.40:
        return WEAK
    if magnitude <= 0.60:
        return MODERATE
    if magnitude <= 0.80:
        return STRONG
    return VERY_STRONG


@dataclass(frozen=True)
class CorrelationResult:
    n: int
    tau: float
    p_two_sided: float
    method: str
    classification: str
    dropped: int = 0

    @property
    def marked(self):
        return self.classification in MARKED


def correlate(pairing, method="auto"):
    """tau, p and class for one pairing"""
    if pairing.n < 3:
        raise TooFewItems(f"a test needs at least 3 paired items, got {pairing.n}")
    T = statistic(pairing)
    tau = T / total_pairs(pairing.n)
    p, used = p_value(T, pairing.n, method)
    if pairing.dropped:
        logger.info(f"Correlation on n={pairing.n} after dropping {pairing.dropped} unpaired items")
    return CorrelationResult(
        n=pairing.n,
        tau=tau,
        p_two_sided=p,
        method=used,
        classification=classify(tau, p),
        dropped=pairing.dropped,
    )
