import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import kendalltau

from conftest import UNIVERSITY_TABLE
from modules.errors import NOutOfRange, ParityViolation, TiesPresent, TooFewItems
from modules.ranking import Ranking
from modules.stats import (
    EXACT, MODERATE, NONE, NORMAL, STRONG, VERY_STRONG, WEAK, RankPairing, classify, concordance,
    correlate, inversion_counts, kendall_tau, p_exact, p_normal, p_value, pair_rankings,
    pair_with_expert, permutation_p, total_pairs,
)


def pairing_of(ranks_b):
    return RankPairing(n=len(ranks_b), pairs=tuple((a, b) for a, b in enumerate(ranks_b, start=1)))


def inversions(sequence):
    return sum(1 for i in range(len(sequence)) for j in range(i + 1, len(sequence)) if sequence[i] > sequence[j])


permutation_lists = st.integers(2, 30).flatmap(lambda n: st.permutations(list(range(1, n + 1))))


def test_identical_and_reversed():
    assert kendall_tau(pairing_of(range(1, 11))) == 1.0
    assert kendall_tau(pairing_of(range(10, 0, -1))) == -1.0


def test_eleven_discordant_pairs():
    ranks = [5, 4, 3, 2, 1, 7, 6, 8, 9, 10]
    assert inversions(ranks) == 11
    assert kendall_tau(pairing_of(ranks)) == pytest.approx(23 / 45)
    assert concordance(pairing_of(ranks)) == (34, 11)


@settings(max_examples=100, deadline=None)
@given(ranks=permutation_lists)
def test_antisymmetry_and_granularity(ranks):
    forward = pairing_of(ranks)
    backward = RankPairing(n=forward.n, pairs=tuple((b, a) for a, b in forward.pairs))
    assert kendall_tau(forward) == kendall_tau(backward)

    flipped = RankPairing(n=forward.n, pairs=tuple((a, forward.n + 1 - b) for a, b in forward.pairs))
    assert kendall_tau(flipped) == pytest.approx(-kendall_tau(forward))

    n = forward.n
    scaled = kendall_tau(forward) * total_pairs(n)
    assert scaled == pytest.approx(round(scaled), abs=1e-9)
    assert (round(scaled) - total_pairs(n)) % 2 == 0
    assert -1.0 <= kendall_tau(forward) <= 1.0


@pytest.mark.parametrize("n", [9, 10, 21, 25, 42, 50])
def test_granularity_on_random_pairs(n):
    rng = np.random.default_rng(n)
    for _ in range(2000):
        T = round(kendall_tau(pairing_of(rng.permutation(n) + 1)) * total_pairs(n))
        assert (total_pairs(n) - T) % 2 == 0


def test_tau_needs_two_items_and_no_ties():
    with pytest.raises(TooFewItems):
        kendall_tau(pairing_of([1]))
    with pytest.raises(TiesPresent):
        kendall_tau(RankPairing(n=3, pairs=((1, 1), (2, 1), (3, 2))))


@pytest.mark.parametrize("n", range(0, 13))
def test_inversion_distribution_sums_to_factorial(n):
    counts = inversion_counts(n)
    assert sum(counts) == math.factorial(n)
    assert len(counts) == total_pairs(n) + 1
    assert counts == counts[::-1]


def test_inversion_distribution_small_rows():
    assert inversion_counts(3) == (1, 2, 2, 1)
    assert inversion_counts(4) == (1, 3, 5, 6, 5, 3, 1)


@pytest.mark.parametrize("ranks", [
    [2, 1, 3, 5, 4],
    [5, 4, 3, 2, 1, 7, 6, 8, 9, 10],
    [3, 1, 2, 6, 4, 5, 9, 7, 8],
    [1, 3, 2, 4, 6, 5, 7, 9, 8, 10, 12, 11],
])
def test_exact_p_matches_scipy(ranks):
    pairing = pairing_of(ranks)
    T = round(kendall_tau(pairing) * total_pairs(pairing.n))
    expected = kendalltau(range(1, len(ranks) + 1), ranks, method="exact").pvalue
    assert p_exact(T, pairing.n) == pytest.approx(expected, abs=1e-12)


def test_exact_p_values():
    # n(n-1)/2 = 45 is odd, so |T| >= 1 always holds
    assert p_exact(-1, 10) == 1.0
    assert p_exact(3, 3) == pytest.approx(1 / 3)
    assert p_exact(23, 10) == pytest.approx(0.0466, abs=5e-5)
    assert p_exact(140, 25) == pytest.approx(0.0011, abs=5e-4)


def test_exact_p_preconditions():
    with pytest.raises(ParityViolation):
        p_exact(0, 10)
    with pytest.raises(NOutOfRange):
        p_exact(3, 2)
    with pytest.raises(NOutOfRange):
        p_exact(1, 31)


@pytest.mark.parametrize("n, T, printed", [
    (10, 23, 0.0490),
    (10, 25, 0.0318),
    (10, 29, 0.0122),
    (9, 10, 0.3480),
    (25, 2, 0.9813),
    (25, 140, 0.0011),
    (50, 421, 0.0004),
])
def test_normal_approximation_reproduces_printed_p(n, T, printed):
    assert p_normal(T / total_pairs(n), n) == pytest.approx(printed, abs=5e-4)


def test_normal_approximation_edges():
    assert p_normal(0.0, 20) == 1.0
    assert p_normal(-1 / 45, 10) == 1.0
    with pytest.raises(NOutOfRange):
        p_normal(0.5, 7)


@pytest.mark.parametrize("n", range(8, 31))
def test_methods_agree(n):
    bound = 0.013 if n <= 10 else 0.01
    pairs = total_pairs(n)
    for T in range(-pairs, pairs + 1, 2):
        assert abs(p_exact(T, n) - p_normal(T / pairs, n)) <= bound


def test_large_n_against_exact_distribution():
    assert abs(permutation_p(421, 50) - p_normal(421 / 1225, 50)) <= 0.002
    assert permutation_p(1, 50) == 1.0
    assert p_normal(1 / 1225, 50) == 1.0


def test_exact_test_size_at_n_10():
    counts = inversion_counts(10)
    rejected = sum(count for discordant, count in enumerate(counts) if p_exact(45 - 2 * discordant, 10) < 0.05)
    size = rejected / math.factorial(10)
    assert 0.035 <= size <= 0.065
    assert size == pytest.approx(0.0466, abs=5e-4)


def test_null_calibration_by_simulation():
    rng = np.random.default_rng(2008)
    trials = 20000
    rejected = 0
    for _ in range(trials):
        T = round(kendall_tau(pairing_of(rng.permutation(10) + 1)) * 45)
        rejected += p_exact(T, 10) < 0.05
    assert 0.035 <= rejected / trials <= 0.065


def test_p_value_method_choice():
    assert p_value(23, 10) == (p_exact(23, 10), EXACT)
    assert p_value(23, 10, "normal")[1] == NORMAL
    assert p_value(421, 50)[1] == NORMAL
    with pytest.raises(ValueError):
        p_value(23, 10, "bootstrap")


def test_requested_method_falls_back_outside_its_range():
    assert p_value(421, 50, "exact") == (p_normal(421 / 1225, 50), NORMAL)
    assert p_value(10, 5, "normal") == (p_exact(10, 5), EXACT)
    assert p_value(23, 10, "exact")[1] == EXACT

    result = correlate(pairing_of([2, 1, 3, 4, 5]), "normal")
    assert result.method == EXACT
    assert result.p_two_sided == pytest.approx(p_exact(8, 5))


@pytest.mark.parametrize("tau, p, expected", [
    (0.5111, 0.0490, MODERATE),
    (-0.5111, 0.0490, MODERATE),
    (0.6444, 0.0122, STRONG),
    (0.3436, 0.0004, WEAK),
    (0.3933, 0.0062, WEAK),
    (0.9556, 0.0001, VERY_STRONG),
    (0.7, 0.05, NONE),
    (0.40, 0.01, WEAK),
    (0.60, 0.01, MODERATE),
    (0.80, 0.01, STRONG),
])
def test_classify(tau, p, expected):
    assert classify(tau, p) == expected


def test_university_table_marking():
    marked = [(label, n) for label, n, tau, p in UNIVERSITY_TABLE
              if classify(tau, p) in (MODERATE, STRONG)]
    assert marked == [("Yahoo/ARWU", 10), ("Yahoo/ARWU", 25), ("Live/Google", 10), ("Yahoo/Google", 10)]


def test_pairing_drops_unranked_items():
    ranking = Ranking(items=("a", "c", "b", "e"), source="Live", unranked=frozenset({"d"}))
    pairing = pair_with_expert(["a", "b", "c", "d", "e"], ranking)
    assert pairing.n == 4
    assert pairing.dropped == 1
    assert pairing.ids == ("a", "b", "c", "e")
    assert pairing.pairs == ((1, 1), (2, 3), (3, 2), (5, 4))


def test_pair_two_engines():
    a = Ranking(items=("x", "y", "z", "w"), source="Live")
    b = Ranking(items=("w", "z", "y"), source="Yahoo", unranked=frozenset({"x"}))
    pairing = pair_rankings(a, b)
    assert pairing.n == 3
    assert pairing.dropped == 1
    assert kendall_tau(pairing) == -1.0


def test_correlate():
    result = correlate(pairing_of([5, 4, 3, 2, 1, 7, 6, 8, 9, 10]))
    assert result.n == 10
    assert result.method == EXACT
    assert result.tau == pytest.approx(0.5111, abs=1e-4)
    assert result.classification == MODERATE
    assert result.marked

    with pytest.raises(TooFewItems):
        correlate(pairing_of([2, 1]))


def test_correlate_large_list_uses_normal_approximation():
    result = correlate(pairing_of(list(range(42, 0, -1))))
    assert result.method == NORMAL
    assert result.tau == -1.0
    assert result.classification == VERY_STRONG
