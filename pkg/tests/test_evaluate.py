import numpy as np
import pytest
from scipy.stats import friedmanchisquare

from simscore.evaluate import (
    auc,
    average_precision,
    expected_random_ap,
    expected_random_map,
    friedman_mean_ranks,
    mean_average_precision,
    metrics,
    precision_at_r,
)
from simscore.retrieval import DistanceTable, TrackStore, random_baseline
from simscore.synth import SyntheticSpec, generate_synthetic


def one_query(distances, relevant_ids, n=None):
    """Query 'q' against candidates c0..; relevant ones share its cover set."""
    cands = [f"c{j}" for j in range(len(distances))]
    covers = {c: ("A" if c in relevant_ids else f"x{c}") for c in cands}
    covers["q"] = "A"
    return DistanceTable(["q"], cands, [distances]), covers


def brute_ap(row, ids, query, covers):
    order = sorted((d, c) for d, c in zip(row, ids) if c != query and not np.isnan(d))
    hits, precisions = 0, []
    for pos, (_, c) in enumerate(order, start=1):
        if covers[c] == covers[query]:
            hits += 1
            precisions.append(hits / pos)
    return sum(precisions) / len(precisions)


@pytest.fixture(scope="module")
def store():
    return TrackStore(generate_synthetic(SyntheticSpec(length=40, seed=1)))


class TestAveragePrecision:
    def test_top_ranks(self):
        t, covers = one_query([0.1, 0.2, 0.5, 0.9], {"c0", "c1"})
        assert mean_average_precision(t, covers)[1] == 1.0

    def test_ranks_two_and_four(self):
        t, covers = one_query([0.3, 0.1, 0.7, 0.5], {"c0", "c2"})
        assert mean_average_precision(t, covers)[1] == pytest.approx(0.5)

    def test_direct(self):
        assert average_precision([2, 4, 1, 3], [True, True, False, False]) == pytest.approx(0.5)

    def test_tied_relevant_at_top(self):
        # two covers tied at the top share rank 1.5; precision stays 1
        assert average_precision([1.5, 1.5, 3], [True, True, False]) == 1.0

    def test_tie_with_non_relevant(self):
        # relevant tied with a non-relevant at ranks 2-3: one hit at rank 2.5;
        # the mean over both tie-break orders, (1/2 + 1/3) / 2, is nearby
        ap = average_precision([2.5, 2.5, 1], [True, False, False])
        assert ap == pytest.approx(1 / 2.5)
        assert abs(ap - (1 / 2 + 1 / 3) / 2) < 0.02

    def test_random_table_matches_brute_force(self, store):
        t = random_baseline(store, seed=4)
        covers = store.cover_sets
        per_query, mean = mean_average_precision(t, covers)
        for i, q in enumerate(t.query_ids):
            assert per_query[q] == pytest.approx(brute_ap(t.values[i], t.candidate_ids, q, covers), abs=1e-12)
        assert 0 <= mean <= 1

    def test_query_without_relevant_is_excluded(self, caplog):
        t = DistanceTable(["q", "r"], ["q", "r", "s"], [[np.nan, 1.0, 2.0], [1.0, np.nan, 2.0]])
        per_query, mean = mean_average_precision(t, {"q": "A", "r": "B", "s": "A"})
        assert list(per_query) == ["q"] and mean == 0.5
        assert "no relevant" in caplog.text

    def test_perfect_iff_covers_on_top(self, store):
        covers = store.cover_sets
        ids = store.ids
        perfect = np.array([[np.nan if a == b else (0.0 if covers[a] == covers[b] else 1.0) for b in ids] for a in ids])
        t = DistanceTable(list(ids), list(ids), perfect)
        assert mean_average_precision(t, covers)[1] == 1.0
        swapped = perfect.copy()
        swapped[0, 1], swapped[0, 5] = 1.0, 0.0  # a cover drops below a non-cover
        assert mean_average_precision(t.with_values(swapped), covers)[1] < 1.0


class TestPrecisionAtR:
    def test_two_in_top_five(self):
        t, covers = one_query([0.1, 0.5, 0.2, 0.6, 0.7, 0.8, 0.9], {"c1", "c2"})
        assert precision_at_r(t, covers, 5) == pytest.approx(0.4)

    def test_none_relevant_in_top(self):
        t, covers = one_query([0.9, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6], {"c0"})
        assert precision_at_r(t, covers, 5) == 0.0

    def test_saturation(self):
        t, covers = one_query([0.1, 0.2, 0.3], {"c0", "c2"})
        assert precision_at_r(t, covers, 20) == pytest.approx(2 / 20)

    def test_metrics_layout(self, store):
        m = metrics(random_baseline(store, 0), store.cover_sets)
        assert set(m) == {"map", "p_at", "per_query"}
        assert set(m["p_at"]) == {"5", "10", "20"}
        assert {"query_id", "ap"} == set(m["per_query"][0])


class TestFriedman:
    def test_toy_hand_computation(self):
        aps = {
            "A": {"q1": 0.9, "q2": 0.8, "q3": 0.4, "q4": 0.5},
            "B": {"q1": 0.5, "q2": 0.6, "q3": 0.3, "q4": 0.9},
            "C": {"q1": 0.1, "q2": 0.7, "q3": 0.2, "q4": 0.1},
        }
        # rank sums A=11, B=8, C=5; chi2 = 12/(4*3*4) * (121+64+25) - 3*4*4 = 4.5
        ranks, chi2 = friedman_mean_ranks(aps)
        assert ranks == pytest.approx({"A": 2.75, "B": 2.0, "C": 1.25})
        assert chi2 == pytest.approx(4.5)
        assert chi2 == pytest.approx(friedmanchisquare(*(list(v.values()) for v in aps.values())).statistic)

    def test_strictly_best(self):
        aps = {m: {f"q{i}": base + 0.01 * i for i in range(6)} for m, base in [("a", 0.1), ("b", 0.2), ("c", 0.9)]}
        assert friedman_mean_ranks(aps)[0]["c"] == 3.0

    def test_identical_tables(self):
        same = {f"q{i}": v for i, v in enumerate([0.3, 0.5, 0.9])}
        ranks, chi2 = friedman_mean_ranks({"a": same, "b": dict(same), "c": dict(same)})
        assert set(ranks.values()) == {2.0}
        assert chi2 == 0.0

    def test_needs_two_measures(self):
        with pytest.raises(ValueError):
            friedman_mean_ranks({"a": {"q": 1.0}})


class TestRandomExpectation:
    def test_small_exhaustive(self):
        # 3 candidates, 1 relevant: AP is 1, 1/2, 1/3 with equal probability
        assert expected_random_ap(3, 1) == pytest.approx((1 + 1 / 2 + 1 / 3) / 3)

    def test_all_relevant(self):
        assert expected_random_ap(7, 7) == pytest.approx(1.0)

    @pytest.mark.slow
    def test_monte_carlo(self, store):
        covers = store.cover_sets
        maps = [mean_average_precision(random_baseline(store, s), covers)[1] for s in range(1000)]
        expected = expected_random_map(random_baseline(store, 0), covers)
        assert abs(np.mean(maps) - expected) < 0.005


class TestAUC:
    def test_perfect_and_reversed(self):
        assert auc([0.1, 0.2], [0.5, 0.6]) == 1.0
        assert auc([0.5, 0.6], [0.1, 0.2]) == 0.0

    def test_ties_half(self):
        assert auc([0.3], [0.3]) == 0.5
