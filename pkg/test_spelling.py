"""
Tests for the positional-cost edit distance and spelling candidate selection
"""
import itertools

import numpy as np
import pytest
import textdistance

from search_assist.config import EngineConfig
from search_assist.data.stores import SearchAssistStores
from search_assist.exceptions import SigilMismatch
from search_assist.utils.spelling import (
    EPSILON,
    EditCosts,
    SpellingIndex,
    background_pairwise_job,
    spelling_candidate,
    weighted_edit_distance,
)

from conftest import T0

UNIFORM = EditCosts(internal_sub=1.0, boundary_sub=1.0)
OSA = textdistance.DamerauLevenshtein(external=False, restricted=True)


def _strings(max_len: int):
    for n in range(max_len + 1):
        for chars in itertools.product("abc", repeat=n):
            yield "".join(chars)


def _check_against_osa(max_len: int):
    words = list(_strings(max_len))
    for a in words:
        for b in words:
            assert weighted_edit_distance(a, b, UNIFORM) == OSA.distance(a, b), (a, b)


def test_uniform_costs_equal_classic_distance_short_strings():
    _check_against_osa(4)


@pytest.mark.slow
def test_uniform_costs_equal_classic_distance_up_to_six():
    _check_against_osa(6)


class TestWeightedEditDistance:
    def test_identical_is_zero(self):
        assert weighted_edit_distance("justin bieber", "justin bieber") == 0.0

    def test_internal_transposition(self):
        assert weighted_edit_distance("justin beiber", "justin bieber") == 1.0

    def test_boundary_substitution_costs_more(self):
        assert weighted_edit_distance("cat", "bat") == 1.5
        assert weighted_edit_distance("cat", "cut") == 1.0

    def test_symmetric(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            a = "".join(rng.choice(list("abcd"), size=int(rng.integers(0, 7))))
            b = "".join(rng.choice(list("abcd"), size=int(rng.integers(0, 7))))
            assert weighted_edit_distance(a, b) == weighted_edit_distance(b, a)

    def test_sigils_are_stripped(self):
        assert weighted_edit_distance("#scotus", "#sctous") == weighted_edit_distance("scotus", "sctous")

    def test_sigil_classes_do_not_mix(self):
        with pytest.raises(SigilMismatch):
            weighted_edit_distance("#scotus", "scotus")

    def test_costs_validate_boundary(self):
        with pytest.raises(ValueError):
            EditCosts(internal_sub=2.0, boundary_sub=1.0)


class TestSpellingCandidate:
    def _stores(self, cfg, weights):
        stores = SearchAssistStores(cfg)
        for text, w in weights.items():
            stores.query_stats.update(text, w, "en", T0)
        return stores

    def test_misspelling_corrected_to_popular_form(self, cfg):
        stores = self._stores(cfg, {"justin beiber": 1.0, "justin bieber": 100.0})
        correction = spelling_candidate("justin beiber", T0, stores, cfg)
        assert correction.query == "justin bieber"
        assert correction.distance == 1.0
        assert correction.ratio == pytest.approx(100.0)

    def test_popular_form_has_no_correction(self, cfg):
        stores = self._stores(cfg, {"justin beiber": 1.0, "justin bieber": 100.0})
        assert spelling_candidate("justin bieber", T0, stores, cfg) is None

    def test_ratio_below_minimum(self, cfg):
        stores = self._stores(cfg, {"justin beiber": 20.0, "justin bieber": 100.0})
        assert spelling_candidate("justin beiber", T0, stores, cfg) is None

    def test_unknown_query_uses_epsilon_weight(self, cfg):
        stores = self._stores(cfg, {"justin bieber": 1.0})
        correction = spelling_candidate("justin beiber", T0, stores, cfg)
        assert correction.ratio == pytest.approx(1.0 / EPSILON)

    def test_heaviest_within_distance_wins(self, cfg):
        stores = self._stores(cfg, {"abcd": 1.0, "abce": 50.0, "abdc": 80.0, "zzzz": 500.0})
        assert spelling_candidate("abcd", T0, stores, cfg).query == "abdc"

    def test_hashtags_only_match_hashtags(self, cfg):
        stores = self._stores(cfg, {"#scotsu": 1.0, "scotus": 100.0})
        assert spelling_candidate("#scotsu", T0, stores, cfg) is None


def _oracle(queries, cfg):
    costs = EditCosts.from_config(cfg)
    table = {}
    for q, wq in queries:
        best = None
        for b, wb in queries:
            if b == q:
                continue
            ratio = wb / max(wq, EPSILON)
            if ratio < cfg.spell_ratio_min:
                continue
            try:
                distance = weighted_edit_distance(q, b, costs)
            except SigilMismatch:
                continue
            if distance > cfg.spell_distance_max:
                continue
            key = (-wb, distance, b)
            if best is None or key < best[0]:
                best = (key, ratio)
        if best is not None:
            (_, distance, b), ratio = best
            table[q] = (b, distance, ratio)
    return table


def test_pairwise_job_matches_quadratic_oracle():
    cfg = EngineConfig(spell_ratio_min=2.0)
    rng = np.random.default_rng(17)
    words = set()
    while len(words) < 100:
        words.add("".join(rng.choice(list("abc"), size=int(rng.integers(3, 7)))))
    queries = [(w, float(rng.uniform(0.1, 100.0))) for w in sorted(words)]

    table = background_pairwise_job(queries, cfg)
    expected = _oracle(queries, cfg)
    assert {q: (c.query, c.distance) for q, c in table.items()} == {q: v[:2] for q, v in expected.items()}
    for q, correction in table.items():
        assert correction.ratio == pytest.approx(expected[q][2])


def test_index_reuses_weights(cfg):
    index = SpellingIndex([("justin bieber", 100.0), ("justin beiber", 1.0)], cfg)
    assert len(index) == 2
    assert index.candidate("justin beiber").query == "justin bieber"


def test_large_distance_limit_only_scans_existing_buckets():
    cfg = EngineConfig(spell_distance_max=1e12)
    index = SpellingIndex([("justin bieber", 100.0), ("justin beiber", 1.0), ("jb", 5.0)], cfg)
    assert index.candidate("justin beiber").query == "justin bieber"
