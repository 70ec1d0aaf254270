"""
Tests for contingency tables and association metrics against an
independently coded scalar evaluation
"""
import math

import numpy as np
import pytest

from search_assist.config import EngineConfig
from search_assist.data.stores import SearchAssistStores
from search_assist.exceptions import InsufficientSupport, Undefined, ZeroSupport
from search_assist.utils.association import (
    ContingencyTable,
    build_table,
    chi_square,
    conditional_relative_frequency,
    features,
    log_likelihood_ratio,
    pmi,
)

from conftest import T0


def _reference(n11, n12, n21, n22):
    """Scalar evaluation written out cell by cell"""
    n = n11 + n12 + n21 + n22
    r1, r2 = n11 + n12, n21 + n22
    c1, c2 = n11 + n21, n12 + n22
    e11, e12, e21, e22 = r1 * c1 / n, r1 * c2 / n, r2 * c1 / n, r2 * c2 / n

    def term(o, e):
        return o * math.log(o / e) if o > 0 else 0.0

    g2 = 2.0 * (term(n11, e11) + term(n12, e12) + term(n21, e21) + term(n22, e22))
    x2 = (n11 - e11) ** 2 / e11 + (n12 - e12) ** 2 / e12 + (n21 - e21) ** 2 / e21 + (n22 - e22) ** 2 / e22
    return {
        "crf": n11 / c1,
        "pmi": math.log(n11 / e11, 2),
        "llr": g2,
        "chi2": x2,
    }


def _random_tables(count: int, seed: int):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        yield ContingencyTable(**{k: float(v) for k, v in zip(("n11", "n12", "n21", "n22"), rng.integers(1, 500, 4))})


TABLES = list(_random_tables(25, seed=3)) + [
    ContingencyTable(n11=10, n12=20, n21=30, n22=60),
    ContingencyTable(n11=50, n12=1, n21=1, n22=50),
]


@pytest.mark.parametrize("tbl", TABLES)
def test_metrics_match_reference(tbl):
    ref = _reference(tbl.n11, tbl.n12, tbl.n21, tbl.n22)
    assert conditional_relative_frequency(tbl) == pytest.approx(ref["crf"], abs=1e-9)
    assert pmi(tbl) == pytest.approx(ref["pmi"], abs=1e-9)
    assert log_likelihood_ratio(tbl) == pytest.approx(ref["llr"], abs=1e-9, rel=1e-12)
    assert chi_square(tbl) == pytest.approx(ref["chi2"], abs=1e-9, rel=1e-12)


def test_independent_table_scores_zero():
    tbl = ContingencyTable(n11=10, n12=20, n21=30, n22=60)
    assert pmi(tbl) == pytest.approx(0.0, abs=1e-9)
    assert log_likelihood_ratio(tbl) == pytest.approx(0.0, abs=1e-9)
    assert chi_square(tbl) == pytest.approx(0.0, abs=1e-9)


def test_perfect_association():
    tbl = ContingencyTable(n11=10, n12=0, n21=0, n22=90)
    assert conditional_relative_frequency(tbl) == 1.0
    assert pmi(tbl) == pytest.approx(math.log2(10.0))
    assert log_likelihood_ratio(tbl) > 0.0


def test_zero_cooccurrence_pmi_is_negative_infinity():
    tbl = ContingencyTable(n11=0, n12=5, n21=5, n22=10)
    assert pmi(tbl) == -math.inf


def test_zero_margin_is_undefined():
    tbl = ContingencyTable(n11=0, n12=0, n21=5, n22=10)
    with pytest.raises(Undefined):
        pmi(tbl)
    with pytest.raises(Undefined):
        chi_square(tbl)


def test_empty_conditioning_margin():
    with pytest.raises(ZeroSupport):
        conditional_relative_frequency(ContingencyTable(n11=0, n12=3, n21=0, n22=10))


def test_scale_invariance():
    tbl = ContingencyTable(n11=12, n12=7, n21=30, n22=200)
    scaled = tbl.scaled(3.5)
    assert conditional_relative_frequency(scaled) == pytest.approx(conditional_relative_frequency(tbl))
    assert pmi(scaled) == pytest.approx(pmi(tbl))
    assert log_likelihood_ratio(scaled) == pytest.approx(3.5 * log_likelihood_ratio(tbl))


def test_symmetric_metrics_are_symmetric():
    tbl = ContingencyTable(n11=12, n12=7, n21=30, n22=200)
    assert pmi(tbl.transposed()) == pytest.approx(pmi(tbl))
    assert log_likelihood_ratio(tbl.transposed()) == pytest.approx(log_likelihood_ratio(tbl))
    assert chi_square(tbl.transposed()) == pytest.approx(chi_square(tbl))


def test_features_report_undefined_pmi_as_zero():
    tbl = ContingencyTable(n11=4, n12=0, n21=0, n22=0)
    crf, pmi_value, llr_value = features(tbl)
    assert crf == 1.0
    assert pmi_value == pytest.approx(0.0)
    assert llr_value == pytest.approx(0.0)


class TestBuildTable:
    def _stores(self, cfg):
        stores = SearchAssistStores(cfg)
        stats = stores.query_stats
        # a in 10 sessions, b in 4, 20 sessions in total
        stats.update("a", 10.0, "en", T0, new_context=True)
        stats.update("b", 4.0, "en", T0, new_context=True)
        stats.update("c", 6.0, "en", T0, new_context=True)
        stores.cooccurrence.update("a", "b", 3.0, T0)
        return stores

    def test_cells_from_presence_margins(self, counting_cfg):
        tbl = build_table("a", "b", T0, self._stores(counting_cfg), counting_cfg)
        assert (tbl.n11, tbl.n21, tbl.n12, tbl.n22) == (3.0, 7.0, 1.0, 9.0)
        assert tbl.n == 20.0

    def test_missing_pair_has_insufficient_support(self, counting_cfg):
        with pytest.raises(InsufficientSupport):
            build_table("b", "a", T0, self._stores(counting_cfg), counting_cfg)

    def test_below_min_support(self, counting_cfg):
        cfg = counting_cfg.model_copy(update={"min_pair_support": 5.0})
        with pytest.raises(InsufficientSupport):
            build_table("a", "b", T0, self._stores(cfg), cfg)
