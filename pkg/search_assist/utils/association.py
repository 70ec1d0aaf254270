"""
Association Strength Metrics

Decay functions for observed counts and the cooccurrence strength metrics
computed from a 2x2 contingency table:
- Conditional relative frequency
- Pointwise mutual information (log base 2)
- Dunning's log-likelihood ratio (natural log)
- Pearson's chi-square statistic
"""
import math
from typing import TYPE_CHECKING, Tuple

from pydantic import BaseModel, ConfigDict, Field

from search_assist.config import DecayFunction, EngineConfig
from search_assist.exceptions import InsufficientSupport, Undefined, ZeroSupport

if TYPE_CHECKING:
    from search_assist.data.stores import SearchAssistStores


def decay_factor(delta_ms: float, cfg: EngineConfig) -> float:
    """
    Fraction of a weight that survives `delta_ms` of event time

    Exponential: 2^(-delta/halflife). Step: 1 before step_age, step_floor
    after. Linear: max(0, 1 - delta/linear_span). Always 1 at delta 0.
    """
    if delta_ms <= 0:
        return 1.0
    if cfg.decay_fn is DecayFunction.EXPONENTIAL:
        return 2.0 ** (-delta_ms / cfg.halflife_ms)
    if cfg.decay_fn is DecayFunction.STEP:
        return 1.0 if delta_ms < cfg.step_age_ms else cfg.step_floor
    return max(0.0, 1.0 - delta_ms / cfg.linear_span_ms)


class ContingencyTable(BaseModel):
    """
    Soft-count 2x2 table for the directional pair A -> B

    n11: B follows A      n12: B follows not-A
    n21: not-B follows A  n22: not-B follows not-A
    """
    model_config = ConfigDict(frozen=True)

    n11: float = Field(..., ge=0.0)
    n12: float = Field(..., ge=0.0)
    n21: float = Field(..., ge=0.0)
    n22: float = Field(..., ge=0.0)

    @property
    def n(self) -> float:
        return self.n11 + self.n12 + self.n21 + self.n22

    @property
    def row1(self) -> float:
        return self.n11 + self.n12

    @property
    def row2(self) -> float:
        return self.n21 + self.n22

    @property
    def col1(self) -> float:
        return self.n11 + self.n21

    @property
    def col2(self) -> float:
        return self.n12 + self.n22

    def scaled(self, c: float) -> "ContingencyTable":
        return ContingencyTable(n11=self.n11 * c, n12=self.n12 * c, n21=self.n21 * c, n22=self.n22 * c)

    def transposed(self) -> "ContingencyTable":
        return ContingencyTable(n11=self.n11, n12=self.n21, n21=self.n12, n22=self.n22)


def build_table(
    a: str,
    b: str,
    now: int,
    stores: "SearchAssistStores",
    cfg: EngineConfig
) -> ContingencyTable:
    """
    Assemble the contingency table for "B follows A" from store statistics

    Margins come from the decayed presence weights of A and B (contexts they
    were observed in) and the total presence mass; with decay off and unit
    weights these are plain session counts.

    Raises:
        InsufficientSupport: if the pair weight is zero or below min_pair_support
    """
    n11 = stores.cooccurrence.weight(a, b, now)
    if n11 <= 0.0 or n11 < cfg.min_pair_support:
        raise InsufficientSupport(f"{a!r} -> {b!r}: weight {n11:.4f} below support {cfg.min_pair_support}")

    stats = stores.query_stats
    col1 = max(stats.presence(a, now), n11)
    row1 = max(stats.presence(b, now), n11)
    n21 = col1 - n11
    n12 = row1 - n11
    total = max(stats.presence_mass(now), n11 + n12 + n21)
    n22 = max(0.0, total - n11 - n12 - n21)
    return ContingencyTable(n11=n11, n12=n12, n21=n21, n22=n22)


def conditional_relative_frequency(tbl: ContingencyTable) -> float:
    """P(B follows | A) = n11 / (n11 + n21)"""
    if tbl.col1 <= 0.0:
        raise ZeroSupport("conditional relative frequency needs n11 + n21 > 0")
    return tbl.n11 / tbl.col1


def pmi(tbl: ContingencyTable) -> float:
    """Pointwise mutual information, log base 2"""
    n = tbl.n
    if n <= 0.0 or tbl.row1 <= 0.0 or tbl.col1 <= 0.0:
        raise Undefined("pmi needs positive margins")
    if tbl.n11 == 0.0:
        return -math.inf
    return math.log2((tbl.n11 * n) / (tbl.row1 * tbl.col1))


def log_likelihood_ratio(tbl: ContingencyTable) -> float:
    """Dunning's G^2 = 2 * sum n_ij ln(n_ij N / (row_i col_j)), with 0 ln 0 = 0"""
    n = tbl.n
    if n <= 0.0:
        return 0.0
    cells = (
        (tbl.n11, tbl.row1, tbl.col1),
        (tbl.n12, tbl.row1, tbl.col2),
        (tbl.n21, tbl.row2, tbl.col1),
        (tbl.n22, tbl.row2, tbl.col2),
    )
    total = sum(nij * math.log(nij * n / (r * c)) for nij, r, c in cells if nij > 0.0)
    return max(0.0, 2.0 * total)


def chi_square(tbl: ContingencyTable) -> float:
    """Pearson's chi-square for a 2x2 table"""
    denominator = tbl.row1 * tbl.row2 * tbl.col1 * tbl.col2
    if denominator <= 0.0:
        raise Undefined("chi-square needs all margins positive")
    return tbl.n * (tbl.n11 * tbl.n22 - tbl.n12 * tbl.n21) ** 2 / denominator


def features(tbl: ContingencyTable) -> Tuple[float, float, float]:
    """(crf, pmi, llr) for one table; an undefined pmi is reported as 0"""
    crf = conditional_relative_frequency(tbl)
    try:
        pmi_value = pmi(tbl)
    except Undefined:
        pmi_value = 0.0
    return crf, pmi_value, log_likelihood_ratio(tbl)
