"""Statistics for the evaluation harness.

Implements the tests the quantitative evaluation relies on: Pearson
chi-square on contingency tables, Mann-Whitney U with mid-rank ties, paired
t, Cohen's d against a fixed benchmark, descriptive stats, a Kruskal-Wallis H
sharing the rank machinery, and Bloom-level distribution tables. Statistics
are computed here; tail probabilities come from scipy's reference
distributions.
"""
from __future__ import annotations

import itertools
import math
import statistics
from dataclasses import dataclass, field
from enum import Enum

from scipy.stats import chi2 as chi2_dist
from scipy.stats import norm as norm_dist
from scipy.stats import t as t_dist

EXACT_MWU_LIMIT = 400  # enumerate the permutation distribution up to n*m pairs


class StatsError(ValueError):
    """Invalid input for a statistical routine."""


@dataclass(frozen=True)
class StatResult:
    statistic: float
    p: float | None
    method: str
    df: int | None = None
    n: int | None = None
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class ContingencyTable:
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]
    counts: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if len(self.row_labels) < 2 or len(self.col_labels) < 2:
            raise StatsError("contingency table must be at least 2x2")
        if len(self.counts) != len(self.row_labels):
            raise StatsError("row count mismatch")
        for row in self.counts:
            if len(row) != len(self.col_labels):
                raise StatsError("column count mismatch")
            if any(c < 0 for c in row):
                raise StatsError("counts must be non-negative")

    @classmethod
    def from_rows(cls, rows, row_labels=None, col_labels=None) -> "ContingencyTable":
        rows = tuple(tuple(int(c) for c in row) for row in rows)
        r = len(rows)
        c = len(rows[0]) if rows else 0
        return cls(
            row_labels=tuple(row_labels) if row_labels else tuple(f"r{i}" for i in range(r)),
            col_labels=tuple(col_labels) if col_labels else tuple(f"c{j}" for j in range(c)),
            counts=rows,
        )

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)


def chi_square(table: ContingencyTable) -> StatResult:
    """Pearson chi-square test of independence, no continuity correction."""
    row_totals = [sum(row) for row in table.counts]
    col_totals = [sum(col) for col in zip(*table.counts)]
    n = table.total
    if any(t == 0 for t in row_totals) or any(t == 0 for t in col_totals):
        raise StatsError("chi-square requires every marginal total > 0")
    stat = 0.0
    for i, row in enumerate(table.counts):
        for j, observed in enumerate(row):
            expected = row_totals[i] * col_totals[j] / n
            stat += (observed - expected) ** 2 / expected
    df = (len(row_totals) - 1) * (len(col_totals) - 1)
    p = float(chi2_dist.sf(stat, df))
    return StatResult(statistic=stat, p=p, df=df, n=n, method="pearson-chi-square")


def _midranks(values) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mean_rank = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = mean_rank
        i = j + 1
    return ranks


def _u_of_second_sample(a, b) -> float:
    ranks = _midranks(list(a) + list(b))
    rank_sum_b = sum(ranks[len(a):])
    return rank_sum_b - len(b) * (len(b) + 1) / 2.0


def mann_whitney_u(a, b) -> StatResult:
    """Mann-Whitney U of sample b relative to sample a, two-sided.

    U counts the (x in a, y in b) pairs with y > x, ties counting half. The
    p-value is exact (full permutation enumeration) when len(a)*len(b) <= 400,
    otherwise a tie-corrected normal approximation.
    """
    a = list(a)
    b = list(b)
    if not a or not b:
        raise StatsError("mann-whitney requires two non-empty samples")
    n1, n2 = len(a), len(b)
    u = _u_of_second_sample(a, b)
    mean_u = n1 * n2 / 2.0

    if n1 * n2 <= EXACT_MWU_LIMIT:
        pooled = a + b
        ranks = _midranks(pooled)
        min_rank_sum = n2 * (n2 + 1) / 2.0
        observed_dev = abs(u - mean_u)
        hits = 0
        total = 0
        for combo in itertools.combinations(range(n1 + n2), n2):
            u_perm = sum(ranks[i] for i in combo) - min_rank_sum
            if abs(u_perm - mean_u) >= observed_dev - 1e-12:
                hits += 1
            total += 1
        p = hits / total
        method = "mann-whitney-u/exact"
    else:
        n = n1 + n2
        counts = {}
        for v in a + b:
            counts[v] = counts.get(v, 0) + 1
        tie_term = sum(t**3 - t for t in counts.values())
        var_u = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
        if var_u <= 0:
            p = 1.0
        else:
            z = (u - mean_u) / math.sqrt(var_u)
            p = float(2.0 * norm_dist.sf(abs(z)))
        method = "mann-whitney-u/normal-ties"
    return StatResult(statistic=u, p=min(1.0, p), n=n1 + n2, method=method)


def describe(sample) -> tuple[float, float]:
    """(mean, standard deviation) with the n-1 denominator."""
    data = list(sample)
    if len(data) < 2:
        raise StatsError("describe requires at least 2 observations")
    return statistics.fmean(data), statistics.stdev(data)


def paired_t(pre, post) -> StatResult:
    """Paired t-test on post - pre differences, df = n - 1, two-sided."""
    pre = list(pre)
    post = list(post)
    if len(pre) != len(post):
        raise StatsError("paired samples must have equal length")
    if len(pre) < 2:
        raise StatsError("paired t requires at least 2 pairs")
    diffs = [q - p for p, q in zip(pre, post)]
    n = len(diffs)
    mean_d = statistics.fmean(diffs)
    sd_d = statistics.stdev(diffs)
    df = n - 1
    if sd_d == 0.0:
        # degenerate: all differences identical
        if mean_d == 0.0:
            return StatResult(0.0, 1.0, df=df, n=n, method="paired-t", flags=("zero-sd",))
        stat = math.copysign(math.inf, mean_d)
        return StatResult(stat, 0.0, df=df, n=n, method="paired-t", flags=("zero-sd",))
    stat = mean_d / (sd_d / math.sqrt(n))
    p = float(2.0 * t_dist.sf(abs(stat), df))
    return StatResult(stat, p, df=df, n=n, method="paired-t")


def cohens_d(sample, benchmark: float) -> StatResult:
    """One-sample Cohen's d against a fixed benchmark: (mean - benchmark) / sd."""
    mean, sd = describe(sample)
    if sd == 0.0:
        raise StatsError("cohen's d undefined for zero standard deviation")
    return StatResult((mean - benchmark) / sd, p=None, n=len(list(sample)), method="cohens-d")


def cohens_d_from_stats(mean: float, sd: float, benchmark: float) -> float:
    if sd == 0.0:
        raise StatsError("cohen's d undefined for zero standard deviation")
    return (mean - benchmark) / sd


def kruskal_wallis(*samples) -> StatResult:
    """Kruskal-Wallis H across k groups, tie-corrected, p from chi-square."""
    groups = [list(s) for s in samples]
    if len(groups) < 2 or any(not g for g in groups):
        raise StatsError("kruskal-wallis requires >= 2 non-empty samples")
    pooled = [v for g in groups for v in g]
    n = len(pooled)
    ranks = _midranks(pooled)
    h = 0.0
    idx = 0
    for g in groups:
        r = sum(ranks[idx: idx + len(g)])
        idx += len(g)
        h += r * r / len(g)
    h = 12.0 / (n * (n + 1)) * h - 3 * (n + 1)
    counts = {}
    for v in pooled:
        counts[v] = counts.get(v, 0) + 1
    tie_term = sum(t**3 - t for t in counts.values())
    correction = 1.0 - tie_term / (n**3 - n)
    if correction <= 0:
        raise StatsError("all pooled values identical")
    h /= correction
    df = len(groups) - 1
    return StatResult(h, float(chi2_dist.sf(h, df)), df=df, n=n, method="kruskal-wallis")


class BloomLevel(Enum):
    """Cognitive demand levels, ordered; Analyze and above are higher-order."""

    REMEMBER = 1
    UNDERSTAND = 2
    APPLY = 3
    ANALYZE = 4
    EVALUATE = 5
    CREATE = 6

    @property
    def rank(self) -> int:
        return self.value

    @property
    def higher_order(self) -> bool:
        return self.value >= 4


@dataclass(frozen=True)
class BloomDistribution:
    condition: str
    total: int
    percentages: dict[str, float] = field(default_factory=dict)
    higher_order_pct: float = 0.0
    lower_order_pct: float = 0.0
    higher_order_count: int = 0


def bloom_table(labeled: dict[str, list[BloomLevel]]) -> list[BloomDistribution]:
    """Per-condition Bloom-level percentage rows plus the higher/lower split."""
    rows = []
    for condition, levels in labeled.items():
        total = len(levels)
        if total == 0:
            continue
        pct = {
            level.name.lower(): 100.0 * sum(1 for l in levels if l is level) / total
            for level in BloomLevel
        }
        higher = sum(1 for l in levels if l.higher_order)
        rows.append(
            BloomDistribution(
                condition=condition,
                total=total,
                percentages=pct,
                higher_order_pct=100.0 * higher / total,
                lower_order_pct=100.0 * (total - higher) / total,
                higher_order_count=higher,
            )
        )
    return rows


def higher_lower_table(labeled: dict[str, list[BloomLevel]]) -> ContingencyTable:
    """2 x k higher/lower-order contingency table across conditions."""
    conditions = list(labeled.keys())
    higher = [sum(1 for l in labeled[c] if l.higher_order) for c in conditions]
    lower = [len(labeled[c]) - h for c, h in zip(conditions, higher)]
    return ContingencyTable(
        row_labels=("higher", "lower"),
        col_labels=tuple(conditions),
        counts=(tuple(higher), tuple(lower)),
    )
