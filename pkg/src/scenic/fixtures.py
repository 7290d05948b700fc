"""Bundled evaluation fixtures: Bloom distribution counts and route data.

The raw publication printed percentages; the integer counts here are derived
from them (see the JSON asset) and validated by tests for exact row sums and
round-trip rounding.
"""
from __future__ import annotations

import json
from importlib import resources

from .stats import BloomLevel, ContingencyTable


def load_eval_fixtures() -> dict:
    return json.loads(
        resources.files("scenic.assets").joinpath("eval_fixtures.json").read_text(encoding="utf-8")
    )


def bloom_labels() -> dict[str, list[BloomLevel]]:
    """Expand fixture counts into per-condition Bloom label lists."""
    fx = load_eval_fixtures()["bloom_distribution"]
    order = [BloomLevel[name.upper()] for name in fx["level_order"]]
    labeled = {}
    for condition, counts in fx["counts"].items():
        levels: list[BloomLevel] = []
        for level, count in zip(order, counts):
            levels.extend([level] * count)
        labeled[condition] = levels
    return labeled


def higher_lower_counts() -> dict[str, tuple[int, int]]:
    """(higher-order, lower-order) count pairs per condition."""
    out = {}
    for condition, levels in bloom_labels().items():
        higher = sum(1 for l in levels if l.higher_order)
        out[condition] = (higher, len(levels) - higher)
    return out


def bloom_contingency_2x3() -> ContingencyTable:
    counts = higher_lower_counts()
    conditions = ("scenic", "parent", "llm_only")
    return ContingencyTable(
        row_labels=("higher", "lower"),
        col_labels=conditions,
        counts=(
            tuple(counts[c][0] for c in conditions),
            tuple(counts[c][1] for c in conditions),
        ),
    )


def bloom_contingency_pairwise(cond_a: str, cond_b: str) -> ContingencyTable:
    counts = higher_lower_counts()
    return ContingencyTable(
        row_labels=("higher", "lower"),
        col_labels=(cond_a, cond_b),
        counts=(
            (counts[cond_a][0], counts[cond_b][0]),
            (counts[cond_a][1], counts[cond_b][1]),
        ),
    )


def route_nomination_samples() -> tuple[list[int], list[int]]:
    """(parent nominations, engine selections) across the observed routes."""
    fx = load_eval_fixtures()["route_nominations"]
    return list(fx["parent"]), list(fx["scenic"])


def engagement_stats() -> dict:
    return load_eval_fixtures()["engagement"]
