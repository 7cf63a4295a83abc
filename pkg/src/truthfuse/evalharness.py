"""Evaluation protocol: precision/recall against a gold standard, trust
deviation and difference between sampled and computed trustworthiness,
incremental source-addition curves, dominance-bucketed precision, timing,
and multi-snapshot summaries.

All report content is deterministic; wall-clock timings are the only
nondeterministic fields and are kept out of comparison-sensitive artifacts.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Sequence

from .config import RunConfig
from .fusion import FusionResult, MethodSpec, run_fusion, sample_trust
from .metrics import ItemProfile, source_accuracy, source_coverage
from .model import ClaimSet, DataItem, GoldStandard
from .normalize import tolerances, values_match


@dataclass(frozen=True)
class EvalReport:
    """One method's evaluation on one snapshot."""

    method: str
    precision: float
    recall: float
    trust_deviation: float | None
    trust_difference: float | None
    wall_time: float
    rounds: int
    converged: bool
    precision_with_trust: float | None = None


@dataclass(frozen=True)
class CurvePoint:
    """Recall after fusing the k best sources (by coverage x accuracy)."""

    k: int
    recall: float
    added_source: str


def precision_recall(result: FusionResult, gold: GoldStandard,
                     claims: ClaimSet,
                     taus: dict[str, float | None] | None = None,
                     ) -> tuple[float, float]:
    """Precision over output-and-gold items; recall over all gold items.

    With full source coverage the two coincide, since every gold item is
    then output.
    """
    if not gold.entries:
        raise ValueError("gold standard is empty")
    if taus is None:
        taus = tolerances(claims)
    correct = 0
    output_on_gold = 0
    for item in gold.entries:
        selected = result.selected.get(item)
        if selected is None:
            continue
        output_on_gold += 1
        attr = claims.schema[item.attribute]
        if values_match(selected, gold.entries[item], attr,
                        taus.get(item.attribute)):
            correct += 1
    precision = correct / output_on_gold if output_on_gold else 0.0
    recall = correct / len(gold.entries)
    return precision, recall


def trust_deviation(sampled: dict, computed: dict) -> float:
    """Root-mean-square gap between sampled and computed trust over the
    sources common to both maps."""
    common = sorted(set(sampled) & set(computed), key=str)
    if not common:
        raise ValueError("trust maps share no sources")
    return math.sqrt(sum((sampled[s] - computed[s]) ** 2 for s in common)
                     / len(common))


def trust_difference(sampled: dict, computed: dict) -> float:
    """Average computed trust minus average sampled trust (signed)."""
    common = sorted(set(sampled) & set(computed), key=str)
    if not common:
        raise ValueError("trust maps share no sources")
    return (sum(computed[s] for s in common)
            - sum(sampled[s] for s in common)) / len(common)


def rank_sources(claims: ClaimSet, gold: GoldStandard) -> list[str]:
    """Sources ordered by coverage x accuracy (descending), undefined
    accuracy last, ties by source id."""
    taus = tolerances(claims)

    def key(s: str):
        acc = source_accuracy(s, claims, gold, taus)
        cov = source_coverage(s, claims, gold)
        product = -1.0 if acc is None else acc * cov
        return (-product, s)

    return sorted(claims.sources, key=key)


def incremental_curve(method: MethodSpec, claims: ClaimSet,
                      gold: GoldStandard,
                      config: RunConfig) -> list[CurvePoint]:
    """Fuse growing prefixes of the ranked sources and record recall
    against the full (fixed) gold standard at each step."""
    if not gold.entries:
        raise ValueError("gold standard is empty")
    ranked = rank_sources(claims, gold)
    points: list[CurvePoint] = []
    for k in range(1, len(ranked) + 1):
        subset = claims.restrict(ranked[:k])
        result = run_fusion(method, subset, config)
        _, recall = precision_recall(result, gold, subset)
        points.append(CurvePoint(k=k, recall=recall,
                                 added_source=ranked[k - 1]))
    return points


def dominance_bucket_edges(width: float = 0.1) -> list[float]:
    edges = [0.0]
    while edges[-1] < 1.0 - 1e-9:
        edges.append(min(1.0, round(edges[-1] + width, 12)))
    return edges


def precision_by_dominance(result: FusionResult, gold: GoldStandard,
                           profiles: dict[DataItem, ItemProfile],
                           claims: ClaimSet,
                           edges: Sequence[float] | None = None,
                           ) -> list[dict]:
    """Per-bucket precision of the method and of the vote baseline over
    gold items, stratified by dominance factor.

    Buckets are half-open [lo, hi) except the last, which closes at 1.0.
    Empty buckets carry an explicit None precision, never 0.
    """
    if edges is None:
        edges = dominance_bucket_edges()
    taus = tolerances(claims)
    rows = []
    for b in range(len(edges) - 1):
        lo, hi = edges[b], edges[b + 1]
        last = b == len(edges) - 2
        total = 0
        method_ok = 0
        vote_ok = 0
        for item in gold.entries:
            prof = profiles.get(item)
            sel = result.selected.get(item)
            if prof is None or sel is None:
                continue
            f = prof.dominance_factor
            if not (lo <= f < hi or (last and f == hi)):
                continue
            total += 1
            attr = claims.schema[item.attribute]
            truth = gold.entries[item]
            if values_match(sel, truth, attr, taus.get(item.attribute)):
                method_ok += 1
            if values_match(prof.dominant, truth, attr,
                            taus.get(item.attribute)):
                vote_ok += 1
        rows.append({
            "lo": lo, "hi": hi, "count": total,
            "precision": method_ok / total if total else None,
            "vote_precision": vote_ok / total if total else None,
        })
    return rows


def time_series_summary(method: MethodSpec,
                        snapshots: Sequence[ClaimSet],
                        golds: Sequence[GoldStandard],
                        config: RunConfig) -> tuple[float, float, float]:
    """(average, minimum, population standard deviation) of precision over
    a series of snapshots."""
    if len(snapshots) != len(golds) or not snapshots:
        raise ValueError("need one gold standard per snapshot")
    precisions = []
    for snap, gold in zip(snapshots, golds):
        result = run_fusion(method, snap, config)
        p, _ = precision_recall(result, gold, snap)
        precisions.append(p)
    mean = sum(precisions) / len(precisions)
    std = math.sqrt(sum((p - mean) ** 2 for p in precisions)
                    / len(precisions))
    return mean, min(precisions), std


def timed_run(method: MethodSpec, claims: ClaimSet, config: RunConfig,
              gold: GoldStandard,
              with_input_trust: bool = True) -> EvalReport:
    """Run a method end to end and assemble its report.

    Wall time covers the fusion run only (I/O and sampling excluded).
    Trust deviation/difference compare the default-initialization run's
    converged trust against the gold-sampled trust; the optional
    input-trust pass reruns the method single-pass under the sampled trust.
    """
    t0 = time.perf_counter()
    result = run_fusion(method, claims, config)
    wall = time.perf_counter() - t0
    precision, recall = precision_recall(result, gold, claims)
    dev = diff = None
    prec_with = None
    if method.name != "vote":
        sampled = sample_trust(method, claims, gold, config)
        if result.trust:
            dev = trust_deviation(sampled, result.trust)
            diff = trust_difference(sampled, result.trust)
        if with_input_trust:
            with_trust = run_fusion(method, claims, config,
                                    input_trust=sampled)
            prec_with, _ = precision_recall(with_trust, gold, claims)
    return EvalReport(
        method=method.label(),
        precision=precision,
        recall=recall,
        trust_deviation=dev,
        trust_difference=diff,
        wall_time=wall,
        rounds=result.rounds_used,
        converged=result.converged,
        precision_with_trust=prec_with,
    )
