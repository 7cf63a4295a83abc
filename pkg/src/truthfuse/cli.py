"""Command-line front end.

Subcommands: generate, profile, fuse, copydetect, evaluate, compare.
Every config key is mirrored by a flag (flags win over environment
variables, which win over the config file). Identical inputs produce
byte-identical output files; wall-clock timings are confined to
``timings.csv`` and the ``wall_time_ms`` report field.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import copydetect as cd
from . import dataio, evalharness, metrics
from .config import CopyParams, FusionConfig, RunConfig, load_config
from .fusion import MethodSpec, method_labels, run_fusion
from .model import ClaimSet, DataItem, GoldStandard, Kind, TruthFuseError
from .normalize import tolerances
from .synthetic import generate_synthetic, spec_from_dict


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 1
    try:
        config = _config_from_args(args)
        return args.handler(args, config)
    except TruthFuseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="truthfuse",
        description="Profile, fuse, and evaluate conflicting multi-source "
                    "claims.")
    parser.set_defaults(command=None)
    sub = parser.add_subparsers(dest="command")

    gen = sub.add_parser("generate", help="emit a synthetic dataset")
    gen.add_argument("--spec", required=True,
                     help="JSON synthetic-dataset spec")
    gen.add_argument("--seed", type=int, default=0)
    _common_flags(gen)
    gen.set_defaults(handler=_cmd_generate)

    prof = sub.add_parser("profile",
                          help="per-item and per-source consistency tables")
    prof.add_argument("--claims", required=True)
    prof.add_argument("--schema", required=True)
    prof.add_argument("--gold")
    prof.add_argument("--snapshot", action="append", default=[],
                      metavar="CLAIMS:GOLD",
                      help="additional snapshot pair for the per-source "
                           "accuracy-over-time series (repeatable)")
    _common_flags(prof)
    prof.set_defaults(handler=_cmd_profile)

    fuse = sub.add_parser("fuse", help="resolve conflicts with one method")
    fuse.add_argument("--claims", required=True)
    fuse.add_argument("--schema", required=True)
    fuse.add_argument("--method", required=True,
                      help=f"one of: {', '.join(method_labels())} "
                           f"(append Attr for per-attribute trust)")
    fuse.add_argument("--per-attribute", action="store_true",
                      help="track trust per (source, attribute)")
    fuse.add_argument("--input-trust",
                      help="fixed trust file: single deterministic vote pass")
    fuse.add_argument("--known-copiers",
                      help="declared copier,original,probability rows")
    fuse.add_argument("--no-detect", action="store_true",
                      help="disable copy detection (copy-aware method only)")
    _common_flags(fuse)
    fuse.set_defaults(handler=_cmd_fuse)

    cdp = sub.add_parser("copydetect",
                         help="pairwise copy probabilities and group report")
    cdp.add_argument("--claims", required=True)
    cdp.add_argument("--schema", required=True)
    cdp.add_argument("--gold")
    cdp.add_argument("--groups",
                     help="declared groups file (remarks,members with "
                          "';'-separated members); default: groups are "
                          "connected components over the detection threshold")
    _common_flags(cdp)
    cdp.set_defaults(handler=_cmd_copydetect)

    ev = sub.add_parser("evaluate", help="full protocol for one method")
    ev.add_argument("--claims", required=True)
    ev.add_argument("--schema", required=True)
    ev.add_argument("--gold", required=True)
    ev.add_argument("--method", required=True)
    _common_flags(ev)
    ev.set_defaults(handler=_cmd_evaluate)

    cmp_ = sub.add_parser("compare", help="full protocol across methods")
    cmp_.add_argument("--claims", required=True)
    cmp_.add_argument("--schema", required=True)
    cmp_.add_argument("--gold", required=True)
    cmp_.add_argument("--methods", default="all",
                      help="comma-separated method names, or 'all'")
    _common_flags(cmp_)
    cmp_.set_defaults(handler=_cmd_compare)
    return parser


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--config", help="INI config file")
    for f in dataclasses.fields(FusionConfig):
        p.add_argument(f"--{f.name.replace('_', '-')}",
                       dest=f"fusion_{f.name}",
                       type=int if "int" in str(f.type) else float,
                       default=None)
    for f in dataclasses.fields(CopyParams):
        p.add_argument(f"--copy-{f.name.replace('_', '-')}",
                       dest=f"copy_{f.name}",
                       type=int if "int" in str(f.type) else float,
                       default=None)
    p.add_argument("--delimiter", default=None)
    p.add_argument("--workers", type=int, default=None)


def _config_from_args(args) -> RunConfig:
    overrides = {
        "fusion": {f.name: getattr(args, f"fusion_{f.name}", None)
                   for f in dataclasses.fields(FusionConfig)},
        "copy": {f.name: getattr(args, f"copy_{f.name}", None)
                 for f in dataclasses.fields(CopyParams)},
        "run": {k: v for k, v in
                [("delimiter", getattr(args, "delimiter", None)),
                 ("workers", getattr(args, "workers", None))]
                if v is not None},
    }
    return load_config(getattr(args, "config", None), overrides=overrides)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_inputs(args, config: RunConfig,
                 need_gold: bool = False,
                 ) -> tuple[ClaimSet, GoldStandard | None]:
    schema = dataio.load_schema(
        args.schema, config.delimiter,
        default_alpha=config.fusion.alpha,
        default_time_tolerance=config.fusion.time_tolerance_minutes)
    claims = dataio.load_claims(args.claims, schema,
                                delimiter=config.delimiter)
    gold = None
    if getattr(args, "gold", None):
        gold = dataio.load_gold(args.gold, claims, config.delimiter)
    elif need_gold:
        raise TruthFuseError("this command requires --gold")
    return claims, gold


# -- generate ---------------------------------------------------------------


def _cmd_generate(args, config: RunConfig) -> int:
    with open(args.spec, encoding="utf-8") as fh:
        spec = spec_from_dict(json.load(fh))
    claims, gold, known = generate_synthetic(spec, args.seed)
    out = _out_dir(args)
    dataio.write_schema(claims.schema, out / "schema.csv", config.delimiter)
    dataio.write_claims(claims, out / "claims.csv", config.delimiter)
    dataio.write_gold(gold, out / "gold.csv", config.delimiter)
    dataio.write_rows(out / "copiers.csv",
                      ["copier", "original", "probability"],
                      [(c, o, r) for (c, o), r in sorted(known.items())],
                      config.delimiter)
    print(f"generated {len(claims)} claims from {len(claims.sources)} "
          f"sources over {len(claims.items)} items -> {out}")
    return 0


# -- profile ----------------------------------------------------------------


def _cmd_profile(args, config: RunConfig) -> int:
    claims, gold = _load_inputs(args, config)
    out = _out_dir(args)
    profiles = metrics.profile_items(claims)
    items_sorted = sorted(profiles, key=DataItem.sort_key)

    dataio.write_rows(
        out / "items.csv",
        ["object", "attribute", "providers", "redundancy", "num_values",
         "entropy", "deviation", "dominant", "dominance_factor",
         "runners_up"],
        [(it.object_id, it.attribute, p.provider_count,
          metrics.item_redundancy(it, claims), p.num_values, p.entropy,
          p.deviation, str(p.dominant), p.dominance_factor,
          ";".join(str(v) for v in p.runners_up))
         for it, p in ((it, profiles[it]) for it in items_sorted)],
        config.delimiter)

    snapshots = _load_snapshot_series(args, claims, gold, config)
    source_profiles = metrics.profile_sources(claims, gold,
                                              snapshots=snapshots)
    dataio.write_rows(
        out / "sources.csv",
        ["source", "claims", "accuracy", "coverage", "accuracy_deviation"],
        [(s, sp.claim_count, sp.accuracy,
          sp.coverage if gold else None, sp.accuracy_deviation)
         for s, sp in sorted(source_profiles.items())],
        config.delimiter)
    if snapshots:
        rows = [(s, snap.snapshot_label,
                 metrics.source_accuracy(s, snap, snap_gold))
                for s in claims.sources
                for snap, snap_gold in snapshots]
        dataio.write_rows(out / "accuracy_over_time.csv",
                          ["source", "snapshot", "accuracy"], rows,
                          config.delimiter)

    _write_attribute_summary(out, claims, profiles, config)
    _write_histograms(out, claims, profiles, config)

    dataio.write_rows(
        out / "conflicts.csv",
        ["object", "attribute", "value", "providers"],
        _conflict_rows(claims, profiles),
        config.delimiter)
    print(f"profiled {len(items_sorted)} items, "
          f"{len(claims.sources)} sources -> {out}")
    return 0


def _load_snapshot_series(args, claims: ClaimSet, gold, config: RunConfig):
    """Extra (claims, gold) snapshot pairs for the over-time series; the
    primary snapshot is included first when it has a gold standard."""
    pairs = []
    if getattr(args, "snapshot", None):
        if gold is not None:
            pairs.append((claims, gold))
        for spec in args.snapshot:
            if ":" not in spec:
                raise TruthFuseError(
                    f"--snapshot expects CLAIMS:GOLD, got {spec!r}")
            claims_path, gold_path = spec.split(":", 1)
            snap = dataio.load_claims(claims_path, claims.schema,
                                      delimiter=config.delimiter)
            snap_gold = dataio.load_gold(gold_path, snap, config.delimiter)
            pairs.append((snap, snap_gold))
    return pairs


def _write_attribute_summary(out: Path, claims: ClaimSet, profiles,
                             config: RunConfig) -> None:
    rows = []
    for name in sorted({it.attribute for it in claims.items}):
        attr = claims.schema[name]
        ps = [profiles[it] for it in claims.items if it.attribute == name]
        devs = [p.deviation for p in ps if p.deviation is not None]
        providers = len({c.source for c in claims.claims
                         if c.item.attribute == name})
        rows.append((
            name, attr.kind.value, providers, len(ps),
            sum(p.num_values for p in ps) / len(ps),
            sum(p.entropy for p in ps) / len(ps),
            sum(devs) / len(devs) if devs else None))
    dataio.write_rows(
        out / "attributes.csv",
        ["attribute", "kind", "providers", "items", "avg_num_values",
         "avg_entropy", "avg_deviation"],
        rows, config.delimiter)


def _write_histograms(out: Path, claims: ClaimSet, profiles,
                      config: RunConfig) -> None:
    items = list(profiles)
    nv = [profiles[it].num_values for it in items]
    dataio.write_rows(out / "hist_num_values.csv", ["num_values", "count"],
                      sorted((v, nv.count(v)) for v in set(nv)),
                      config.delimiter)
    dataio.write_rows(out / "hist_entropy.csv",
                      ["lo", "hi", "count"],
                      _hist([profiles[it].entropy for it in items], 0.25),
                      config.delimiter)
    rel = [profiles[it].deviation for it in items
           if profiles[it].deviation is not None
           and claims.attribute_of(it).kind is Kind.NUMBER]
    minutes = [profiles[it].deviation for it in items
               if profiles[it].deviation is not None
               and claims.attribute_of(it).kind is Kind.TIME_OF_DAY]
    dataio.write_rows(out / "hist_deviation_relative.csv",
                      ["lo", "hi", "count"], _hist(rel, 0.1),
                      config.delimiter)
    dataio.write_rows(out / "hist_deviation_minutes.csv",
                      ["lo", "hi", "count"], _hist(minutes, 5.0),
                      config.delimiter)
    dataio.write_rows(out / "hist_dominance.csv",
                      ["lo", "hi", "count"],
                      _hist([profiles[it].dominance_factor for it in items],
                            0.1, hard_max=1.0),
                      config.delimiter)
    dataio.write_rows(out / "hist_item_redundancy.csv",
                      ["lo", "hi", "count"],
                      _hist([metrics.item_redundancy(it, claims)
                             for it in items], 0.1, hard_max=1.0),
                      config.delimiter)
    dataio.write_rows(out / "hist_object_redundancy.csv",
                      ["lo", "hi", "count"],
                      _hist([metrics.object_redundancy(o, claims)
                             for o in claims.object_ids], 0.1, hard_max=1.0),
                      config.delimiter)


def _hist(values, width: float, hard_max: float | None = None):
    if not values:
        return []
    top = hard_max if hard_max is not None else max(values)
    edges = [0.0]
    while edges[-1] < top - 1e-12:
        edges.append(round(edges[-1] + width, 12))
    rows = []
    for i in range(len(edges) - 1):
        lo, hi = edges[i], edges[i + 1]
        last = i == len(edges) - 2
        rows.append((lo, hi,
                     sum(1 for v in values
                         if lo <= v < hi or (last and v == hi))))
    return rows


def _conflict_rows(claims: ClaimSet, profiles):
    from .normalize import bucketize
    taus = tolerances(claims)
    rows = []
    for it in sorted(profiles, key=DataItem.sort_key):
        if profiles[it].num_values < 2:
            continue
        for b in bucketize(it, claims, taus[it.attribute]):
            rows.append((it.object_id, it.attribute, str(b.center),
                         ";".join(b.providers)))
    return rows


# -- fuse ---------------------------------------------------------------------


def _cmd_fuse(args, config: RunConfig) -> int:
    claims, _ = _load_inputs(args, config)
    method = MethodSpec.parse(args.method)
    if args.per_attribute and not method.per_attribute_trust:
        method = MethodSpec(method.name, per_attribute_trust=True)
    input_trust = (dataio.load_trust(args.input_trust, config.delimiter)
                   if args.input_trust else None)
    known = (dataio.load_known_copiers(args.known_copiers, config.delimiter)
             if args.known_copiers else None)
    result = run_fusion(method, claims, config, input_trust=input_trust,
                        known_copiers=known,
                        detect_copying=not args.no_detect)
    out = _out_dir(args)
    _write_selection(out / "selection.csv", result, config)
    dataio.write_trust(result.trust, out / "trust.csv", config.delimiter)
    dataio.write_rows(out / "convergence.csv",
                      ["round", "max_trust_change"],
                      list(enumerate(result.trust_deltas, start=1)),
                      config.delimiter)
    if result.copy_matrix is not None:
        _write_copy_pairs(out / "copy_pairs.csv", result.copy_matrix.prob,
                          config)
    status = "converged" if result.converged else "DID NOT CONVERGE"
    print(f"{method.label()}: {len(result.selected)} selections, "
          f"{result.rounds_used} rounds ({status}), "
          f"{result.tie_count} ties -> {out}")
    return 0


def _write_selection(path: Path, result, config: RunConfig) -> None:
    rows = [(it.object_id, it.attribute, str(result.selected[it]),
             result.selected_vote[it], result.confidence[it])
            for it in sorted(result.selected, key=DataItem.sort_key)]
    dataio.write_rows(path, ["object", "attribute", "value", "vote",
                             "confidence"], rows, config.delimiter)


def _write_copy_pairs(path: Path, prob: dict, config: RunConfig) -> None:
    rows = [(_vsrc_str(a), _vsrc_str(b), p)
            for (a, b), p in sorted(prob.items(), key=lambda kv: (
                _vsrc_str(kv[0][0]), _vsrc_str(kv[0][1])))]
    dataio.write_rows(path, ["copier", "original", "probability"], rows,
                      config.delimiter)


def _vsrc_str(key) -> str:
    if isinstance(key, tuple):
        return f"{key[0]}|{key[1]}"
    return str(key)


# -- copydetect ---------------------------------------------------------------


def _cmd_copydetect(args, config: RunConfig) -> int:
    claims, gold = _load_inputs(args, config)
    vote = run_fusion(MethodSpec("vote"), claims, config)
    taus = tolerances(claims)
    if gold is not None:
        trust = {s: a if (a := metrics.source_accuracy(
            s, claims, gold, taus)) is not None
            else config.fusion.init_trust_bayes
            for s in claims.sources}
    else:
        trust = {s: config.fusion.init_trust_bayes for s in claims.sources}
    matrix = cd.detect_copying(claims, vote.selected, trust, config.copy)
    out = _out_dir(args)
    _write_copy_pairs(out / "pairs.csv", matrix.prob, config)

    if args.groups:
        groups = _read_groups(args.groups, config)
    else:
        groups = [("detected", members) for members in
                  _components(matrix, claims, config.copy.group_threshold)]
    rows = []
    for remark, members in groups:
        if len(members) < 2:
            continue
        g = cd.group_commonality(members, claims, gold)
        rows.append((remark, g.size, g.schema_sim, g.object_sim,
                     g.value_sim, g.avg_accuracy))
    dataio.write_rows(out / "groups.csv",
                      ["remarks", "size", "schema_sim", "object_sim",
                       "value_sim", "avg_accuracy"],
                      rows, config.delimiter)
    print(f"{len(matrix.prob)} directed pairs, {len(rows)} groups -> {out}")
    return 0


def _read_groups(path: str, config: RunConfig):
    import csv

    groups = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=config.delimiter)
        for row in reader:
            if not row or row[0].strip().lower() == "remarks":
                continue
            groups.append((row[0].strip(),
                           tuple(m.strip() for m in row[1].split(";"))))
    return groups


def _components(matrix, claims: ClaimSet, threshold: float):
    linked: dict[str, set[str]] = {s: {s} for s in claims.sources}
    for (a, b), p in matrix.prob.items():
        total = p + matrix.prob.get((b, a), 0.0)
        if total >= threshold:
            union = linked[a] | linked[b]
            for s in union:
                linked[s] = union
    seen = set()
    out = []
    for s in claims.sources:
        group = tuple(sorted(linked[s]))
        if len(group) > 1 and group not in seen:
            seen.add(group)
            out.append(group)
    return out


# -- evaluate / compare --------------------------------------------------------


def _cmd_evaluate(args, config: RunConfig) -> int:
    return _evaluate_methods(args, config, [MethodSpec.parse(args.method)])


def _cmd_compare(args, config: RunConfig) -> int:
    if args.methods.strip().lower() == "all":
        methods = [MethodSpec.parse(m) for m in method_labels()]
        methods += [MethodSpec.parse("AccuSimAttr"),
                    MethodSpec.parse("AccuFormatAttr")]
    else:
        methods = [MethodSpec.parse(m) for m in args.methods.split(",")]
    return _evaluate_methods(args, config, methods)


def _evaluate_methods(args, config: RunConfig,
                      methods: list[MethodSpec]) -> int:
    claims, gold = _load_inputs(args, config, need_gold=True)
    out = _out_dir(args)
    profiles = metrics.profile_items(claims)

    def one(method: MethodSpec):
        report = evalharness.timed_run(method, claims, config, gold)
        result = run_fusion(method, claims, config)
        curve = evalharness.incremental_curve(method, claims, gold, config)
        dominance = evalharness.precision_by_dominance(
            result, gold, profiles, claims)
        return report, result, curve, dominance

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            evaluated = list(pool.map(one, methods))
    else:
        evaluated = [one(m) for m in methods]

    report_objs = []
    curve_rows = []
    dom_rows = []
    timing_rows = []
    for method, (report, result, curve, dominance) in zip(methods,
                                                          evaluated):
        report_objs.append({
            "method": report.method,
            "precision": report.precision,
            "recall": report.recall,
            "precision_with_trust": report.precision_with_trust,
            "trust_deviation": report.trust_deviation,
            "trust_difference": report.trust_difference,
            "rounds": report.rounds,
            "converged": report.converged,
            "tie_count": result.tie_count,
            "wall_time_ms": round(report.wall_time * 1000.0, 3),
        })
        curve_rows += [(report.method, p.k, p.added_source, p.recall)
                       for p in curve]
        dom_rows += [(report.method, r["lo"], r["hi"], r["count"],
                      r["precision"], r["vote_precision"])
                     for r in dominance]
        timing_rows.append((report.method, report.wall_time * 1000.0,
                            report.rounds))

    (out / "report.json").write_text(
        json.dumps(report_objs, sort_keys=True, indent=2) + "\n",
        encoding="utf-8")
    dataio.write_rows(
        out / "report.csv",
        ["method", "precision", "recall", "precision_with_trust",
         "trust_deviation", "trust_difference", "rounds", "converged"],
        [(r["method"], r["precision"], r["recall"],
          r["precision_with_trust"], r["trust_deviation"],
          r["trust_difference"], r["rounds"], r["converged"])
         for r in report_objs],
        config.delimiter)
    dataio.write_rows(out / "curve.csv",
                      ["method", "k", "added_source", "recall"],
                      curve_rows, config.delimiter)
    dataio.write_rows(out / "dominance.csv",
                      ["method", "lo", "hi", "count", "precision",
                       "vote_precision"],
                      dom_rows, config.delimiter)
    dataio.write_rows(out / "timings.csv",
                      ["method", "wall_time_ms", "rounds"],
                      timing_rows, config.delimiter)
    for r in report_objs:
        print(f"{r['method']:>16}  precision={r['precision']:.4f}  "
              f"recall={r['recall']:.4f}  rounds={r['rounds']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
