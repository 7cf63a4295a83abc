"""Delimited-text ingestion and serialization for claims, gold standards,
schemas, trust maps, and known-copier lists.

Formats (UTF-8, header row, quoted fields allowed, delimiter configurable):

* claims:  source,object,attribute,value
* gold:    object,attribute,value
* schema:  one attribute per line: name,kind,tolerance_param
* trust:   source,trust            (or source,attribute,trust)
* copiers: copier,original,probability
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable

from .model import (
    AttributeSpec,
    Claim,
    ClaimSet,
    DataItem,
    GoldStandard,
    Kind,
    LoadError,
    Value,
    ValueParseError,
)
from .normalize import normalize_value

CLAIM_HEADER = ["source", "object", "attribute", "value"]
GOLD_HEADER = ["object", "attribute", "value"]


def load_schema(path: str | Path, delimiter: str = ",",
                default_alpha: float = 0.01,
                default_time_tolerance: float = 10.0,
                ) -> dict[str, AttributeSpec]:
    """Read attribute specs; returns a name -> spec map.

    An explicit per-attribute tolerance parameter wins; blank cells take
    the configured defaults (relative factor for numbers, minutes for
    times).
    """
    schema: dict[str, AttributeSpec] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh, delimiter=delimiter), 1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 2:
                raise LoadError(f"{path}:{lineno}: expected "
                                f"name,kind[,tolerance_param]")
            name = row[0].strip()
            kind = Kind.parse(row[1])
            param_raw = row[2].strip() if len(row) > 2 else ""
            if param_raw:
                try:
                    param = float(param_raw)
                except ValueError:
                    raise LoadError(f"{path}:{lineno}: bad tolerance "
                                    f"parameter {param_raw!r}") from None
            else:
                param = {Kind.NUMBER: default_alpha,
                         Kind.TIME_OF_DAY: default_time_tolerance,
                         Kind.TEXT: 0.0}[kind]
            if name in schema:
                raise LoadError(f"{path}:{lineno}: duplicate attribute "
                                f"{name!r}")
            schema[name] = AttributeSpec(name, kind, param)
    if not schema:
        raise LoadError(f"{path}: empty schema")
    return schema


def load_claims(path: str | Path, schema: dict[str, AttributeSpec],
                snapshot_label: str | None = None,
                delimiter: str = ",") -> ClaimSet:
    """Load, normalize, validate, and index a claims file.

    Rejects duplicate (source, item) pairs, unparseable values, and unknown
    attributes, naming the offending line.
    """
    claims: list[Claim] = []
    seen: set[tuple[str, DataItem]] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != CLAIM_HEADER:
            raise LoadError(f"{path}: expected header "
                            f"{','.join(CLAIM_HEADER)!r}")
        for lineno, row in enumerate(reader, 2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 4:
                raise LoadError(f"{path}:{lineno}: expected 4 columns, "
                                f"got {len(row)}")
            source, obj, attr_name, raw = (f.strip() for f in row)
            attr = schema.get(attr_name)
            if attr is None:
                raise LoadError(f"{path}:{lineno}: unknown attribute "
                                f"{attr_name!r}")
            item = DataItem(obj, attr_name)
            if (source, item) in seen:
                raise LoadError(f"{path}:{lineno}: duplicate claim by "
                                f"{source!r} on ({obj!r}, {attr_name!r})")
            seen.add((source, item))
            try:
                value = normalize_value(raw, attr.kind)
            except ValueParseError as exc:
                raise LoadError(f"{path}:{lineno}: {exc}") from exc
            claims.append(Claim(source, item, value))
    label = snapshot_label if snapshot_label is not None else Path(path).stem
    return ClaimSet(label, schema, claims)


def load_gold(path: str | Path, claims: ClaimSet,
              delimiter: str = ",") -> GoldStandard:
    """Load a gold standard, normalized identically to claims.

    Gold items with no claim coverage are allowed but counted in
    ``orphan_count``.
    """
    entries: dict[DataItem, Value] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != GOLD_HEADER:
            raise LoadError(f"{path}: expected header "
                            f"{','.join(GOLD_HEADER)!r}")
        for lineno, row in enumerate(reader, 2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                raise LoadError(f"{path}:{lineno}: expected 3 columns, "
                                f"got {len(row)}")
            obj, attr_name, raw = (f.strip() for f in row)
            attr = claims.schema.get(attr_name)
            if attr is None:
                raise LoadError(f"{path}:{lineno}: unknown attribute "
                                f"{attr_name!r}")
            item = DataItem(obj, attr_name)
            if item in entries:
                raise LoadError(f"{path}:{lineno}: duplicate gold row for "
                                f"({obj!r}, {attr_name!r})")
            try:
                entries[item] = normalize_value(raw, attr.kind)
            except ValueParseError as exc:
                raise LoadError(f"{path}:{lineno}: {exc}") from exc
    orphans = sum(1 for item in entries if item not in claims.by_item)
    return GoldStandard(entries=entries, orphan_count=orphans)


def write_schema(schema: dict[str, AttributeSpec], path: str | Path,
                 delimiter: str = ",") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=delimiter)
        for name in sorted(schema):
            a = schema[name]
            writer.writerow([a.name, a.kind.value, _fmt(a.tolerance_param)])


def write_claims(claims: ClaimSet, path: str | Path,
                 delimiter: str = ",") -> None:
    """Serialize a snapshot; loading the result reproduces the ClaimSet."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=delimiter)
        writer.writerow(CLAIM_HEADER)
        for c in claims.claims:
            writer.writerow([c.source, c.item.object_id, c.item.attribute,
                             str(c.value)])


def write_gold(gold: GoldStandard, path: str | Path,
               delimiter: str = ",") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=delimiter)
        writer.writerow(GOLD_HEADER)
        for item in sorted(gold.entries, key=DataItem.sort_key):
            writer.writerow([item.object_id, item.attribute,
                             str(gold.entries[item])])


def load_trust(path: str | Path, delimiter: str = ",") -> dict:
    """Read a trust map: ``source,trust`` rows, or ``source,attribute,trust``
    rows for per-attribute trust (keys become (source, attribute) tuples)."""
    out: dict = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh, delimiter=delimiter), 1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if lineno == 1 and row[-1].strip().lower() == "trust":
                continue
            try:
                if len(row) == 2:
                    out[row[0].strip()] = float(row[1])
                elif len(row) == 3:
                    out[(row[0].strip(), row[1].strip())] = float(row[2])
                else:
                    raise ValueError
            except ValueError:
                raise LoadError(f"{path}:{lineno}: expected "
                                f"source[,attribute],trust") from None
    if not out:
        raise LoadError(f"{path}: empty trust file")
    return out


def write_trust(trust: dict, path: str | Path, delimiter: str = ",") -> None:
    per_attr = any(isinstance(k, tuple) for k in trust)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=delimiter)
        if per_attr:
            writer.writerow(["source", "attribute", "trust"])
            for key in sorted(trust):
                writer.writerow([key[0], key[1], _fmt(trust[key])])
        else:
            writer.writerow(["source", "trust"])
            for key in sorted(trust):
                writer.writerow([key, _fmt(trust[key])])


def load_known_copiers(path: str | Path,
                       delimiter: str = ",") -> dict[tuple[str, str], float]:
    """Read declared copying pairs: ``copier,original,probability``."""
    out: dict[tuple[str, str], float] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh, delimiter=delimiter), 1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if lineno == 1 and row[-1].strip().lower() == "probability":
                continue
            if len(row) != 3:
                raise LoadError(f"{path}:{lineno}: expected "
                                f"copier,original,probability")
            try:
                prob = float(row[2])
            except ValueError:
                raise LoadError(f"{path}:{lineno}: bad probability "
                                f"{row[2]!r}") from None
            if not (0.0 <= prob <= 1.0):
                raise LoadError(f"{path}:{lineno}: probability out of [0,1]")
            out[(row[0].strip(), row[1].strip())] = prob
    return out


def write_rows(path: str | Path, header: Iterable[str],
               rows: Iterable[Iterable], delimiter: str = ",") -> None:
    """Write a plot-ready delimited table with deterministic float text."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=delimiter)
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def _fmt(x) -> str:
    if x is None:
        return "null"
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)
