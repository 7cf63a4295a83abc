"""Core data model: sources, attributes, values, claims, snapshots, gold standards.

A *data item* is one attribute of one real-world object. Each source asserts
at most one value per data item; a ClaimSet is an immutable snapshot of all
such claims, indexed by item and by source.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence


class TruthFuseError(Exception):
    """Base class for all errors raised by this package."""


class LoadError(TruthFuseError):
    """A claims / gold / schema file violates its format or an invariant."""


class ValueParseError(TruthFuseError):
    """A raw value string cannot be parsed for the attribute kind.

    Carries the offending raw string in ``raw``.
    """

    def __init__(self, raw: str, kind: "Kind", reason: str = ""):
        self.raw = raw
        self.kind = kind
        msg = f"cannot parse {raw!r} as {kind.value}"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)


class KindMismatchError(TruthFuseError):
    """Two values (or a value and an attribute) have incompatible kinds."""


class UndefinedDeviationError(TruthFuseError):
    """Relative deviation is undefined because the dominant value is zero."""


class Kind(enum.Enum):
    NUMBER = "Number"
    TIME_OF_DAY = "TimeOfDay"
    TEXT = "Text"

    @classmethod
    def parse(cls, token: str) -> "Kind":
        t = token.strip().lower()
        for k in cls:
            if k.value.lower() == t:
                return k
        raise LoadError(f"unknown attribute kind {token!r} "
                        f"(expected one of {[k.value for k in cls]})")


@dataclass(frozen=True)
class AttributeSpec:
    """An attribute with its kind and tolerance policy.

    ``tolerance_param`` is the relative tolerance factor (alpha) for numeric
    attributes, the absolute tolerance in minutes for time-of-day attributes,
    and is ignored for text attributes (matching is exact ignoring case).
    """

    name: str
    kind: Kind
    tolerance_param: float = 0.0

    def __post_init__(self):
        if not self.name:
            raise LoadError("attribute name must be non-empty")
        if self.kind is Kind.NUMBER and self.tolerance_param <= 0:
            raise LoadError(f"attribute {self.name!r}: relative tolerance "
                            f"factor must be > 0")
        if self.kind is Kind.TIME_OF_DAY and self.tolerance_param < 0:
            raise LoadError(f"attribute {self.name!r}: minute tolerance "
                            f"must be >= 0")


MINUTES_PER_DAY = 1440


@dataclass(frozen=True)
class Value:
    """A normalized claim value: a finite number, minutes-since-midnight,
    or a case-folded string.

    ``granularity`` is the power of ten of the last significant digit of the
    raw string a numeric value was parsed from (e.g. 1e6 for "8M"). It is an
    annotation used by the formatting-subsumption relation and is excluded
    from equality and hashing.
    """

    kind: Kind
    num: float = 0.0
    text: str = ""
    granularity: float | None = field(default=None, compare=False)

    @classmethod
    def number(cls, x: float, granularity: float | None = None) -> "Value":
        x = float(x)
        if x != x or x in (float("inf"), float("-inf")):
            raise ValueParseError(str(x), Kind.NUMBER, "not finite")
        return cls(Kind.NUMBER, num=x, granularity=granularity)

    @classmethod
    def time(cls, minutes: int | float) -> "Value":
        m = float(minutes)
        if not (0 <= m < MINUTES_PER_DAY):
            raise ValueParseError(str(minutes), Kind.TIME_OF_DAY,
                                  "minutes out of [0, 1440)")
        return cls(Kind.TIME_OF_DAY, num=m)

    @classmethod
    def of_text(cls, s: str) -> "Value":
        return cls(Kind.TEXT, text=s.strip().casefold())

    def sort_key(self):
        """Total order used for deterministic tie-breaking."""
        if self.kind is Kind.TEXT:
            return (1, 0.0, self.text)
        return (0, self.num, "")

    def __str__(self) -> str:
        if self.kind is Kind.TEXT:
            return self.text
        if self.kind is Kind.TIME_OF_DAY:
            m = int(round(self.num))
            return f"{m // 60:02d}:{m % 60:02d}"
        return format_number(self.num, self.granularity)


def format_number(x: float, granularity: float | None = None) -> str:
    """Render a numeric value so that re-parsing recovers both the value and
    its inferred granularity (trailing zeros / decimal places are meaningful).
    """
    if granularity is not None and granularity > 0:
        if granularity >= 1:
            return f"{x:.0f}"
        decimals = max(0, int(round(-_log10(granularity))))
        return f"{x:.{decimals}f}"
    return repr(x)


def _log10(x: float) -> float:
    import math
    return math.log10(x)


@dataclass(frozen=True)
class DataItem:
    """One attribute of one object, the unit on which truth is decided."""

    object_id: str
    attribute: str

    def sort_key(self):
        return (self.object_id, self.attribute)


@dataclass(frozen=True)
class Claim:
    """A single source's asserted value on one data item."""

    source: str
    item: DataItem
    value: Value


class ClaimSet:
    """An immutable snapshot of claims with item and source indexes.

    At most one claim per (source, item) pair. Derived indexes are built once
    at construction; instances are safe to share across concurrent readers.
    """

    def __init__(self, snapshot_label: str, schema: Mapping[str, AttributeSpec],
                 claims: Iterable[Claim]):
        self.snapshot_label = snapshot_label
        self.schema: dict[str, AttributeSpec] = dict(schema)
        claim_list = list(claims)
        by_item: dict[DataItem, list[Claim]] = {}
        by_source: dict[str, list[Claim]] = {}
        seen: set[tuple[str, DataItem]] = set()
        for c in claim_list:
            if not c.source:
                raise LoadError("source id must be non-empty")
            attr = self.schema.get(c.item.attribute)
            if attr is None:
                raise LoadError(f"claim references unknown attribute "
                                f"{c.item.attribute!r}")
            if _kind_of(attr) is not c.value.kind:
                raise KindMismatchError(
                    f"value kind {c.value.kind.value} does not match "
                    f"attribute {attr.name!r} ({attr.kind.value})")
            key = (c.source, c.item)
            if key in seen:
                raise LoadError(f"duplicate claim by source {c.source!r} "
                                f"on item {c.item}")
            seen.add(key)
            by_item.setdefault(c.item, []).append(c)
            by_source.setdefault(c.source, []).append(c)
        self.claims: tuple[Claim, ...] = tuple(
            sorted(claim_list,
                   key=lambda c: (c.item.sort_key(), c.source)))
        self.by_item: dict[DataItem, tuple[Claim, ...]] = {
            it: tuple(sorted(cs, key=lambda c: c.source))
            for it, cs in by_item.items()}
        self.by_source: dict[str, tuple[Claim, ...]] = {
            s: tuple(sorted(cs, key=lambda c: c.item.sort_key()))
            for s, cs in by_source.items()}
        self.sources: tuple[str, ...] = tuple(sorted(by_source))
        self.items: tuple[DataItem, ...] = tuple(
            sorted(by_item, key=lambda it: it.sort_key()))
        self.object_ids: tuple[str, ...] = tuple(
            sorted({it.object_id for it in self.items}))

    def __len__(self) -> int:
        return len(self.claims)

    def attribute_of(self, item: DataItem) -> AttributeSpec:
        return self.schema[item.attribute]

    def providers(self, item: DataItem) -> tuple[str, ...]:
        """S(d): sources providing any value on the item."""
        return tuple(c.source for c in self.by_item.get(item, ()))

    def providers_of(self, item: DataItem, value: Value) -> tuple[str, ...]:
        """S(d, v): sources providing exactly this value on the item."""
        return tuple(c.source for c in self.by_item.get(item, ())
                     if c.value == value)

    def value_counts(self, item: DataItem) -> Counter:
        """Multiset of distinct normalized values on the item."""
        return Counter(c.value for c in self.by_item.get(item, ()))

    def attribute_numbers(self, attribute: str) -> list[float]:
        """All numeric/time payloads claimed for the attribute (multiset)."""
        return [c.value.num for c in self.claims
                if c.item.attribute == attribute
                and c.value.kind is not Kind.TEXT]

    def restrict(self, sources: Sequence[str]) -> "ClaimSet":
        """A snapshot view containing only claims from the given sources."""
        keep = set(sources)
        return ClaimSet(self.snapshot_label, self.schema,
                        [c for c in self.claims if c.source in keep])


def _kind_of(attr: AttributeSpec) -> Kind:
    return attr.kind


@dataclass(frozen=True)
class GoldStandard:
    """Trusted item -> value map used for evaluation.

    ``orphan_count`` counts gold items that no claim covers (allowed, but
    flagged so evaluations can report coverage honestly).
    """

    entries: Mapping[DataItem, Value]
    orphan_count: int = 0

    def __len__(self) -> int:
        return len(self.entries)


def majority_gold(sources: Sequence[str], claims: ClaimSet,
                  min_providers: int = 3) -> GoldStandard:
    """Build a gold standard by plurality vote among trusted sources.

    Only items provided by at least ``min_providers`` of the listed sources
    are voted on; ties are omitted rather than asserting an unverified truth.
    """
    if not sources:
        raise LoadError("majority_gold requires a non-empty source list")
    if min_providers < 1:
        raise LoadError("min_providers must be >= 1")
    unknown = set(sources) - set(claims.sources)
    if unknown:
        raise LoadError(f"trusted sources not present in claim set: "
                        f"{sorted(unknown)}")
    trusted = set(sources)
    entries: dict[DataItem, Value] = {}
    for item in claims.items:
        votes = Counter(c.value for c in claims.by_item[item]
                        if c.source in trusted)
        if sum(votes.values()) < min_providers:
            continue
        ranked = sorted(votes.items(),
                        key=lambda kv: (-kv[1], kv[0].sort_key()))
        if len(ranked) > 1 and ranked[0][1] == ranked[1][1]:
            continue
        entries[item] = ranked[0][0]
    return GoldStandard(entries=entries, orphan_count=0)
