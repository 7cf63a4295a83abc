"""Value canonicalization, tolerance, tolerant matching, bucketing,
value similarity, and the formatting-subsumption relation.

All functions here are pure and operate on immutable inputs.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .model import (
    AttributeSpec,
    Claim,
    ClaimSet,
    DataItem,
    Kind,
    KindMismatchError,
    Value,
    ValueParseError,
)

DEFAULT_ALPHA = 0.01
DEFAULT_TIME_TOLERANCE_MIN = 10.0

_SUFFIX_MULT = {"k": 1e3, "m": 1e6, "b": 1e9}
_CURRENCY = "$€£¥"

_NUMBER_RE = re.compile(
    r"^(?P<sign>[+-])?(?P<mantissa>\d+(?:\.\d+)?|\.\d+)(?P<suffix>[kKmMbB])?$")
_TIME_RE = re.compile(
    r"^(?P<h>\d{1,2}):(?P<m>\d{2})\s*(?P<ampm>[ap]\.?m\.?)?$",
    re.IGNORECASE)


@dataclass(frozen=True)
class SimilarityParams:
    """Knobs for the similarity function used by similarity-weighted fusion.

    Numeric similarity decays linearly, reaching zero at
    ``decay_width_multiplier`` tolerances; time similarity reaches zero at
    ``time_zero_at`` minutes; ``rho`` weighs how much of a similar value's
    vote is credited during fusion.
    """

    decay_width_multiplier: float = 10.0
    time_zero_at: float = 60.0
    rho: float = 0.5

    def __post_init__(self):
        if self.decay_width_multiplier <= 0:
            raise ValueError("decay_width_multiplier must be > 0")
        if self.time_zero_at <= 0:
            raise ValueError("time_zero_at must be > 0")
        if not (0.0 <= self.rho <= 1.0):
            raise ValueError("rho must be in [0, 1]")


@dataclass(frozen=True)
class Bucket:
    """A group of nearly-equal values on one item.

    Numeric/time buckets live on a half-open grid anchored at the dominant
    value, spaced one matching tolerance apart (tau for numbers, the minute
    tolerance for times). Text buckets are exact case-folded equality
    classes.
    """

    center: Value
    half_width: float
    members: tuple[Value, ...]
    provider_count: int
    providers: tuple[str, ...]


def normalize_value(raw: str, kind: Kind) -> Value:
    """Canonicalize a raw string: "6.7M" == "6,700,000" == "6700000".

    Numbers: currency symbols, thousands separators and '%' are stripped and
    K/M/B suffixes expanded; the granularity (power of ten of the last
    significant digit) is inferred from the spelling. Times parse from
    ``HH:MM`` with optional am/pm. Text is trimmed and case-folded.
    """
    if not raw or not raw.strip():
        raise ValueParseError(raw, kind, "empty")
    if kind is Kind.TEXT:
        return Value.of_text(raw)
    if kind is Kind.TIME_OF_DAY:
        return _parse_time(raw)
    return _parse_number(raw)


def _parse_number(raw: str) -> Value:
    s = raw.strip()
    for ch in _CURRENCY:
        s = s.replace(ch, "")
    s = s.replace(",", "").replace("%", "").strip()
    m = _NUMBER_RE.match(s)
    if m is None:
        # Fall back to plain float syntax (covers exponents); granularity
        # is unknown for such spellings.
        try:
            x = float(s)
        except ValueError:
            raise ValueParseError(raw, Kind.NUMBER) from None
        if not math.isfinite(x):
            raise ValueParseError(raw, Kind.NUMBER, "not finite")
        return Value.number(x, granularity=None)
    mult = _SUFFIX_MULT.get((m.group("suffix") or "").lower(), 1.0)
    mantissa = m.group("mantissa")
    x = float((m.group("sign") or "") + mantissa) * mult
    if not math.isfinite(x):
        raise ValueParseError(raw, Kind.NUMBER, "not finite")
    return Value.number(x, granularity=_granularity(mantissa, mult))


def _granularity(mantissa: str, mult: float) -> float:
    """Power of ten of the last significant digit of the raw spelling."""
    if "." in mantissa:
        frac = mantissa.split(".", 1)[1]
        return 10.0 ** (-len(frac)) * mult
    digits = mantissa.lstrip("0") or "0"
    if digits == "0":
        return mult
    trailing = len(digits) - len(digits.rstrip("0"))
    return 10.0 ** trailing * mult


def _parse_time(raw: str) -> Value:
    m = _TIME_RE.match(raw.strip())
    if m is None:
        raise ValueParseError(raw, Kind.TIME_OF_DAY)
    h, mins = int(m.group("h")), int(m.group("m"))
    ampm = (m.group("ampm") or "").lower().replace(".", "")
    if mins >= 60:
        raise ValueParseError(raw, Kind.TIME_OF_DAY, "minutes >= 60")
    if ampm:
        if not (1 <= h <= 12):
            raise ValueParseError(raw, Kind.TIME_OF_DAY,
                                  "hour out of 1..12 with am/pm")
        h = h % 12 + (12 if ampm == "pm" else 0)
    elif h >= 24:
        raise ValueParseError(raw, Kind.TIME_OF_DAY, "hour >= 24")
    return Value.time(h * 60 + mins)


def tolerance(attribute: AttributeSpec, values) -> float:
    """Relative tolerance tau = alpha * median of all provided values.

    The median of an even-length multiset is the mean of the two middle
    elements. Only defined for numeric attributes.
    """
    if attribute.kind is not Kind.NUMBER:
        raise KindMismatchError(
            f"tolerance() is defined for numeric attributes, "
            f"got {attribute.kind.value}")
    xs = sorted(float(v) for v in values)
    if not xs:
        raise ValueError(f"attribute {attribute.name!r} has no values")
    n = len(xs)
    mid = n // 2
    median = xs[mid] if n % 2 else (xs[mid - 1] + xs[mid]) / 2.0
    return attribute.tolerance_param * median


def effective_tolerance(attribute: AttributeSpec,
                        claims: ClaimSet) -> float | None:
    """The matching tolerance for an attribute within a snapshot: tau for
    numbers, the minute tolerance for times, None for text."""
    if attribute.kind is Kind.NUMBER:
        return tolerance(attribute, claims.attribute_numbers(attribute.name))
    if attribute.kind is Kind.TIME_OF_DAY:
        return attribute.tolerance_param
    return None


def tolerances(claims: ClaimSet) -> dict[str, float | None]:
    """Per-attribute matching tolerances for every attribute with claims."""
    present = {it.attribute for it in claims.items}
    return {name: effective_tolerance(claims.schema[name], claims)
            for name in sorted(present)}


def values_match(v1: Value, v2: Value, attribute: AttributeSpec,
                 tau: float | None = None) -> bool:
    """Tolerant equality: |diff| <= tau for numbers, <= m minutes for times,
    case-insensitive equality for text."""
    if v1.kind is not v2.kind or v1.kind is not attribute.kind:
        raise KindMismatchError(
            f"cannot match {v1.kind.value} against {v2.kind.value} "
            f"under attribute {attribute.name!r} ({attribute.kind.value})")
    if attribute.kind is Kind.TEXT:
        return v1.text.casefold() == v2.text.casefold()
    if attribute.kind is Kind.TIME_OF_DAY:
        return abs(v1.num - v2.num) <= attribute.tolerance_param
    if tau is None:
        raise ValueError("numeric matching requires tau")
    return abs(v1.num - v2.num) <= tau


def bucket_width(attribute: AttributeSpec, tau: float | None) -> float:
    """Grid spacing: the matching tolerance itself, i.e. tau for numbers
    and the minute tolerance for times (half-width is half the spacing)."""
    if attribute.kind is Kind.NUMBER:
        return float(tau or 0.0)
    if attribute.kind is Kind.TIME_OF_DAY:
        return attribute.tolerance_param
    return 0.0


def bucketize(item: DataItem, claims: ClaimSet,
              tau: float | None = None) -> list[Bucket]:
    """Partition an item's claims into tolerance buckets.

    Buckets lie on the half-open grid (v0 - 3w/2, v0 - w/2], (v0 - w/2,
    v0 + w/2], ... anchored at the dominant raw value v0, where w is the
    grid spacing. Every claim lands in exactly one bucket; empty buckets
    are omitted. Text values bucket by exact case-folded equality.
    """
    item_claims = claims.by_item.get(item)
    if not item_claims:
        raise ValueError(f"item {item} has no claims")
    attr = claims.attribute_of(item)
    if attr.kind is Kind.TEXT:
        groups: dict[str, list[Claim]] = {}
        for c in item_claims:
            groups.setdefault(c.value.text, []).append(c)
        return [
            Bucket(center=Value.of_text(text), half_width=0.0,
                   members=tuple(sorted({c.value for c in cs},
                                        key=Value.sort_key)),
                   provider_count=len(cs),
                   providers=tuple(sorted(c.source for c in cs)))
            for text, cs in sorted(groups.items())
        ]
    anchor = _raw_dominant(item_claims)
    width = bucket_width(attr, tau)
    groups_n: dict[float, list[Claim]] = {}
    if width > 0:
        for c in item_claims:
            k = _bucket_index(c.value.num, anchor, width)
            groups_n.setdefault(anchor + k * width, []).append(c)
    else:
        # Degenerate tolerance: exact grouping by value.
        for c in item_claims:
            groups_n.setdefault(c.value.num, []).append(c)
    half = width / 2.0
    out = []
    for center_num in sorted(groups_n):
        cs = groups_n[center_num]
        # Grid centers may land marginally outside the clock range, so the
        # time constructor's range check is bypassed deliberately.
        center = (Value.number(center_num) if attr.kind is Kind.NUMBER
                  else Value(Kind.TIME_OF_DAY, num=center_num))
        out.append(Bucket(
            center=center, half_width=half,
            members=tuple(sorted({c.value for c in cs}, key=Value.sort_key)),
            provider_count=len(cs),
            providers=tuple(sorted(c.source for c in cs))))
    return out


def _raw_dominant(item_claims) -> float:
    counts: dict[float, int] = {}
    for c in item_claims:
        counts[c.value.num] = counts.get(c.value.num, 0) + 1
    return min((v for v in counts),
               key=lambda v: (-counts[v], v))


def _bucket_index(x: float, anchor: float, width: float) -> int:
    return math.ceil((x - anchor) / width - 0.5)


def similarity(v1: Value, v2: Value, attribute: AttributeSpec,
               params: SimilarityParams = SimilarityParams(),
               tau: float | None = None) -> float:
    """Symmetric similarity in [0, 1]; 1 on identical values.

    Numbers decay linearly to zero at k*tau; times decay to zero at
    ``time_zero_at`` minutes; text is 1 on case-insensitive equality and
    normalized edit-similarity otherwise.
    """
    if v1.kind is not v2.kind or v1.kind is not attribute.kind:
        raise KindMismatchError(
            f"similarity between {v1.kind.value} and {v2.kind.value} "
            f"under {attribute.kind.value} attribute")
    if attribute.kind is Kind.TEXT:
        a, b = v1.text.casefold(), v2.text.casefold()
        if a == b:
            return 1.0
        return 1.0 - _levenshtein(a, b) / max(len(a), len(b))
    if attribute.kind is Kind.TIME_OF_DAY:
        return max(0.0, 1.0 - abs(v1.num - v2.num) / params.time_zero_at)
    if tau is None:
        raise ValueError("numeric similarity requires tau")
    span = params.decay_width_multiplier * tau
    if span <= 0:
        return 1.0 if v1.num == v2.num else 0.0
    return max(0.0, 1.0 - abs(v1.num - v2.num) / span)


def _levenshtein(a: str, b: str) -> int:
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1,
                           prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def subsumes(coarse: Value, fine: Value, attribute: AttributeSpec) -> bool:
    """True iff rounding ``fine`` to the inferred precision of ``coarse``
    yields ``coarse`` (e.g. "8M" subsumes 7,528,396).

    For time and text kinds subsumption degenerates to equality. For
    distinct numeric values the coarse side must carry strictly coarser
    inferred precision; values with unknown granularity subsume only
    themselves.
    """
    if coarse.kind is not fine.kind or coarse.kind is not attribute.kind:
        raise KindMismatchError("subsumption requires matching kinds")
    if coarse == fine:
        return True
    if attribute.kind is not Kind.NUMBER:
        return False
    g_c = coarse.granularity
    g_f = fine.granularity if fine.granularity is not None else 0.0
    if g_c is None or g_c <= 0 or g_c <= g_f:
        return False
    rounded = round(fine.num / g_c) * g_c
    return math.isclose(rounded, coarse.num,
                        rel_tol=1e-9, abs_tol=g_c * 1e-9)
