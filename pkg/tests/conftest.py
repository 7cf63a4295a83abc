"""Shared fixtures and small dataset builders."""

from __future__ import annotations

import pytest

from truthfuse.config import load_config
from truthfuse.model import (
    AttributeSpec,
    Claim,
    ClaimSet,
    DataItem,
    GoldStandard,
    Kind,
    Value,
)

NUMBER = AttributeSpec("price", Kind.NUMBER, 0.01)
TIME = AttributeSpec("depart", Kind.TIME_OF_DAY, 10.0)
TEXT = AttributeSpec("gate", Kind.TEXT, 0.0)

SCHEMA = {a.name: a for a in (NUMBER, TIME, TEXT)}


def value_for(attr: AttributeSpec, raw) -> Value:
    if attr.kind is Kind.NUMBER:
        return Value.number(float(raw))
    if attr.kind is Kind.TIME_OF_DAY:
        return Value.time(int(raw))
    return Value.of_text(str(raw))


def make_claims(rows, label="snap", schema=None) -> ClaimSet:
    """rows: (source, object_id, attribute_name, raw_value) tuples."""
    schema = schema or SCHEMA
    claims = []
    for source, obj, attr_name, raw in rows:
        attr = schema[attr_name]
        claims.append(Claim(source, DataItem(obj, attr_name),
                            value_for(attr, raw)))
    return ClaimSet(label, schema, claims)


def make_gold(rows, schema=None) -> GoldStandard:
    """rows: (object_id, attribute_name, raw_value) tuples."""
    schema = schema or SCHEMA
    entries = {}
    for obj, attr_name, raw in rows:
        attr = schema[attr_name]
        entries[DataItem(obj, attr_name)] = value_for(attr, raw)
    return GoldStandard(entries=entries)


@pytest.fixture
def config():
    return load_config()


@pytest.fixture
def toy5():
    """One numeric item, five sources: three say 10.0, two say 12.0."""
    return make_claims([
        ("s1", "o1", "price", 10.0),
        ("s2", "o1", "price", 10.0),
        ("s3", "o1", "price", 10.0),
        ("s4", "o1", "price", 12.0),
        ("s5", "o1", "price", 12.0),
    ])
