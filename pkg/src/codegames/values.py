"""Canonical text form for the structured value model.

States and observations are trees of maps (string keys), sequences, strings,
numbers, booleans, and null. The canonical form is JSON with sorted map keys
and integral floats rendered as integers, so 2.0 and 2 serialize identically
and structural equality can be decided by string comparison. This encoding is
also the normative one for trajectory files and the wire protocol.
"""

from __future__ import annotations

import json
import math
from typing import Any

from codegames.errors import UnsupportedValueError

Value = Any


def normalize(value: Value) -> Value:
    """Return a copy with integral floats collapsed to ints, recursively.

    Raises UnsupportedValueError for values outside the model (tuples are
    accepted and normalized to lists).
    """
    if value is None or isinstance(value, (bool, str, int)):
        return value
    if isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            raise UnsupportedValueError(f"non-finite number: {value!r}")
        if value.is_integer():
            return int(value)
        return value
    if isinstance(value, (list, tuple)):
        return [normalize(v) for v in value]
    if isinstance(value, dict):
        out = {}
        for k, v in value.items():
            if not isinstance(k, str):
                raise UnsupportedValueError(f"map key is not a string: {k!r}")
            out[k] = normalize(v)
        return out
    raise UnsupportedValueError(f"unsupported value of type {type(value).__name__}")


def canonical_serialize(value: Value) -> str:
    """Deterministic text encoding: sorted keys, integral floats as ints."""
    return json.dumps(normalize(value), sort_keys=True, separators=(",", ":"))


def parse_canonical(text: str) -> Value:
    """Inverse of canonical_serialize up to structural equality."""
    return json.loads(text)


def structurally_equal(a: Value, b: Value) -> bool:
    """Equality over the canonical form (key order and 2.0-vs-2 irrelevant)."""
    return canonical_serialize(a) == canonical_serialize(b)
