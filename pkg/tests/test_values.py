"""Canonical serialization: frozen examples plus property tests."""

import json
import math

import pytest
from hypothesis import given, strategies as st

from codegames.errors import UnsupportedValueError
from codegames.values import (
    canonical_serialize,
    normalize,
    parse_canonical,
    structurally_equal,
)


def test_sorted_keys_and_compact_separators():
    assert canonical_serialize({"b": 1, "a": 2}) == '{"a":2,"b":1}'


def test_integral_floats_collapse_to_ints():
    assert canonical_serialize(2.0) == "2"
    assert canonical_serialize([1.0, 2.5, -3.0]) == "[1,2.5,-3]"


def test_two_point_zero_equals_two():
    assert structurally_equal({"x": 2.0}, {"x": 2})


def test_key_order_is_irrelevant():
    assert structurally_equal({"a": 1, "b": [2.0]}, {"b": [2], "a": 1})


def test_nested_normalization():
    assert normalize({"a": (1.0, {"b": 4.0})}) == {"a": [1, {"b": 4}]}


@pytest.mark.parametrize("bad", [float("nan"), float("inf"), float("-inf")])
def test_non_finite_numbers_rejected(bad):
    with pytest.raises(UnsupportedValueError):
        canonical_serialize(bad)


def test_non_string_keys_rejected():
    with pytest.raises(UnsupportedValueError):
        canonical_serialize({1: "a"})


def test_unsupported_types_rejected():
    with pytest.raises(UnsupportedValueError):
        canonical_serialize({"a": object()})


json_values = st.recursive(
    st.none()
    | st.booleans()
    | st.integers(min_value=-(10**9), max_value=10**9)
    | st.floats(allow_nan=False, allow_infinity=False, width=32)
    | st.text(max_size=8),
    lambda children: st.lists(children, max_size=4)
    | st.dictionaries(st.text(max_size=4), children, max_size=4),
    max_leaves=20,
)


@given(json_values)
def test_round_trip_is_identity_up_to_structure(value):
    text = canonical_serialize(value)
    parsed = parse_canonical(text)
    assert structurally_equal(value, parsed)
    # A second pass is byte-identical: canonical form is a fixed point.
    assert canonical_serialize(parsed) == text


@given(json_values)
def test_serialization_is_valid_json(value):
    json.loads(canonical_serialize(value))


@given(json_values, json_values)
def test_equality_agrees_with_string_equality(a, b):
    assert structurally_equal(a, b) == (canonical_serialize(a) == canonical_serialize(b))


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_normalize_preserves_numeric_value(x):
    out = normalize(x)
    assert math.isclose(float(out), x, rel_tol=0, abs_tol=0)
    assert isinstance(out, int) == float(x).is_integer()
