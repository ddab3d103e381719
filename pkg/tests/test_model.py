import json
import math

import numpy as np
import pytest

from bnexact.errors import InfeasibleFeatureUnderBound, InvalidFeature, SchemaError
from bnexact.model import (Bfunction, FeatureSpec, assemble_B, edge_feature, load_feature,
                           prior_log_weights)
from conftest import random_tables, unit_tables


def test_edge_feature_masks():
    f = edge_feature(0, 1, 3)
    assert f.required == (0, 0b001, 0)
    assert f.forbidden == (0, 0, 0)


def test_self_loop():
    with pytest.raises(InvalidFeature):
        edge_feature(2, 2, 3)


def test_conjunction_is_subnetwork():
    f = edge_feature(0, 1, 3) & edge_feature(2, 1, 3)
    assert f.required[1] == 0b101


def test_contradictory_conjunction():
    forbid = FeatureSpec((0, 0, 0), (0, 0b001, 0))
    with pytest.raises(InvalidFeature):
        edge_feature(0, 1, 3) & forbid


def test_unit_weights_with_empty_data():
    B = assemble_B(unit_tables(4, 2))
    assert np.allclose(B.shifts, 0.0)
    for vals in B.values:
        assert np.all(vals == 1.0)


def test_edge_feature_zeroes_other_families():
    rng = np.random.default_rng(0)
    tables = random_tables(rng, 4, 3)
    B = assemble_B(tables, feature=edge_feature(2, 0, 4))
    has_parent = (B.parents[0] >> 2) & 1 == 1
    assert np.all(B.values[0][~has_parent] == 0.0)
    assert np.all(B.values[0][has_parent] > 0.0)
    for i in (1, 2, 3):
        assert np.all(B.values[i] > 0.0)


def test_order_modular_weight():
    masks = np.array([0, 0b010, 0b110])
    q = np.exp(prior_log_weights("order_modular", 3, masks))
    assert q[1] == pytest.approx(1 / math.comb(2, 1))
    assert q[2] == pytest.approx(1 / math.comb(2, 2))
    tables = unit_tables(3, 2)
    B = assemble_B(tables, "order-modular")
    one_parent = np.array([bin(int(p)).count("1") == 1 for p in B.parents[0]])
    assert np.allclose(B.values[0][one_parent], 0.5)


def test_values_in_unit_interval_and_max_is_one():
    rng = np.random.default_rng(1)
    B = assemble_B(random_tables(rng, 5, 3, scale=50), "order_modular")
    for vals in B.values:
        assert vals.min() >= 0.0 and vals.max() == 1.0


def test_nonzero_count_matches_family_count():
    rng = np.random.default_rng(2)
    tables = random_tables(rng, 5, 2)
    B = assemble_B(tables)
    assert [int(np.count_nonzero(v)) for v in B.values] == [len(t) for t in tables]


def test_infeasible_under_bound():
    f = edge_feature(0, 2, 3) & edge_feature(1, 2, 3)
    with pytest.raises(InfeasibleFeatureUnderBound):
        assemble_B(unit_tables(3, 1), feature=f, k=1)


def test_lower_k_than_tables():
    tables = unit_tables(4, 3)
    B = assemble_B(tables, k=1)
    assert all(len(p) == 4 for p in B.parents)


def test_feature_file(tmp_path):
    path = tmp_path / "f.json"
    path.write_text(json.dumps({"required_edges": [["a", "c"]], "forbidden_edges": [["b", "c"]]}))
    f = load_feature(path, ["a", "b", "c"])
    assert f.required == (0, 0, 0b001)
    assert f.forbidden == (0, 0, 0b010)
    path.write_text(json.dumps({"required_edges": [["a", "zz"]]}))
    with pytest.raises(SchemaError):
        load_feature(path, ["a", "b", "c"])


def test_low_level_constructor():
    B = Bfunction.from_tables(3, 1, {0: {0: 1.0, 0b010: 0.0}, 1: {0: 0.5}, 2: {0b001: 2.0}})
    assert B.values[0].tolist() == [1.0, 0.0]
    assert B.parents[2].tolist() == [0b001]
    with pytest.raises(InvalidFeature):
        Bfunction.from_tables(3, 1, {0: {0b001: 1.0}})
    with pytest.raises(InvalidFeature):
        Bfunction.from_tables(3, 1, {0: {0b110: 1.0}})
