"""Engine tables against direct summations, plus end-to-end posterior checks."""

import math
from itertools import combinations

import numpy as np
import pytest

from bnexact import engine, kernels
from bnexact.engine import (all_edge_posteriors, compute_A, compute_Gamma, compute_H, compute_K,
                            compute_RR, del_bit, feature_joint, feature_posterior, upward_mobius)
from bnexact.errors import CapExceeded, NumericalBreakdown
from bnexact.model import Bfunction, FeatureSpec, assemble_B, edge_feature
from bnexact.oracle import count_dags, enumerate_dags
from bnexact.scoring import LocalScoreTable
from conftest import random_tables, unit_tables


def _all_dags(n):
    return np.concatenate(list(enumerate_dags(n)))


def _weight(B, i, parents):
    hit = np.nonzero(B.parents[i] == parents)[0]
    return float(B.values[i][hit[0]]) if len(hit) else 0.0


def naive_RR(B, S):
    """Sum over DAGs whose nodes outside S are roots of the product over S."""
    total = 0.0
    for g in _all_dags(B.n):
        if any(g[i] for i in range(B.n) if not S >> i & 1):
            continue
        total += math.prod(_weight(B, i, int(g[i])) for i in range(B.n) if S >> i & 1)
    return total


def naive_H(B, S):
    """Sum over DAGs on the node set S alone."""
    total = 0.0
    for g in _all_dags(B.n):
        if any(g[i] and not S >> i & 1 for i in range(B.n)):
            continue
        if any(S >> i & 1 and g[i] & ~S for i in range(B.n)):
            continue
        total += math.prod(_weight(B, i, int(g[i])) for i in range(B.n) if S >> i & 1)
    return total


def naive_K(v, U, RR, A, n):
    """K_v(U) straight from its alternating-sum definition."""
    W = ((1 << n) - 1) & ~(1 << v) & ~U
    members = [j for j in range(n) if W >> j & 1]
    total = 0.0
    for size in range(len(members) + 1):
        for T in combinations(members, size):
            tm = sum(1 << j for j in T)
            prod = math.prod(A[j, del_bit(U, j)] for j in T)
            total += (-1) ** size * RR[W & ~tm] * prod
    return total


def _random_B(seed, n, k, scale=1.5):
    return assemble_B(random_tables(np.random.default_rng(seed), n, k, scale))


def test_upward_mobius_base_case(backend):
    B = _random_B(0, 4, 2)
    for i in range(4):
        A = upward_mobius(i, B.parents[i], B.values[i], 4, backend)
        assert A[0] == B.values[i][0]


@pytest.mark.parametrize("n,k", [(4, 1), (5, 2), (6, 5)])
def test_upward_mobius_unit_binomials(n, k, backend):
    A = compute_A(assemble_B(unit_tables(n, k)), backend)
    for s in range(1 << (n - 1)):
        size = bin(s).count("1")
        assert A[0, s] == sum(math.comb(size, c) for c in range(min(k, size) + 1))


@pytest.mark.parametrize("seed,n,k", [(1, 6, 2), (2, 8, 3), (3, 10, 4), (4, 12, 2)])
def test_upward_mobius_naive(seed, n, k):
    B = _random_B(seed, n, k)
    A = compute_A(B)
    i = seed % n
    comp = del_bit(B.parents[i], i)
    for s in range(0, 1 << (n - 1), max(1, (1 << (n - 1)) // 97)):
        want = math.fsum(B.values[i][(comp & ~s) == 0].tolist())
        assert A[i, s] == pytest.approx(want, rel=1e-13, abs=1e-15)


@pytest.mark.parametrize("seed,n,k", [(5, 3, 2), (6, 4, 2), (7, 4, 3), (8, 4, 1)])
def test_RR_and_H_against_definitions(seed, n, k, backend):
    B = _random_B(seed, n, k)
    A = compute_A(B, backend)
    RR, H = compute_RR(A, backend=backend), compute_H(A, backend=backend)
    assert RR[0] == 1.0 and H[0] == 1.0
    for S in range(1 << n):
        assert RR[S] == pytest.approx(naive_RR(B, S), rel=1e-12)
        assert H[S] == pytest.approx(naive_H(B, S), rel=1e-12)
    for j in range(n):
        full = (1 << n) - 1
        assert RR[1 << j] == A[j, del_bit(full & ~(1 << j), j)]


@pytest.mark.parametrize("seed,n,k", [(9, 4, 2), (10, 5, 4), (11, 6, 3)])
def test_K_against_definition(seed, n, k, backend):
    B = _random_B(seed, n, k)
    A = compute_A(B, backend)
    RR = compute_RR(A, backend=backend)
    for v in range(n):
        K = compute_K(v, RR, A, backend=backend)
        assert K[-1] == 1.0
        for u in range(1 << (n - 1)):
            U = engine.ins_bit(u, v)
            assert K[u] == pytest.approx(naive_K(v, U, RR, A, n), rel=1e-11, abs=1e-12)


def test_K_two_nodes_hand_value():
    A = compute_A(assemble_B(unit_tables(2, 1)))
    RR = compute_RR(A)
    K = compute_K(1, RR, A)
    # K_1(empty) = RR({0}) - RR(empty) * A_0(empty) = 2 - 1
    assert K[0] == 1.0
    assert K[1] == 1.0


@pytest.mark.parametrize("seed,n,k", [(12, 5, 2), (13, 7, 6), (14, 9, 3)])
def test_Gamma_naive_superset_sum(seed, n, k):
    B = _random_B(seed, n, k)
    A = compute_A(B)
    RR, H = compute_RR(A), compute_H(A)
    v = seed % n
    K = compute_K(v, RR, A)
    gam = compute_Gamma(v, H, K)
    g = H[engine.sink_masks(v, n)] * K
    idx = np.arange(1 << (n - 1))
    for p in range(0, 1 << (n - 1), 7):
        want = math.fsum(g[(idx & p) == p].tolist())
        assert gam[p] == pytest.approx(want, rel=1e-10, abs=1e-12 * RR[-1])
    full = (1 << (n - 1)) - 1
    assert gam[full] == H[((1 << n) - 1) & ~(1 << v)]
    # the v-side decomposition with B_v reproduces P(f, D)
    at_families = compute_Gamma(v, H, K, B.parents[v])
    assert math.fsum((B.values[v] * at_families).tolist()) == pytest.approx(RR[-1], rel=1e-10)


@pytest.mark.parametrize("n,k", [(2, 1), (3, 1), (3, 2), (4, 2), (4, 3), (5, 2), (5, 4)])
def test_unit_weights_count_dags(n, k):
    res = all_edge_posteriors(assemble_B(unit_tables(n, k)))
    assert res.rr == count_dags(n, k)
    assert res.h == count_dags(n, k)


def test_two_node_posteriors():
    res = all_edge_posteriors(assemble_B(unit_tables(2, 1)))
    assert np.allclose(res.edges, [[0, 1 / 3], [1 / 3, 0]], rtol=0, atol=1e-15)
    assert res.log_evidence == pytest.approx(math.log(3))


def test_three_node_posteriors_eight_of_twentyfive():
    res = all_edge_posteriors(assemble_B(unit_tables(3, 2)))
    off = ~np.eye(3, dtype=bool)
    assert np.all(np.abs(res.edges[off] - 8 / 25) < 1e-12)


def test_constant_feature_is_exactly_one():
    tables = random_tables(np.random.default_rng(15), 5, 3)
    assert feature_posterior(FeatureSpec.constant(5), tables) == 1.0


def test_two_edge_subnetwork_counts():
    f = edge_feature(0, 1, 4) & edge_feature(2, 3, 4)
    dags = _all_dags(4)
    both = int(np.sum((dags[:, 1] & 1 == 1) & ((dags[:, 3] >> 2) & 1 == 1)))
    assert len(dags) == 543
    assert feature_posterior(f, unit_tables(4, 3)) == pytest.approx(both / 543, abs=1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_feature_path_matches_edge_matrix(seed):
    rng = np.random.default_rng(100 + seed)
    n = int(rng.integers(3, 8))
    k = int(rng.integers(1, n))
    tables = random_tables(rng, n, k)
    prior = ["uniform", "order_modular"][seed % 2]
    res = all_edge_posteriors(assemble_B(tables, prior))
    for u in range(n):
        for v in range(n):
            if u != v:
                p = feature_posterior(edge_feature(u, v, n), tables, prior)
                assert p == pytest.approx(res.edges[u, v], abs=1e-9)


def test_feature_joint_reports_log_values():
    tables = random_tables(np.random.default_rng(16), 4, 2)
    res = feature_joint(edge_feature(0, 1, 4), tables)
    assert res.log_evidence == pytest.approx(engine.log_evidence(tables)[0], rel=1e-14)
    assert math.exp(res.log_joint - res.log_evidence) == pytest.approx(res.posterior, rel=1e-12)


def test_identities_hold_on_every_run():
    res = all_edge_posteriors(_random_B(17, 8, 3, scale=4.0))
    assert res.rr_h_relative_gap <= 1e-10
    assert res.sink_gaps.max() <= 1e-9
    assert res.gamma_gaps.max() <= 1e-9


def test_node_scaling_neutral():
    rng = np.random.default_rng(18)
    tables = random_tables(rng, 6, 3)
    base = all_edge_posteriors(assemble_B(tables))
    bumped = [LocalScoreTable(t.node, t.max_indegree, t.parents,
                              t.log_scores + (12.5 if t.node == 2 else 0.0)) for t in tables]
    other = all_edge_posteriors(assemble_B(bumped))
    assert np.allclose(other.edges, base.edges, rtol=1e-10, atol=0)
    assert other.log_evidence == pytest.approx(base.log_evidence + 12.5, rel=1e-13)


def test_threads_bit_identical():
    B = _random_B(19, 9, 4)
    one = all_edge_posteriors(B, threads=1)
    many = all_edge_posteriors(B, threads=4)
    assert np.array_equal(one.edges, many.edges)
    assert one.rr == many.rr and one.h == many.h


@pytest.mark.skipif(len(kernels.available()) < 2, reason="compiled kernels not built")
@pytest.mark.parametrize("seed,n,k", [(20, 5, 2), (21, 7, 6), (22, 8, 3)])
def test_backends_bit_identical(seed, n, k):
    B = _random_B(seed, n, k, scale=5.0)
    a = all_edge_posteriors(B, backend="cython")
    b = all_edge_posteriors(B, backend="python")
    assert np.array_equal(a.edges, b.edges)
    assert (a.rr, a.h) == (b.rr, b.h)


def test_zero_weights_break_down():
    B = Bfunction.from_tables(3, 2, {0: {0: 1.0}, 1: {0: 1.0}, 2: {}})
    with pytest.raises(NumericalBreakdown):
        all_edge_posteriors(B)


def test_size_cap():
    with pytest.raises(CapExceeded):
        engine.check_size(26)


def test_table_dump(tmp_path):
    B = _random_B(23, 4, 2)
    res = all_edge_posteriors(B, dump_prefix=str(tmp_path / "run"))
    n, k, tid, values = engine.read_table_dump(tmp_path / "run.rr.bin")
    assert (n, k, tid, len(values)) == (4, 2, 0, 16)
    assert values[-1] == res.rr
    n, k, tid, values = engine.read_table_dump(tmp_path / "run.h.bin")
    assert tid == 1 and values[-1] == res.h


def test_nonnegative_tables():
    A = compute_A(_random_B(24, 7, 3))
    assert A.min() >= 0
    assert np.all(np.diff(A[0][[0, 1, 3, 7, 15]]) >= 0)
    assert compute_RR(A).min() >= -1e-12
    assert compute_H(A).min() >= -1e-12


@pytest.mark.skipif("cython" not in kernels.available(), reason="compiled kernels not built")
def test_H_layouts_bit_identical():
    A = compute_A(_random_B(25, 9, 4, scale=3.0))
    order, starts = engine.popcount_layers(9)
    kern = kernels.get("cython")
    wide = kern.h_table(A, 9, order, starts, 1, True)
    rows = kern.h_table(A, 9, order, starts, 1, False)
    assert np.array_equal(wide, rows)
    assert np.array_equal(wide, compute_H(A, backend="python"))
