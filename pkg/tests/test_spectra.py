import math

import numpy as np
import pytest

from distalf3.cayley import enumerate_group, named_generators, walk_operator
from distalf3.spectra import (SCAN_HEADER, WalkOperator, cheeger_sweep, complete_operator,
                              cycle_operator, dense_spectrum, disjoint_union, gap_scan,
                              iterative_gap, min_gap)


def exhaustive_cheeger(op):
    n = op.size
    best = math.inf
    for mask in range(1, 2**n - 1):
        inside = np.array([(mask >> i) & 1 for i in range(n)], dtype=bool)
        cut = sum(int((inside & ~inside[row]).sum()) for row in op.moves)
        best = min(best, cut / (op.degree * min(inside.sum(), n - inside.sum())))
    return best


def test_complete_graph_k4():
    rep = dense_spectrum(complete_operator(4))
    assert rep.lambda2 == pytest.approx(-1 / 3, abs=1e-12)
    assert rep.gap == pytest.approx(4 / 3, abs=1e-12)
    assert rep.lambda_min == pytest.approx(-1 / 3, abs=1e-12)


def test_single_vertex_degenerate():
    op = WalkOperator(np.zeros((3, 1), dtype=np.int64))
    for rep in (dense_spectrum(op), iterative_gap(op)):
        assert rep.degenerate and rep.gap == 0.0
        assert rep.to_json()["lambda2"] is None


@pytest.mark.parametrize("n", [8, 64])
def test_cycle_closed_form(n):
    exact = math.cos(2 * math.pi / n)
    assert dense_spectrum(cycle_operator(n)).lambda2 == pytest.approx(exact, abs=1e-12)
    rep = iterative_gap(cycle_operator(n), tol=1e-10)
    assert abs(rep.lambda2 - exact) < 1e-8
    assert rep.residual_norm <= 1e-10


def test_iterative_matches_dense_on_cayley():
    op = walk_operator(enumerate_group(5, named_generators("ab")))
    d, it = dense_spectrum(op), iterative_gap(op, seed=3)
    assert abs(d.lambda2 - it.lambda2) < 1e-8


def test_disconnected_has_zero_gap():
    op = disjoint_union(cycle_operator(8), cycle_operator(8))
    it = iterative_gap(op)
    assert it.lambda2 == pytest.approx(1.0, abs=1e-12)
    assert not it.has_gap
    d = dense_spectrum(op)
    assert not d.has_gap
    assert abs(d.vector.sum()) < 1e-10
    count, _ = op.components()
    assert count == 2


def test_iterative_is_seed_deterministic():
    op = walk_operator(enumerate_group(7, named_generators("abc")))
    r1, r2 = iterative_gap(op, seed=11), iterative_gap(op, seed=11)
    assert r1.lambda2 == r2.lambda2 and r1.iterations == r2.iterations


def test_iterative_rejects_non_symmetric():
    i = np.arange(5)
    op = WalkOperator(np.stack([(i + 1) % 5]))
    assert not op.self_adjoint
    with pytest.raises(ValueError):
        iterative_gap(op)


def test_stochastic_and_self_adjoint():
    rng = np.random.default_rng(1)
    for op in (cycle_operator(9), complete_operator(6),
               walk_operator(enumerate_group(11, named_generators("abc")))):
        assert op.self_adjoint
        assert np.allclose(op.apply(np.ones(op.size)), 1.0, atol=1e-12, rtol=0)
        f, g = rng.standard_normal((2, op.size))
        assert abs(op.apply(f) @ g - f @ op.apply(g)) < 1e-12 * op.size


def test_cheeger_k4_matches_exhaustive():
    op = complete_operator(4)
    assert exhaustive_cheeger(op) == pytest.approx(2 / 3)
    sw = cheeger_sweep(op, dense_spectrum(op).vector)
    assert sw.boundary_ratio == pytest.approx(2 / 3, abs=1e-12)
    assert sw.best_set_size == 2


def test_cheeger_disconnected():
    op = disjoint_union(cycle_operator(8), cycle_operator(8))
    sw = cheeger_sweep(op, dense_spectrum(op).vector)
    assert sw.boundary_ratio == 0.0
    assert sw.best_set_size == 8


@pytest.mark.parametrize("op", [cycle_operator(10), complete_operator(5),
                                disjoint_union(cycle_operator(4), cycle_operator(5))])
def test_sweep_not_below_exhaustive(op):
    rep = dense_spectrum(op)
    sw = cheeger_sweep(op, rep.vector)
    h = exhaustive_cheeger(op)
    assert sw.boundary_ratio >= h - 1e-12
    assert rep.gap / 2 <= h + 1e-9


@pytest.mark.parametrize("p", [5, 7, 11, 13])
def test_cheeger_inequalities_on_cayley(p):
    op = walk_operator(enumerate_group(p, named_generators("ab")))
    rep = dense_spectrum(op)
    sw = cheeger_sweep(op, rep.vector)
    assert rep.gap / 2 <= sw.boundary_ratio + 1e-9
    assert sw.boundary_ratio <= math.sqrt(2 * rep.gap) + 1e-9


def test_gap_zero_iff_intransitive():
    ops = [cycle_operator(12), disjoint_union(cycle_operator(6), cycle_operator(6)),
           walk_operator(enumerate_group(5, named_generators("ab")))]
    for op in ops:
        count, _ = op.components()
        assert dense_spectrum(op).has_gap == (count == 1)
        assert iterative_gap(op).has_gap == (count == 1)


def test_gap_scan_rows():
    rows = gap_scan([5, 13, 17], "ab")
    assert [r.p for r in rows] == [5, 13, 17]
    assert all(r.generated and r.gap > 0 for r in rows)
    assert rows[2].method == "iterative"
    assert min_gap(rows) == min(r.gap for r in rows)
    assert gap_scan([], "ab") == []


def test_gap_scan_flags_non_generating():
    rows = gap_scan([3], "a")
    assert rows[0].flag == "not-generated" and rows[0].gap is None
    assert rows[0].csv_fields() == ["3", "3", "3", "false", "", "", "", "not-generated"]
    assert len(rows[0].csv_fields()) == len(SCAN_HEADER)


def test_gap_scan_deterministic():
    a = [r.csv_fields() for r in gap_scan([5, 7, 11, 13], "abc", seed=4)]
    b = [r.csv_fields() for r in gap_scan([5, 7, 11, 13], "abc", seed=4)]
    assert a == b


def test_gap_scan_workers_match_dense():
    a = [r.csv_fields() for r in gap_scan([5, 7, 11], "abc")]
    b = [r.csv_fields() for r in gap_scan([5, 7, 11], "abc", workers=2)]
    assert a == b
