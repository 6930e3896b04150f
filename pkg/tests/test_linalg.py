from hypothesis import given, strategies as st

from qpb.linalg import (
    Echelon,
    LinMap,
    TrackedEchelon,
    bareiss_rank,
    kernel,
    rank,
    same_span,
    solve,
    tensor_maps,
    vadd,
    vclean,
    vscale,
)
from qpb.scalar import ONE, as_scalar, q

from conftest import small_rationals

vectors = st.dictionaries(st.integers(0, 4), small_rationals.map(as_scalar), max_size=5).map(vclean)
families = st.lists(vectors, max_size=6)


def test_q_dependent_rank():
    # rank drops only at the specialization q = 1, never generically
    rows = [{0: ONE, 1: q}, {0: ONE, 1: ONE}]
    assert rank(rows) == 2 == bareiss_rank(rows)


@given(families)
def test_rref_matches_bareiss(vecs):
    assert rank(vecs) == bareiss_rank(vecs)


@given(families)
def test_kernel_is_kernel(vecs):
    cols = dict(enumerate(vecs))
    ker = kernel(cols)
    assert len(ker) + rank(vecs) == len(vecs)
    for k in ker:
        acc = {}
        for j, c in k.items():
            acc = vadd(acc, cols[j], c)
        assert acc == {}


@given(families, vectors)
def test_solve_round_trip(vecs, target):
    cols = dict(enumerate(vecs))
    sol = solve(cols, target)
    inside = Echelon().extend(vecs).contains(target)
    assert (sol is not None) == inside
    if sol is not None:
        acc = {}
        for j, c in sol.items():
            acc = vadd(acc, cols[j], c)
        assert acc == vclean(target)


@given(families)
def test_tracked_echelon_labels(vecs):
    te = TrackedEchelon()
    for i, v in enumerate(vecs):
        rel = te.insert(v, i)
        if rel is not None:
            assert rel[i] == 1
            acc = {}
            for j, c in rel.items():
                acc = vadd(acc, vecs[j], c)
            assert acc == {}
    assert te.rank == rank(vecs)


@given(families, families)
def test_same_span_symmetric(a, b):
    assert same_span(a, b) == same_span(b, a)
    assert same_span(a, a + [vscale(v, 3) for v in a])


def test_linmap_algebra():
    f = LinMap({(0,): {(1,): ONE}, (1,): {(0,): ONE}}, [(0,), (1,)])
    i = LinMap.identity([(0,), (1,)])
    assert f @ f == i
    assert (f - f).is_zero()
    assert (i - f).rank() == 1
    assert tensor_maps(f, i).rank() == 4
    assert f.difference_witness(i) is not None
