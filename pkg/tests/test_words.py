
import pytest
from hypothesis import given, settings, strategies as st

from distalf3.sl2 import IDENTITY, IntMat2
from distalf3.words import (Word, _decode, count_reduced, enumerate_reduced, evaluate,
                            freeness_scan, iter_evaluated, reduce)


def W(letters, rank=3):
    return Word.from_letters(letters, rank)


def test_reduce_examples():
    assert reduce(W([(0, 1), (0, -1)])) == W([])
    assert reduce(W([])) == W([])
    assert reduce(W([(0, 1), (1, 1), (1, -1), (0, 1)])) == W([(0, 1), (0, 1)])


def test_evaluate_examples(gens):
    imgs = [gens["a"], gens["b"], gens["c"]]
    assert evaluate(W([]), imgs) == IDENTITY
    assert evaluate(W([(0, 1), (1, 1)]), imgs).rows() == [[17, 4], [4, 1]]
    assert evaluate(W([(0, 1), (0, -1), (1, 1)]), imgs) == gens["b"]


@pytest.mark.parametrize("rank, length", [(r, L) for r in (1, 2, 3) for L in range(1, 9) if r < 3 or L <= 6])
def test_enumeration_counts(rank, length):
    words = list(enumerate_reduced(rank, length))
    assert len(words) == 2 * rank * (2 * rank - 1) ** (length - 1) == count_reduced(rank, length)
    assert len(set(words)) == len(words)
    assert all(w.is_reduced() and len(w) == length for w in words)


def test_enumeration_small_counts():
    assert len(list(enumerate_reduced(3, 1))) == 6
    assert len(list(enumerate_reduced(3, 2))) == 30
    assert len(list(enumerate_reduced(2, 3))) == 36


def test_enumeration_rank3_long_counts():
    for length in (7, 8):
        n = sum(1 for _ in enumerate_reduced(3, length))
        assert n == 6 * 5 ** (length - 1)


def test_enumeration_order_and_decode():
    words = list(enumerate_reduced(2, 4))
    codes = [w.codes() for w in words]
    assert codes == sorted(codes)
    assert [_decode(2, 4, i) for i in range(len(words))] == words


def test_vectorized_layers_match_exact_evaluation(gens):
    imgs = [gens["a"], gens["b"], gens["c"]]
    for length, start, mats in iter_evaluated(imgs, 4):
        for k in range(mats.shape[0]):
            w = _decode(3, length, start + k)
            assert list(int(v) for v in mats[k]) == list(evaluate(w, imgs).entries)


def test_object_fallback_on_large_entries():
    big = IntMat2(2**40 + 1, 2**40, 1, 1)
    imgs = [big, IntMat2(1, 0, 3, 1)]
    for length, start, mats in iter_evaluated(imgs, 4):
        for k in range(mats.shape[0]):
            w = _decode(2, length, start + k)
            assert [int(v) for v in mats[k]] == list(evaluate(w, imgs).entries)


def test_freeness_duplicate_generator(gens):
    rep = freeness_scan([gens["a"], gens["a"]], 2)
    assert rep.witness == Word(((0, 1), (1, -1)), 2)
    assert rep.words_checked == 4 + 12
    assert evaluate(rep.witness, [gens["a"], gens["a"]]) == IDENTITY


def test_freeness_ab(gens):
    rep = freeness_scan([gens["a"], gens["b"]], 10)
    assert rep.witness is None
    assert rep.words_checked == sum(count_reduced(2, L) for L in range(1, 11))


def test_freeness_finds_commutator_relation():
    # x and a commuting matrix: x x' x^-1 x'^-1 = 1
    x = IntMat2(1, 2, 0, 1)
    x2 = IntMat2(1, 6, 0, 1)
    rep = freeness_scan([x, x2], 6)
    assert rep.witness is not None
    assert evaluate(rep.witness, [x, x2]) == IDENTITY
    # x^3 = x2 gives a length-4 relation, which precedes any commutator
    assert len(rep.witness) == 4


def test_freeness_monotone(gens):
    imgs = [IntMat2(1, 2, 0, 1), IntMat2(1, 6, 0, 1)]
    first = freeness_scan(imgs, 4).witness
    for L in (5, 6, 7):
        assert freeness_scan(imgs, L).witness == first


def test_freeness_workers_agree(gens):
    imgs = [gens["a"], gens["a"]]
    assert freeness_scan(imgs, 5, workers=2).witness == freeness_scan(imgs, 5).witness


letters = st.lists(st.tuples(st.integers(0, 2), st.sampled_from([1, -1])), max_size=30)


@settings(max_examples=150, deadline=None)
@given(letters, letters)
def test_reduction_soundness(gens, l1, l2):
    imgs = [gens["a"], gens["b"], gens["c"]]
    w1, w2 = W(l1), W(l2)
    r = reduce(w1)
    assert r.is_reduced() and len(r) <= len(w1)
    assert reduce(r) == r
    assert evaluate(r, imgs) == evaluate(w1, imgs)
    assert evaluate(reduce(w1 * w2), imgs) == evaluate(w1, imgs) @ evaluate(w2, imgs)
