import itertools

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from shapecat.dataset_io import ClassLabel
from shapecat.errors import EmptyCounts, EmptyInput, LengthMismatch
from shapecat.metrics import ConfusionCounts, align_clusters, confusion, score

A, P = ClassLabel.ANIMAL, ClassLabel.PLANT
counts = st.builds(ConfusionCounts, *(st.integers(0, 500) for _ in range(4)))


def test_perfect_prediction():
    truth = [A] * 10 + [P] * 5
    assert confusion(truth, truth, A) == ConfusionCounts(10, 0, 0, 5)


def test_all_positive_predictor():
    truth = [A] * 3 + [P] * 7
    assert confusion([A] * 10, truth, A) == ConfusionCounts(3, 7, 0, 0)


def test_five_pairs():
    # pairs: (P,P) tp, (P,N) fp, (N,N) tn, (N,P) fn, (P,P) tp
    assert confusion([A, A, P, P, A], [A, P, P, A, A], A) == ConfusionCounts(2, 1, 1, 1)


def test_confusion_errors():
    with pytest.raises(LengthMismatch):
        confusion([A], [A, P])
    with pytest.raises(EmptyInput):
        confusion([], [])


def test_score_arithmetic():
    s = score(ConfusionCounts(5, 2, 3, 10))
    # P = 5/7, R = 5/8, f1 = 2*5/(2*5+2+3) = 10/15, acc = 15/20
    assert s.precision == pytest.approx(500 / 7)
    assert s.recall == pytest.approx(62.5)
    assert s.f1 == pytest.approx(200 / 3)
    assert s.accuracy == pytest.approx(75.0)
    assert s.csv_row("v") == ["v", "71.4", "62.5", "66.7", "75.0"]


def test_score_perfect_and_degenerate():
    s = score(ConfusionCounts(10, 0, 0, 5))
    assert (s.precision, s.recall, s.f1, s.accuracy) == (100, 100, 100, 100)
    s = score(ConfusionCounts(0, 0, 4, 6))
    assert (s.precision, s.recall, s.f1, s.accuracy) == (0, 0, 0, 60)
    with pytest.raises(EmptyCounts):
        score(ConfusionCounts(0, 0, 0, 0))


@given(counts, st.integers(1, 50))
def test_score_scale_invariant(c, k):
    assume(c.total > 0)
    a = score(c)
    b = score(ConfusionCounts(c.tp * k, c.fp * k, c.fn * k, c.tn * k))
    for x, y in zip((a.precision, a.recall, a.f1, a.accuracy), (b.precision, b.recall, b.f1, b.accuracy)):
        assert x == pytest.approx(y, rel=1e-12, abs=1e-12)


@given(counts)
def test_score_ranges_and_harmonic_mean(c):
    assume(c.total > 0)
    s = score(c)
    for v in (s.precision, s.recall, s.f1, s.accuracy):
        assert 0 <= v <= 100
    if s.precision > 0 and s.recall > 0:
        assert min(s.precision, s.recall) - 1e-9 <= s.f1 <= max(s.precision, s.recall) + 1e-9


@given(st.lists(st.tuples(st.sampled_from([A, P]), st.sampled_from([A, P])), min_size=1, max_size=40))
def test_positive_swap(pairs):
    pred, truth = zip(*pairs)
    a = confusion(pred, truth, A)
    b = confusion(pred, truth, P)
    assert (b.tp, b.fp, b.fn, b.tn) == (a.tn, a.fn, a.fp, a.tp)
    assert score(a).accuracy == score(b).accuracy


def test_align_perfect():
    truth = [A] * 6 + [P] * 4
    ids = [0] * 6 + [1] * 4
    mapping, c = align_clusters(ids, truth, A)
    assert mapping == {0: A, 1: P} and score(c).f1 == 100
    mapping, c2 = align_clusters([1 - i for i in ids], truth, A)
    assert mapping == {0: P, 1: A} and c2 == c


def test_align_tie():
    # enumerate: {0:A} -> tp1 fp1 fn1 tn1; {0:P} -> same counts, tie goes to {0: positive}
    mapping, c = align_clusters([0, 0, 1, 1], [A, P, A, P], A)
    assert mapping == {0: A, 1: P}
    s = score(c)
    assert s.accuracy == 50 and s.f1 == 50


@given(st.lists(st.tuples(st.integers(0, 1), st.sampled_from([A, P])), min_size=1, max_size=30))
def test_align_permutation_invariant(pairs):
    ids, truth = zip(*pairs)
    m1, c1 = align_clusters(list(ids), list(truth), A)
    m2, c2 = align_clusters([1 - i for i in ids], list(truth), A)
    s1, s2 = score(c1), score(c2)
    assert (s1.f1, s1.accuracy) == (s2.f1, s2.accuracy)
    # brute force: best (f1, accuracy) over both bijections
    best = max(
        (score(confusion([m[i] for i in ids], truth, A)).f1, score(confusion([m[i] for i in ids], truth, A)).accuracy)
        for m in ({0: a, 1: b} for a, b in itertools.permutations([A, P]))
    )
    assert (s1.f1, s1.accuracy) == best


def test_align_length_mismatch():
    with pytest.raises(LengthMismatch):
        align_clusters([0, 1], [A])
