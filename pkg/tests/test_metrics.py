from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fedsim.errors import ShapeError
from fedsim.metrics import ConfusionMatrix, confusion, evaluate, report


def test_perfect_tally():
    assert confusion([0.9, 0.1], [1, 0]) == ConfusionMatrix(tp=1, fp=0, tn=1, fn=0)


def test_threshold_is_inclusive():
    assert confusion([0.5], [0]).fp == 1


def test_hand_tally():
    cm = confusion([0.6, 0.4, 0.7, 0.2], [1, 1, 0, 0])
    assert (cm.tp, cm.fn, cm.fp, cm.tn) == (1, 1, 1, 1)


def test_length_mismatch():
    with pytest.raises(ShapeError):
        confusion([0.1, 0.2], [1])


def test_report_balanced():
    r = report(ConfusionMatrix(1, 1, 1, 1))
    assert (r.accuracy, r.precision, r.recall, r.f1) == (0.5, 0.5, 0.5, 0.5)
    assert r.degenerate == ()


def test_report_perfect():
    r = evaluate([0.9, 0.8, 0.1], [1, 1, 0])
    assert (r.accuracy, r.precision, r.recall, r.f1) == (1.0, 1.0, 1.0, 1.0)


def test_report_no_positive_predictions():
    r = report(ConfusionMatrix(tp=0, fp=0, tn=3, fn=2))
    assert r.precision == 0.0 and r.recall == 0.0 and r.f1 == 0.0
    assert "precision" in r.degenerate and "f1" in r.degenerate


def test_report_empty():
    with pytest.raises(ValueError):
        report(ConfusionMatrix(0, 0, 0, 0))


samples = st.lists(st.tuples(st.floats(0, 1), st.integers(0, 1)), min_size=1, max_size=60)


@given(samples, st.randoms())
def test_permutation_invariant(pairs, rnd):
    shuffled = pairs[:]
    rnd.shuffle(shuffled)
    a = evaluate([p for p, _ in pairs], [y for _, y in pairs])
    b = evaluate([p for p, _ in shuffled], [y for _, y in shuffled])
    assert a == b


@given(samples)
def test_f1_between_precision_and_recall(pairs):
    r = evaluate([p for p, _ in pairs], [y for _, y in pairs])
    if not r.degenerate:
        assert min(r.precision, r.recall) - 1e-12 <= r.f1 <= max(r.precision, r.recall) + 1e-12


@given(samples)
def test_accuracy_is_integer_ratio(pairs):
    p = np.array([a for a, _ in pairs])
    y = np.array([b for _, b in pairs])
    cm = confusion(p, y)
    assert cm.total == len(pairs)
    acc = report(cm).accuracy
    assert acc == (cm.tp + cm.tn) / cm.total
    assert Fraction(acc).limit_denominator(cm.total) == Fraction(cm.tp + cm.tn, cm.total)
