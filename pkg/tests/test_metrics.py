import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qepitope.errors import DegenerateProblemError, ShapeError, SizeError
from qepitope.metrics import (
    REFERENCE_QSVM,
    REFERENCE_ROWS,
    REFERENCE_VQC,
    ConfusionCounts,
    EvalReport,
    accuracy,
    confusion,
    evaluate,
    mcc,
    roc_auc,
    roc_auc_trapezoid,
)

from oracles import auc_bruteforce, mcc_direct


def random_instance(rng):
    t = int(rng.integers(2, 40))
    y = rng.choice([-1, 1], t)
    y[0], y[1] = 1, -1
    # coarse grid forces plenty of ties
    s = rng.integers(0, 6, t) / 5.0 if rng.random() < 0.5 else rng.normal(size=t)
    return y, s


class TestConfusion:
    def test_all_right(self):
        assert confusion([1, -1], [1, -1]) == ConfusionCounts(1, 0, 1, 0)

    def test_all_wrong(self):
        assert confusion([1, -1], [-1, 1]) == ConfusionCounts(0, 1, 0, 1)

    def test_empty(self):
        with pytest.raises(SizeError):
            confusion([], [])

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            confusion([1, -1], [1])

    def test_bad_values(self):
        with pytest.raises(ValueError):
            confusion([1, 0], [1, 1])


class TestAccuracy:
    def test_perfect(self):
        assert accuracy(ConfusionCounts(3, 0, 4, 0)) == 1.0

    def test_seventy_percent(self):
        assert accuracy(ConfusionCounts(tp=7, fp=3, tn=0, fn=0)) == pytest.approx(0.7, abs=1e-15)

    def test_zero_total(self):
        with pytest.raises(SizeError):
            accuracy(ConfusionCounts(0, 0, 0, 0))


class TestMCC:
    def test_perfect(self):
        assert mcc(ConfusionCounts(5, 0, 5, 0)) == 1.0

    def test_inverted(self):
        assert mcc(ConfusionCounts(0, 5, 0, 5)) == -1.0

    def test_worked_example(self):
        got = mcc(ConfusionCounts(tp=4, fp=1, tn=3, fn=2))
        assert got == pytest.approx(10 / math.sqrt(600), abs=1e-15)
        assert got == pytest.approx(0.4082, abs=5e-5)

    def test_every_zero_denominator_case(self):
        # enumerate all small tables; any zero margin must give exactly 0
        seen_zero = 0
        for tp in range(4):
            for fp in range(4):
                for tn in range(4):
                    for fn in range(4):
                        c = ConfusionCounts(tp, fp, tn, fn)
                        if c.total == 0:
                            continue
                        want = mcc_direct(tp, fp, tn, fn)
                        assert mcc(c) == pytest.approx(want, abs=1e-15)
                        if (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn) == 0:
                            seen_zero += 1
                            assert mcc(c) == 0.0
        assert seen_zero > 0

    def test_zero_total(self):
        with pytest.raises(SizeError):
            mcc(ConfusionCounts(0, 0, 0, 0))

    def test_class_swap_symmetry(self, rng):
        for _ in range(100):
            c = ConfusionCounts(*[int(v) for v in rng.integers(0, 20, 4)])
            if c.total:
                assert mcc(c.swapped()) == pytest.approx(mcc(c), abs=1e-15)


class TestAUC:
    def test_perfect(self):
        assert roc_auc([1, 1, -1, -1], [0.9, 0.8, 0.2, 0.1]) == 1.0

    def test_all_tied(self):
        assert roc_auc([1, -1, 1, -1], [0.3] * 4) == 0.5

    def test_worked_example(self):
        assert roc_auc([1, 1, -1], [0.9, 0.4, 0.6]) == 0.5

    def test_single_class(self):
        with pytest.raises(DegenerateProblemError):
            roc_auc([1, 1], [0.1, 0.2])

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            roc_auc([1, -1], [0.1])

    def test_matches_bruteforce_exactly(self, rng):
        for _ in range(200):
            y, s = random_instance(rng)
            assert roc_auc(y, s) == auc_bruteforce(y.tolist(), s.tolist())

    def test_matches_trapezoid(self, rng):
        for _ in range(200):
            y, s = random_instance(rng)
            assert abs(roc_auc(y, s) - roc_auc_trapezoid(y, s)) <= 1e-12

    def test_negated_scores(self, rng):
        for _ in range(50):
            y, s = random_instance(rng)
            assert abs(roc_auc(y, s) + roc_auc(y, -s) - 1) <= 1e-12

    def test_monotone_transform(self, rng):
        for _ in range(50):
            y, s = random_instance(rng)
            assert roc_auc(y, np.exp(3 * s) - 7) == roc_auc(y, s)


class TestReport:
    def test_evaluate(self):
        r = evaluate([1, -1, 1, -1], [1, -1, -1, -1], [0.9, 0.1, 0.4, 0.2], "qsvm")
        assert r.acc == 0.75 and r.auc == 1.0
        assert r.confusion == ConfusionCounts(1, 0, 2, 1)
        assert r.mcc == pytest.approx(mcc_direct(1, 0, 2, 1))

    def test_round_trip(self):
        r = evaluate([1, -1, 1], [1, 1, 1], [0.3, 0.2, 0.1], "vqc")
        assert EvalReport.from_dict(r.to_dict()) == r

    def test_reference_constants(self):
        assert REFERENCE_QSVM == {"acc": 0.70, "auc": 0.71, "mcc": 0.42}
        assert REFERENCE_VQC == {"acc": 0.73, "auc": 0.703, "mcc": 0.148}
        assert len(REFERENCE_ROWS) == 11
        assert REFERENCE_ROWS[-2][2:] == ("70%", "0.71", "0.42")
        assert REFERENCE_ROWS[-1][2:] == ("73%", "0.703", "0.148")


@settings(max_examples=100, deadline=None)
@given(
    pairs=st.lists(
        st.tuples(st.sampled_from([-1, 1]), st.integers(-5, 5)), min_size=2, max_size=40
    )
)
def test_auc_oracle_property(pairs):
    y = [p[0] for p in pairs]
    s = [float(p[1]) for p in pairs]
    if len(set(y)) < 2:
        with pytest.raises(DegenerateProblemError):
            roc_auc(y, s)
        return
    a = roc_auc(y, s)
    assert a == auc_bruteforce(y, s)
    assert 0.0 <= a <= 1.0


@settings(max_examples=100, deadline=None)
@given(
    y=st.lists(st.sampled_from([-1, 1]), min_size=1, max_size=50),
    data=st.data(),
)
def test_metric_ranges(y, data):
    p = data.draw(st.lists(st.sampled_from([-1, 1]), min_size=len(y), max_size=len(y)))
    c = confusion(y, p)
    assert c.total == len(y)
    assert 0.0 <= accuracy(c) <= 1.0
    assert -1.0 <= mcc(c) <= 1.0
