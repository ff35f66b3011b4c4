import itertools
import math

import numpy as np
import pytest

from nmfchange.metrics import adjacency_overlap, evaluate, hausdorff, largest_segment, tp_fp


def brute_hausdorff_raw(q, qh):
    worst_q = 0
    for a in q:
        best = None
        for b in qh:
            d = abs(a - b)
            best = d if best is None or d < best else best
        worst_q = max(worst_q, best)
    worst_qh = 0
    for b in qh:
        best = None
        for a in q:
            d = abs(a - b)
            best = d if best is None or d < best else best
        worst_qh = max(worst_qh, best)
    return max(worst_q, worst_qh)


def test_identity_zero():
    assert hausdorff([100, 200], [100, 200], 300) == 0.0


def test_hand_value():
    assert largest_segment([100], 200) == 100
    assert hausdorff([100], [110], 200) == pytest.approx(0.1)


def test_empty_undefined():
    assert math.isnan(hausdorff([], [5], 10))
    assert math.isnan(hausdorff([5], [], 10))
    assert not evaluate([100], [], 200).hausdorff_defined


def test_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        T = int(rng.integers(20, 1000))
        q = sorted(set(rng.integers(1, T, rng.integers(1, 6)).tolist()))
        qh = sorted(set(rng.integers(1, T, rng.integers(1, 6)).tolist()))
        expected = brute_hausdorff_raw(q, qh) / largest_segment(q, T)
        assert hausdorff(q, qh, T) == expected
        # symmetry of the unnormalized distance
        assert hausdorff(q, qh, T) * largest_segment(q, T) == pytest.approx(
            hausdorff(qh, q, T) * largest_segment(qh, T), rel=1e-12)


@pytest.mark.parametrize("truth,det,w,expected", [
    ([100], [100], 10, (1, 0)),
    ([100], [85], 10, (0, 1)),
    ([100], [95, 105], 10, (1, 1)),
    ([100, 110], [105], 10, (1, 0)),
    ([], [5, 6], 1, (0, 2)),
    ([100], [], 10, (0, 0)),
])
def test_tp_fp_cases(truth, det, w, expected):
    assert tp_fp(truth, det, w) == expected


def max_matching(truth, det, w):
    """Brute force: largest one-to-one matching size."""
    best = 0
    for k in range(min(len(truth), len(det)), 0, -1):
        for ts in itertools.combinations(range(len(truth)), k):
            for ds in itertools.permutations(range(len(det)), k):
                if all(abs(truth[t] - det[d]) <= w for t, d in zip(ts, ds)):
                    return k
    return best


def test_tp_fp_invariants():
    rng = np.random.default_rng(1)
    for _ in range(300):
        truth = sorted(rng.choice(100, rng.integers(0, 4), replace=False).tolist())
        det = sorted(rng.choice(100, rng.integers(0, 4), replace=False).tolist())
        tp, fp = tp_fp(truth, det, 10)
        assert tp <= min(len(truth), len(det))
        assert fp == len(det) - tp
        assert tp <= max_matching(truth, det, 10)


def test_evaluate_report():
    r = evaluate([100], [101, 150], 200)
    assert (r.tp_10, r.fp_10, r.tp_1, r.fp_1) == (1, 1, 1, 1)
    assert r.n_s == 100
    assert r.hausdorff == pytest.approx(0.5)


def test_adjacency_overlap():
    A = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]])
    B = np.array([[0, 1, 1], [1, 0, 0], [1, 0, 0]])
    assert adjacency_overlap(A, A) == 1.0
    assert adjacency_overlap(A, B) == pytest.approx(4 / 6)
