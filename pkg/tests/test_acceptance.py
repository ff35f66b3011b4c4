"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Criteria 1-4 run the real detector on simulated data at desk scale and take
tens of minutes on a single core; ``NMFCHANGE_NUM_THREADS`` spreads the
restarts over more workers without changing any result.
"""

import math
import statistics

import numpy as np
import pytest

from nmfchange import (
    DetectorConfig, adjacency_overlap, cluster_cut, consensus, detect, evaluate, hausdorff,
    loss_of, result_document, shift_nonneg, simulate, update_step, welch_test,
)
from nmfchange.dataio import dumps
from nmfchange.metrics import largest_segment
from nmfchange.nmf import FitSettings
from nmfchange.segmentation import SearchWindow, binary_search_candidate
from nmfchange.simlab import CovarianceSpec, block_labels, build_sigma, true_adjacency

SEEDS = range(10)


def desk_runs(sim_id, p):
    out = []
    for seed in SEEDS:
        Y, truth, _ = simulate(sim_id, seed=seed, p=p)
        res = detect(Y, DetectorConfig.desk(seed=seed))
        out.append((truth, res.change_points, Y.shape[0]))
        print(f"  sim {sim_id} seed {seed}: truth {truth} candidates {res.candidates.points} "
              f"confirmed {res.change_points}")
    return out


@pytest.mark.slow
def test_c1_single_change_recovered(report):
    runs = desk_runs(2, p=80)
    hits = sum(len(cp) == 1 and 90 <= cp[0] <= 110 for _, cp, _ in runs)
    mean_fp = np.mean([evaluate(t, cp, T).fp_10 for t, cp, T in runs])
    ok = hits >= 8 and mean_fp <= 0.2
    report(1, ok, f"one point in [90,110] in {hits}/10 (need >= 8), mean FP(+-10) {mean_fp:.2f} "
                  "(need <= 0.2)")
    assert ok


@pytest.mark.slow
def test_c2_no_change_few_false_alarms(report):
    runs = desk_runs(1, p=80)
    mean_count = np.mean([len(cp) for _, cp, _ in runs])
    ok = mean_count <= 0.2
    report(2, ok, f"mean confirmed count {mean_count:.2f} (need <= 0.2)")
    assert ok


@pytest.mark.slow
def test_c3_aba_both_changes(report):
    runs = desk_runs(5, p=60)
    both = sum(evaluate(t, cp, T).tp_10 == 2 for t, cp, T in runs)
    ok = both >= 7
    report(3, ok, f"both changes within +-10 in {both}/10 (need >= 7)")
    assert ok


@pytest.mark.slow
def test_c4_network_recovery(report):
    p, T, k0 = 80, 100, 2
    labels = block_labels(p, k0)
    L = np.linalg.cholesky(build_sigma(CovarianceSpec(tuple(labels), 1)))
    A_true = true_adjacency(labels)
    overlaps = []
    for seed in SEEDS:
        rng = np.random.default_rng(seed)
        Y, _ = shift_nonneg(rng.standard_normal((T, p)) @ L.T)
        C = consensus(Y, k0, "kl", n_run=20, seed=seed)
        _, A = cluster_cut(C, k0)
        overlaps.append(adjacency_overlap(A, A_true))
    mean = float(np.mean(overlaps))
    ok = mean >= 0.95
    report(4, ok, f"mean off-diagonal overlap {100 * mean:.2f}% (need >= 95%)")
    assert ok


def test_c5_monotone_updates(report):
    rng = np.random.default_rng(2024)
    violations = 0
    for i in range(100):
        n, m = rng.integers(3, 40, size=2)
        r = int(rng.integers(1, min(n, m)))
        kind = ("euclidean", "kl")[i % 2]
        X = rng.random((n, m)) * rng.choice([1.0, 10.0, 1e3])
        X[rng.random((n, m)) < 0.1] = 0.0
        W, H = rng.random((n, r)) + 0.01, rng.random((r, m)) + 0.01
        prev = loss_of(X, W, H, kind)
        for _ in range(200):
            W, H = update_step(X, W, H, kind)
            cur = loss_of(X, W, H, kind)
            violations += cur > prev + 1e-9 * abs(prev)
            prev = cur
    ok = violations == 0
    report(5, ok, f"{violations} increases over 100 instances x 200 steps (need 0)")
    assert ok


def test_c6_search_fit_bound(report):
    import nmfchange.segmentation as seg

    class Fit:
        loss = 0.0

    calls = []

    def counting_fit(block, r, kind, settings, n_jobs=1):
        calls.append(block.shape[0])
        f = Fit()
        f.loss = float(np.random.default_rng(settings.seed).random())
        return f

    rng = np.random.default_rng(7)
    orig = seg.fit_best
    seg.fit_best = counting_fit
    violations = checked = total = 0
    try:
        for T in [*range(10, 200), *rng.integers(200, 4097, 300).tolist(), 4096]:
            delta = int(rng.integers(2, max(3, T // 2)))
            w = SearchWindow(1, T, delta)
            if not w.searchable:
                continue
            calls.clear()
            binary_search_candidate(np.ones((T, 3)), w, r=1,
                                    settings=FitSettings(n_run=1, seed=int(T)))
            bound = 2 * (math.ceil(math.log2(w.t_end - w.t_start + 1)) + 1)
            violations += len(calls) > bound
            checked += 1
            total += len(calls)
    finally:
        seg.fit_best = orig
    ok = violations == 0 and checked > 300 and total >= 2 * checked
    report(6, ok, f"{violations} bound violations over {checked} searches, T <= 4096 (need 0)")
    assert ok


def brute_hausdorff(q, qh, T):
    def one_sided(a, b):
        worst = 0
        for x in a:
            worst = max(worst, min(abs(x - y) for y in b))
        return worst
    b = [0, *sorted(q), T]
    n_s = max(hi - lo for lo, hi in zip(b, b[1:]))
    return max(one_sided(q, qh), one_sided(qh, q)) / n_s


def brute_welch(a, b):
    ma, mb = math.fsum(a) / len(a), math.fsum(b) / len(b)
    va = math.fsum((x - ma) ** 2 for x in a) / (len(a) - 1)
    vb = math.fsum((x - mb) ** 2 for x in b) / (len(b) - 1)
    return (ma - mb) / math.sqrt(va / len(a) + vb / len(b))


def brute_loss(X, W, H, kind):
    n, m = X.shape
    terms = []
    for i in range(n):
        for j in range(m):
            wh = math.fsum(W[i, k] * H[k, j] for k in range(W.shape[1]))
            x = X[i, j]
            if kind == "euclidean":
                terms.append((x - wh) ** 2)
            else:
                terms.append((x * math.log(x / wh) if x > 0 else 0.0) - x + wh)
    return math.fsum(terms)


def test_c7_metric_oracles(report):
    rng = np.random.default_rng(99)
    haus_bad = 0
    for _ in range(1000):
        T = int(rng.integers(20, 2000))
        q = sorted(set(rng.integers(1, T, rng.integers(1, 7)).tolist()))
        qh = sorted(set(rng.integers(1, T, rng.integers(1, 7)).tolist()))
        haus_bad += hausdorff(q, qh, T) != brute_hausdorff(q, qh, T)
        assert largest_segment(q, T) > 0
    welch_bad = 0
    for _ in range(1000):
        a = rng.normal(rng.normal(), rng.uniform(0.1, 5), rng.integers(2, 200)).tolist()
        b = rng.normal(rng.normal(), rng.uniform(0.1, 5), rng.integers(2, 200)).tolist()
        t, ref = welch_test(a, b).t_stat, brute_welch(a, b)
        welch_bad += abs(t - ref) > 1e-12 * max(1.0, abs(ref))
        assert statistics.variance(a) > 0
    loss_bad = 0
    for i in range(100):
        n, m, r = int(rng.integers(2, 15)), int(rng.integers(2, 15)), int(rng.integers(1, 5))
        X = rng.random((n, m)) * 5
        X[rng.random((n, m)) < 0.15] = 0.0
        W, H = rng.random((n, r)) + 0.05, rng.random((r, m)) + 0.05
        kind = ("euclidean", "kl")[i % 2]
        got, ref = loss_of(X, W, H, kind), brute_loss(X, W, H, kind)
        loss_bad += abs(got - ref) > 1e-12 * abs(ref)
    ok = haus_bad == welch_bad == loss_bad == 0
    report(7, ok, f"mismatches: hausdorff {haus_bad}/1000, welch {welch_bad}/1000, "
                  f"loss {loss_bad}/100 (need 0)")
    assert ok


def test_c8_byte_identical_documents(report):
    Y, _, _ = simulate(2, seed=3, T=60, p=12)
    cfg = DetectorConfig(delta=15, n_run=3, n_reps=8, alpha=0.05, seed=11,
                         rank_range=(2, 3, 4), max_iter=300)
    docs = [dumps(result_document(detect(Y, cfg, n_jobs=j), created="fixed"))
            for j in (1, 1, -1, 4)]
    ok = len(set(docs)) == 1
    report(8, ok, f"{len(set(docs))} distinct documents over 4 runs incl. n_jobs=-1 and 4 "
                  "(need 1)")
    assert ok


def test_c9_shift_keeps_correlations(report):
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(100):
        T, p = int(rng.integers(5, 200)), int(rng.integers(2, 30))
        X = rng.standard_normal((T, p)) * rng.uniform(0.1, 100) + rng.uniform(-50, 5)
        assert X.min() < 0
        Y, _ = shift_nonneg(X)
        assert Y.min() >= 0
        worst = max(worst, float(np.abs(np.corrcoef(Y, rowvar=False)
                                        - np.corrcoef(X, rowvar=False)).max()))
    ok = worst <= 1e-12
    report(9, ok, f"max correlation change {worst:.2e} (need <= 1e-12)")
    assert ok
