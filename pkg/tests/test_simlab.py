import numpy as np
import pytest

from nmfchange.simlab import (
    CovarianceError, CovarianceSpec, build_sigma, generate, make_scenario, simulate,
    true_adjacency,
)


def test_sigma_two_variables():
    np.testing.assert_array_equal(build_sigma(CovarianceSpec((0, 0), 1)),
                                  [[1, 0.75], [0.75, 1]])
    np.testing.assert_allclose(build_sigma(CovarianceSpec((0, 1), 2)),
                               [[1, 0.20], [0.20, 1]])


def test_structure2_decay():
    S = build_sigma(CovarianceSpec((0, 0, 1, 1), 2))
    assert S[1, 2] == pytest.approx(0.2)
    assert S[0, 3] == pytest.approx(0.2 ** 3)
    assert S[0, 1] == 0.75


def test_structure2_relabel_is_vertex_permutation():
    rng = np.random.default_rng(3)
    a = np.repeat([0, 1], 30)
    S_a = build_sigma(CovarianceSpec(tuple(a), 2))
    for _ in range(5):
        b = rng.permutation(a)
        info = {}
        S_b = build_sigma(CovarianceSpec(tuple(int(v) for v in b), 2), info=info)
        assert info["ridge"] == 0.0
        order = np.argsort(b, kind="stable")
        np.testing.assert_array_equal(S_b[np.ix_(order, order)], S_a)


def test_sigma_symmetric_unit_diagonal():
    rng = np.random.default_rng(0)
    for _ in range(50):
        p = int(rng.integers(2, 40))
        spec = CovarianceSpec(tuple(int(v) for v in rng.integers(0, 4, p)),
                              int(rng.integers(1, 3)))
        S = build_sigma(spec)
        np.testing.assert_array_equal(S, S.T)
        np.testing.assert_allclose(np.diag(S), 1.0)
        assert np.linalg.eigvalsh(S)[0] > 0


def test_non_pd_guard(monkeypatch):
    import nmfchange.simlab as sim

    # within 0.75 but between 0.99 with three singleton-ish clusters is not PD
    monkeypatch.setattr(sim, "BETWEEN", 0.99)
    spec = CovarianceSpec((0, 0, 1, 1, 2, 2), 1)
    with pytest.raises(CovarianceError, match="not positive definite"):
        sim.build_sigma(spec, ridge=False)
    info = {}
    S = sim.build_sigma(spec, info=info)
    assert info["ridge"] > 0
    assert np.linalg.eigvalsh(S)[0] > 0
    np.testing.assert_allclose(np.diag(S), 1.0)


def test_scenarios_shapes():
    for sid, T, p, cps in [(1, 200, 400, []), (2, 200, 400, [100]),
                           (3, 400, 600, [100, 200, 300]), (4, 600, 800, [200, 400]),
                           (5, 300, 200, [100, 200])]:
        sc = make_scenario(sid, seed=1)
        assert (sc.T, sc.p, list(sc.change_points)) == (T, p, cps)
        assert len(sc.segments) == len(cps) + 1


def test_sim2_reshuffle_and_sim5_return():
    sc = make_scenario(2, seed=3, p=80)
    a, b = (np.array(s.labels) for s in sc.segments)
    assert sorted(a) == sorted(b) and not np.array_equal(a, b)
    sc5 = make_scenario(5, seed=3, p=60)
    assert sc5.segments[0] == sc5.segments[2] != sc5.segments[1]


def test_sim3_cluster_counts():
    sc = make_scenario(3, seed=2, p=60)
    assert [s.n_clusters for s in sc.segments] == [3, 2, 2, 3]
    seg2 = np.array(sc.segments[1].labels)
    assert abs(np.sum(seg2 == 0) - np.sum(seg2 == 1)) <= 1


def test_sim4_half_moves():
    sc = make_scenario(4, seed=2, p=40)
    a, b = (np.array(s.labels) for s in sc.segments[:2])
    for cl in (0, 1):
        members = a == cl
        assert np.sum(b[members] != cl) == members.sum() // 2


def test_generate_deterministic():
    sc = make_scenario(2, seed=0, p=20)
    Y1, t1 = generate(sc, 5)
    Y2, t2 = generate(sc, 5)
    np.testing.assert_array_equal(Y1, Y2)
    assert t1 == t2 == [100]
    assert Y1.shape == (200, 20)


def test_within_cluster_correlation():
    sc = make_scenario(1, seed=0, T=5000, p=20)
    Y, _ = generate(sc, 1)
    R = np.corrcoef(Y, rowvar=False)
    A = true_adjacency(sc.segments[0].labels).astype(bool)
    assert abs(R[A].mean() - 0.75) < 0.03
    off = ~A & ~np.eye(20, dtype=bool)
    assert abs(R[off].mean() - 0.20) < 0.03


def test_covariance_differs_across_change():
    sc = make_scenario(2, seed=0, T=4000, p=10)
    Y, _ = generate(sc, 2)
    S1 = np.cov(Y[:2000], rowvar=False)
    S2 = np.cov(Y[2000:], rowvar=False)
    S1b = np.cov(Y[:1000], rowvar=False)
    S1c = np.cov(Y[1000:2000], rowvar=False)
    # same-regime halves agree far better than the two regimes
    assert np.abs(S1b - S1c).max() < 0.15
    assert np.abs(S1 - S2).max() > 0.4


def test_simulate_wrapper():
    Y, truth, sc = simulate(5, seed=1, p=30)
    assert Y.shape == (300, 30) and truth == [100, 200]
    assert sc.notes["ridge"] >= 0
