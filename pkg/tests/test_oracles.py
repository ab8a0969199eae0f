import numpy as np
import pytest

from posetdist import (
    Distribution,
    PairHistogram,
    SizeCapError,
    closest_monotone_on_matching,
    dist_to_bigness,
    exact_dtv_to_monotone,
    func_dist_to_monotone,
    is_monotone,
    make_line,
    make_matching,
    max_violation_matching,
    min_perm_l1,
    min_w_to_monotone_pairhist,
    pair_histogram,
    w_distance,
)
from posetdist.simplex import solve_lp

from genutil import (
    brute_force_violation_matching,
    random_bipartite,
    random_dag,
    random_distribution,
)


def bigness_distance_lp(p: Distribution, T: float) -> float:
    """Independent oracle: TV distance to the T-big polytope by LP."""
    n = p.n
    c = np.concatenate([np.zeros(n), np.full(n, 0.5)])
    A, b = [], []
    for i in range(n):
        row = np.zeros(2 * n)
        row[i], row[n + i] = 1.0, -1.0
        A.append(row)
        b.append(p.probs[i])
        row = np.zeros(2 * n)
        row[i], row[n + i] = -1.0, -1.0
        A.append(row)
        b.append(-p.probs[i])
        row = np.zeros(2 * n)
        row[i] = -1.0
        A.append(row)
        b.append(-T)  # q_i >= T
    A_eq = np.zeros((1, 2 * n))
    A_eq[0, :n] = 1.0
    obj, _ = solve_lp(c, A_ub=np.array(A), b_ub=np.array(b), A_eq=A_eq, b_eq=[1.0])
    return obj


def test_dist_to_bigness_examples():
    assert dist_to_bigness(Distribution.uniform(5), 0.2) == 0.0
    p = Distribution(np.array([0.1, 0.25, 0.25, 0.4]))
    assert dist_to_bigness(p, 0.25) == pytest.approx(0.15)
    p = Distribution(np.array([0.0, 1 / 3, 1 / 3, 1 / 3]))
    assert dist_to_bigness(p, 0.25) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        dist_to_bigness(Distribution.uniform(4), 0.3)


def test_dist_to_bigness_matches_lp():
    rng = np.random.default_rng(21)
    for _ in range(25):
        n = int(rng.integers(2, 9))
        p = random_distribution(rng, n)
        T = float(rng.uniform(0.2, 1.0)) / n
        assert dist_to_bigness(p, T) == pytest.approx(bigness_distance_lp(p, T), abs=1e-8)


def test_func_dist_examples():
    d, sol = func_dist_to_monotone(make_matching(1), Distribution(np.array([0.75, 0.25])))
    assert d == pytest.approx(0.5, abs=1e-9)
    assert sol.objective == d
    d, _ = func_dist_to_monotone(make_line(3), Distribution(np.array([0.5, 0.3, 0.2])))
    assert d == pytest.approx(0.3, abs=1e-9)
    d, _ = func_dist_to_monotone(make_line(3), Distribution(np.array([0.2, 0.3, 0.5])))
    assert d == 0.0
    with pytest.raises(SizeCapError):
        func_dist_to_monotone(make_line(100), Distribution.uniform(100))


def test_matching_examples_and_tiebreak():
    G = make_line(3)
    p = Distribution(np.array([0.5, 0.3, 0.2]))
    m = max_violation_matching(G, p)
    # ties break toward fewer edges: the single closure edge (0, 2) wins
    assert m.edges == (((0, 2), pytest.approx(0.3)),)
    assert m.weight == pytest.approx(0.3)
    assert max_violation_matching(G, Distribution(np.array([0.2, 0.3, 0.5]))).edges == ()
    m = max_violation_matching(make_matching(1), Distribution(np.array([0.75, 0.25])))
    assert m.weight == pytest.approx(0.5)


def test_matching_equals_bruteforce_and_lp():
    rng = np.random.default_rng(33)
    for _ in range(60):
        n = int(rng.integers(2, 9))
        G = random_dag(rng, n)
        p = random_distribution(rng, n)
        W = max_violation_matching(G, p).weight
        assert W == pytest.approx(brute_force_violation_matching(G, p), abs=1e-10)
        d, _ = func_dist_to_monotone(G, p)
        assert d == pytest.approx(W, abs=1e-7)  # LP duality + integrality


def test_bipartite_matching_path_agrees_with_dp():
    rng = np.random.default_rng(34)
    for _ in range(40):
        G = random_bipartite(rng, int(rng.integers(1, 5)), int(rng.integers(1, 5)))
        p = random_distribution(rng, G.n)
        W = max_violation_matching(G, p).weight
        assert W == pytest.approx(brute_force_violation_matching(G, p), abs=1e-10)


def test_exact_dtv_examples_and_sandwich():
    assert exact_dtv_to_monotone(make_line(3), Distribution(np.array([0.2, 0.3, 0.5]))) == pytest.approx(0.0, abs=1e-9)
    d = exact_dtv_to_monotone(make_matching(1), Distribution(np.array([0.75, 0.25])))
    assert d == pytest.approx(0.25, abs=1e-9)
    rng = np.random.default_rng(44)
    for _ in range(40):
        G = random_dag(rng, int(rng.integers(2, 8)))
        p = random_distribution(rng, G.n)
        d = exact_dtv_to_monotone(G, p)
        W = max_violation_matching(G, p).weight
        assert W / 2 - 1e-9 <= d <= W + 1e-9


def test_closest_monotone_on_matching():
    G = make_matching(1)
    p = Distribution(np.array([0.75, 0.25]))
    q = closest_monotone_on_matching(G, p)
    np.testing.assert_allclose(q.probs, [0.5, 0.5])
    mono = Distribution(np.array([0.25, 0.75]))
    np.testing.assert_array_equal(closest_monotone_on_matching(G, mono).probs, mono.probs)
    with pytest.raises(ValueError):
        closest_monotone_on_matching(make_line(2), p)


def test_midpoint_fix_attains_exact_distance():
    rng = np.random.default_rng(55)
    for _ in range(500):
        n_pairs = int(rng.integers(1, 4))  # n <= 6 vertices keeps the LP quick
        G = make_matching(n_pairs)
        p = random_distribution(rng, 2 * n_pairs)
        q = closest_monotone_on_matching(G, p)
        assert is_monotone(G, q.probs)
        cost = 0.5 * float(np.abs(q.probs - p.probs).sum())
        assert cost == pytest.approx(exact_dtv_to_monotone(G, p), abs=1e-9)


def test_w_distance_examples():
    h = PairHistogram({(0.2, 0.3): 1})
    assert w_distance(h, h) == 0.0
    assert w_distance(h, PairHistogram({(0.5, 0.3): 1})) == pytest.approx(0.3, abs=1e-9)
    h2 = PairHistogram({(0.0, 0.4): 1, (0.4, 0.0): 1})
    g2 = PairHistogram({(0.2, 0.2): 2})
    assert w_distance(h2, g2) == pytest.approx(0.8, abs=1e-9)
    # unbalanced totals pad at the origin
    assert w_distance(h, PairHistogram({(0.2, 0.3): 2})) == pytest.approx(0.5, abs=1e-9)


def _random_pairhist(rng, max_pts=5):
    pts = {}
    for _ in range(int(rng.integers(1, max_pts + 1))):
        key = (round(float(rng.uniform(0, 1)), 2), round(float(rng.uniform(0, 1)), 2))
        if key == (0.0, 0.0):
            continue
        pts[key] = pts.get(key, 0) + int(rng.integers(1, 4))
    return PairHistogram(pts) if pts else PairHistogram({(0.5, 0.5): 1})


def test_w_distance_symmetry_triangle():
    rng = np.random.default_rng(66)
    for _ in range(25):
        a, b, c = (_random_pairhist(rng) for _ in range(3))
        assert w_distance(a, b) == pytest.approx(w_distance(b, a), abs=1e-8)
        assert w_distance(a, c) <= w_distance(a, b) + w_distance(b, c) + 1e-8


def test_min_w_grid_cap():
    from posetdist import GridInfeasibleError

    g = PairHistogram({(0.75, 0.25): 1})
    with pytest.raises(GridInfeasibleError):
        min_w_to_monotone_pairhist(g, mode="lp", grid_step=0.25, max_grid_points=3)
    with pytest.raises(ValueError):
        min_w_to_monotone_pairhist(g, mode="lp")  # lp mode needs a step
    with pytest.raises(ValueError):
        min_w_to_monotone_pairhist(g, mode="median")


def test_min_w_modes():
    g = PairHistogram({(0.75, 0.25): 1})
    val, gstar = min_w_to_monotone_pairhist(g, mode="lp", grid_step=0.25)
    assert val == pytest.approx(0.5, abs=1e-9)
    for (x, y), _ in gstar.items():
        assert x <= y
    val_mid, gstar_mid = min_w_to_monotone_pairhist(g, mode="midpoint")
    assert val_mid == pytest.approx(0.5)
    assert gstar_mid.items() == [((0.5, 0.5), 1.0)]
    assert min_w_to_monotone_pairhist(PairHistogram({}), mode="lp", grid_step=0.1)[0] == 0.0


def test_min_w_monotone_input_is_zero():
    p = Distribution(np.array([0.1, 0.15, 0.3, 0.45]))
    g = pair_histogram(p.probs[:2], p.probs[2:])
    for mode, step in (("lp", 0.05), ("midpoint", None)):
        val, _ = min_w_to_monotone_pairhist(g, mode=mode, grid_step=step)
        assert val == pytest.approx(0.0, abs=1e-9)


def test_midpoint_upper_bounds_lp():
    rng = np.random.default_rng(77)
    for _ in range(200):
        n_pairs = int(rng.integers(1, 4))
        v = rng.integers(0, 5, size=2 * n_pairs) * 0.05
        if v.sum() == 0:
            continue
        v = v / v.sum()
        v = np.round(v / 0.05) * 0.05  # keep keys on the lp grid
        if abs(v.sum() - 1.0) > 1e-9:
            continue
        g = pair_histogram(v[:n_pairs], v[n_pairs:])
        if not g.support:
            continue
        lp_val, _ = min_w_to_monotone_pairhist(g, mode="lp", grid_step=0.05)
        mid_val, _ = min_w_to_monotone_pairhist(g, mode="midpoint")
        assert mid_val >= lp_val - 1e-9


def test_min_perm_l1():
    assert min_perm_l1([0.5, 0.5], [0.1, 0.9], [0.5, 0.5], [0.1, 0.9]) == 0.0
    assert min_perm_l1([0.4, 0.6], [0.1, 0.9], [0.6, 0.4], [0.9, 0.1]) == 0.0
    with pytest.raises(SizeCapError):
        min_perm_l1(np.ones(10), np.ones(10), np.ones(10), np.ones(10))


def test_w_dominates_min_perm_l1():
    # transport distance between pair histograms upper-bounds the best
    # label-matching l1 gap; checked by full enumeration
    rng = np.random.default_rng(88)
    for _ in range(40):
        n = int(rng.integers(2, 6))
        p1, p2, q1, q2 = (random_distribution(rng, n).probs for _ in range(4))
        W = w_distance(pair_histogram(p1, p2), pair_histogram(q1, q2))
        assert W >= min_perm_l1(p1, p2, q1, q2) - 1e-8
