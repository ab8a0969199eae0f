import math

import numpy as np
import pytest

from posetdist import (
    Distribution,
    ExactDistAccess,
    LiftedAccess,
    Rng,
    bigness_to_matching,
    bipartite_to_matching,
    dist_to_bigness,
    exact_dtv_to_monotone,
    general_to_bipartite,
    hypercube_embedding,
    hypercube_scale,
    is_monotone,
    make_bipartite,
    make_hypercube,
    make_line,
    make_matching,
    matching_to_hypercube,
    transitive_closure,
)

from genutil import random_dag, random_distribution


def induced_lift_distribution(red, p: Distribution) -> np.ndarray:
    """Exact law of one lifted sample, summed over the conditional table."""
    q = np.zeros(red.target.n)
    for i in range(red.source.n):
        for j, pr in red.lift_conditional(i):
            q[j] += p.probs[i] * pr
    return q


def test_general_to_bipartite_structure():
    red = general_to_bipartite(make_line(3))
    assert red.target.kind == "bipartite"
    assert red.target.edges == ((0, 4), (0, 5), (1, 5))
    # matching source: one target edge per original pair
    M = make_matching(3)
    redm = general_to_bipartite(M)
    assert len(redm.target.edges) == 3
    assert redm.far_divisor == 4.0


def test_lifters_match_mapped_distribution_exactly():
    rng = np.random.default_rng(12)
    for _ in range(20):
        G = random_dag(rng, int(rng.integers(2, 7)))
        p = random_distribution(rng, G.n)
        for red in (general_to_bipartite(G),):
            np.testing.assert_allclose(
                induced_lift_distribution(red, p), red.map_distribution(p).probs, atol=1e-12
            )
    star = make_bipartite(3, [(0, 1), (0, 2)], bottom=[0])
    red = bipartite_to_matching(star, 2)
    p = Distribution(np.array([0.5, 0.3, 0.2]))
    np.testing.assert_allclose(
        induced_lift_distribution(red, p), red.map_distribution(p).probs, atol=1e-12
    )


def test_lifted_access_empirically_matches():
    G = make_line(4)
    red = general_to_bipartite(G)
    p = random_distribution(np.random.default_rng(1), 4)
    acc = LiftedAccess(ExactDistAccess(p), red)
    s = 400_000
    h = acc.histogram(s, Rng(31))
    np.testing.assert_allclose(h / s, red.map_distribution(p).probs, atol=6e-3)
    draws = acc.draw(2000, Rng(31))
    assert draws.min() >= 0 and draws.max() < red.target.n


def test_bipartite_to_matching_structure():
    # single edge, delta=1: one copy edge, no dummies
    G1 = make_bipartite(2, [(0, 1)], bottom=[0])
    red = bipartite_to_matching(G1, 1)
    assert red.target.n == 2 and len(red.target.edges) == 1
    # star K_{1,2} with delta=2: two copy edges, two leaf copies get dummies
    star = make_bipartite(3, [(0, 1), (0, 2)], bottom=[0])
    red = bipartite_to_matching(star, 2)
    assert red.target.n == 8
    assert len(red.target.edges) == 4
    zero_mass = red.map_distribution(Distribution(np.array([0.5, 0.3, 0.2]))).probs
    assert np.count_nonzero(zero_mass == 0.0) == 2  # the dummies
    with pytest.raises(ValueError):
        bipartite_to_matching(star, 1)  # degree 2 exceeds delta
    with pytest.raises(ValueError):
        bipartite_to_matching(make_line(3), 2)


def test_monotone_sources_stay_monotone():
    rng = np.random.default_rng(13)
    for _ in range(30):
        G = random_dag(rng, 6)
        # force a monotone distribution: weights increasing along a topo order
        depth = np.zeros(6)
        tc = transitive_closure(G)
        for u in range(6):
            depth[u] = sum(tc.reach(w, u) for w in range(6))
        v = 1.0 + depth + rng.uniform(0, 0.1, 6) * 0  # depth-ranked, ties allowed
        p = Distribution(v / v.sum())
        assert is_monotone(G, p.probs)
        red = general_to_bipartite(G)
        assert is_monotone(red.target, red.map_distribution(p).probs)


def test_bigness_to_matching_examples():
    q, meta = bigness_to_matching(Distribution(np.array([0.5, 0.5])), 0.25)
    np.testing.assert_allclose(q.probs, [1 / 6, 1 / 6, 1 / 3, 1 / 3])
    assert meta["scale"] == pytest.approx(1.5)
    assert is_monotone(meta["poset"], q.probs)
    n = 5
    q, meta = bigness_to_matching(Distribution.uniform(n), 1.0 / n)
    np.testing.assert_allclose(q.probs, 1.0 / (2 * n))
    assert is_monotone(meta["poset"], q.probs)
    with pytest.raises(ValueError):
        bigness_to_matching(Distribution.uniform(4), 0.3)


def test_bigness_to_matching_distance_contract():
    rng = np.random.default_rng(14)
    for _ in range(60):
        n = int(rng.integers(2, 7))
        p = random_distribution(rng, n)
        T = float(rng.uniform(0.3, 1.0)) / n
        q, meta = bigness_to_matching(p, T)
        src = dist_to_bigness(p, T)
        tgt = exact_dtv_to_monotone(meta["poset"], q)
        assert tgt >= src / meta["far_divisor"] - 1e-9


def test_hypercube_embedding_structure():
    emb = hypercube_embedding(4, 2)
    assert len(emb.pairs) == 3
    assert emb.pairs == ((1, 9), (2, 10), (4, 12))  # prefixes 001,010,100 + last bit
    assert emb.filler_count == 8
    assert hypercube_scale(4, 2, 0.1) == pytest.approx(1.8)
    for d in range(1, 9):
        for ell in range(1, d + 1):
            emb = hypercube_embedding(d, ell)
            assert len(emb.pairs) == math.comb(d - 1, ell - 1)
            expected_filler = sum(math.comb(d, i) for i in range(ell, d + 1)) - math.comb(d - 1, ell - 1)
            assert emb.filler_count == expected_filler


def test_hypercube_pairs_incomparable():
    for d in range(2, 9):
        for ell in range(1, d + 1):
            emb = hypercube_embedding(d, ell)
            for i, pa in enumerate(emb.pairs):
                for pb in emb.pairs[i + 1 :]:
                    for x in pa:
                        for y in pb:
                            assert (x | y) != x and (x | y) != y  # no subset relation


def test_matching_to_hypercube_monotone_and_distance():
    rng = np.random.default_rng(15)
    d, ell = 4, 2
    n_pairs = math.comb(d - 1, ell - 1)
    H = make_hypercube(d)
    for _ in range(30):
        p = random_distribution(rng, 2 * n_pairs)
        p_max = float(p.probs.max()) * 1.1
        q = matching_to_hypercube(d, ell, p, p_max)
        assert q.probs.sum() == pytest.approx(1.0)
        src = exact_dtv_to_monotone(make_matching(n_pairs), p)
        tgt = exact_dtv_to_monotone(H, q)
        scale = hypercube_scale(d, ell, p_max)
        assert tgt >= src / scale - 1e-9
    # monotone source embeds monotone
    lo = rng.uniform(0.05, 0.1, n_pairs)
    hi = lo + rng.uniform(0, 0.05, n_pairs)
    v = np.concatenate([lo, hi])
    p = Distribution(v / v.sum())
    q = matching_to_hypercube(d, ell, p, float(p.probs.max()))
    assert is_monotone(H, q.probs)
    with pytest.raises(ValueError):
        matching_to_hypercube(d, ell, p, float(p.probs.max()) / 2)  # mass above p_max
