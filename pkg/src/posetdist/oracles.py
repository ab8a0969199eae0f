"""Ground-truth distance computations.

Four distances live here, all desk-scale exact:

* distance to T-bigness (closed form),
* l1 distance from a distribution to the nearest monotone *function*
  (an LP over per-vertex perturbations),
* total variation distance to the nearest monotone *distribution* (an LP over
  the monotone simplex),
* the transport distance W between pair histograms, with unit cost
  |dx| + |dy| and (0,0) padding to balance totals.

LP duality makes the function distance equal the weight of a maximum-weight
matching on the transitive closure with violation weights max(0, p(u)-p(v)),
and the TV distance is sandwiched between half that weight and the weight
itself; both facts are exercised heavily by the test suite.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .poset import Poset, transitive_closure
from .prob import Distribution, PairHistogram
from .simplex import solve_lp

DEFAULT_LP_CAP = 64
GENERAL_MATCHING_CAP = 24
PERM_CAP = 9
WEIGHT_TOL = 1e-12


class SizeCapError(ValueError):
    """Instance exceeds the configured exact-computation cap."""


class GridInfeasibleError(ValueError):
    """The lp mode's quantized grid would be too large; use midpoint mode."""


@dataclass(frozen=True)
class WeightedMatching:
    """Vertex-disjoint directed edges with positive violation weights."""

    edges: tuple[tuple[tuple[int, int], float], ...]
    weight: float

    def __post_init__(self):
        used = set()
        for (u, v), w in self.edges:
            if w <= 0:
                raise ValueError("matching weights must be positive")
            if u in used or v in used:
                raise ValueError("matching edges must be vertex-disjoint")
            used.update((u, v))


@dataclass(frozen=True)
class LpSolution:
    objective: float
    x: np.ndarray
    optimal: bool


def dist_to_bigness(p: Distribution, threshold: float) -> float:
    """TV distance from p to the T-big polytope: sum of deficits below T.

    The closed form assumes T <= 1/n (otherwise the polytope shrinks and the
    deficit sum is no longer the distance), so larger thresholds are rejected.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    if threshold > 1.0 / p.n + 1e-15:
        raise ValueError(f"threshold {threshold} exceeds 1/n")
    return float(np.maximum(0.0, threshold - p.probs).sum())


def func_dist_to_monotone(G: Poset, p: Distribution, lp_cap: int = DEFAULT_LP_CAP):
    """Minimal l1 perturbation x making p + x a monotone function on G.

    Returns (d, LpSolution) with d = ||x||_1. Solved as an LP over the split
    x = x+ - x-, one constraint per poset edge.
    """
    if G.n > lp_cap:
        raise SizeCapError(f"n={G.n} exceeds LP cap {lp_cap}")
    if p.n != G.n:
        raise ValueError("distribution length does not match poset")
    n = G.n
    m = len(G.edges)
    c = np.ones(2 * n)
    if m == 0:
        return 0.0, LpSolution(0.0, np.zeros(n), True)
    A = np.zeros((m, 2 * n))
    b = np.zeros(m)
    for k, (u, v) in enumerate(G.edges):
        # x(v) - x(u) >= p(u) - p(v), written as <=
        A[k, u] = 1.0
        A[k, n + u] = -1.0
        A[k, v] = -1.0
        A[k, n + v] = 1.0
        b[k] = p.probs[v] - p.probs[u]
    obj, z = solve_lp(c, A_ub=A, b_ub=b)
    x = z[:n] - z[n:]
    return float(obj), LpSolution(float(obj), x, True)


def exact_dtv_to_monotone(G: Poset, p: Distribution, lp_cap: int = DEFAULT_LP_CAP) -> float:
    """TV distance from p to the set of monotone distributions on G, by LP."""
    if G.n > lp_cap:
        raise SizeCapError(f"n={G.n} exceeds LP cap {lp_cap}")
    if p.n != G.n:
        raise ValueError("distribution length does not match poset")
    n = G.n
    m = len(G.edges)
    # Variables [q_0..q_{n-1}, t_0..t_{n-1}]: minimize sum(t)/2 with t >= |q - p|,
    # q in the monotone simplex.
    c = np.concatenate([np.zeros(n), np.full(n, 0.5)])
    A_rows = []
    b_rows = []
    for i in range(n):
        row = np.zeros(2 * n)
        row[i] = 1.0
        row[n + i] = -1.0
        A_rows.append(row)
        b_rows.append(p.probs[i])  # q_i - t_i <= p_i
        row = np.zeros(2 * n)
        row[i] = -1.0
        row[n + i] = -1.0
        A_rows.append(row)
        b_rows.append(-p.probs[i])  # -q_i - t_i <= -p_i
    for u, v in G.edges:
        row = np.zeros(2 * n)
        row[u] = 1.0
        row[v] = -1.0
        A_rows.append(row)
        b_rows.append(0.0)  # q_u <= q_v
    A_eq = np.zeros((1, 2 * n))
    A_eq[0, :n] = 1.0
    obj, _ = solve_lp(c, A_ub=np.array(A_rows), b_ub=np.array(b_rows), A_eq=A_eq, b_eq=[1.0])
    return float(obj)


def _violation_edges(G: Poset, probs: np.ndarray):
    """TC edges with positive violation weight, sorted for determinism."""
    if G.kind == "matching":
        tc_edges = list(G.edges)  # no 2-paths exist
    else:
        tc_edges = transitive_closure(G).edges()
    out = []
    for u, v in sorted(tc_edges):
        w = float(probs[u] - probs[v])
        if w > WEIGHT_TOL:
            out.append((u, v, w))
    return out


def _matching_dp(cand):
    """Exact max-weight matching by subset DP over the incident vertices.

    Optima are compared by weight (1e-12 tolerance), then by fewer edges; the
    greedy reconstruction over the sorted candidate list then yields the
    lexicographically smallest edge set among what remains tied.
    """
    verts = sorted({u for u, _, _ in cand} | {v for _, v, _ in cand})
    idx = {v: i for i, v in enumerate(verts)}
    k = len(verts)
    by_low: list[list[tuple[int, float]]] = [[] for _ in range(k)]
    for u, v, w in cand:
        a, b = idx[u], idx[v]
        lo, hi = min(a, b), max(a, b)
        by_low[lo].append((hi, w))
    size = 1 << k
    best = np.zeros(size)
    cnt = np.zeros(size, dtype=np.int64)
    for mask in range(1, size):
        low = (mask & -mask).bit_length() - 1
        rest = mask ^ (1 << low)
        bw, bc = best[rest], cnt[rest]
        for hi, w in by_low[low]:
            if mask >> hi & 1:
                m2 = rest ^ (1 << hi)
                cw, cc = best[m2] + w, cnt[m2] + 1
                if cw > bw + WEIGHT_TOL or (cw > bw - WEIGHT_TOL and cc < bc):
                    bw, bc = cw, cc
        best[mask] = bw
        cnt[mask] = bc

    full = size - 1
    chosen = []
    remaining = full
    target_w, target_c = best[full], cnt[full]
    for u, v, w in cand:
        a, b = idx[u], idx[v]
        if remaining >> a & 1 and remaining >> b & 1:
            m2 = remaining & ~(1 << a) & ~(1 << b)
            if abs(w + best[m2] - target_w) <= WEIGHT_TOL and cnt[m2] + 1 == target_c:
                chosen.append(((u, v), w))
                remaining = m2
                target_w -= w
                target_c -= 1
    return chosen


def _assignment_max_weight(weights: np.ndarray):
    """Max-weight assignment on a square matrix via shortest augmenting paths
    with potentials. Returns the column matched to each row."""
    n = weights.shape[0]
    cost = -weights
    INF = np.inf
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    match_row = np.zeros(n + 1, dtype=int)  # row assigned to each column (1-based)
    for i in range(1, n + 1):
        match_row[0] = i
        j0 = 0
        minv = np.full(n + 1, INF)
        way = np.zeros(n + 1, dtype=int)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = match_row[j0]
            cur = cost[i0 - 1, :] - u[i0] - v[1:]
            upd = ~used[1:] & (cur < minv[1:])
            minv[1:][upd] = cur[upd]
            way[1:][upd] = j0
            free = ~used[1:]
            if not free.any():
                break
            j1 = int(np.argmin(np.where(free, minv[1:], INF))) + 1
            delta = minv[j1]
            u[match_row[used]] += delta
            v[used] -= delta
            minv[1:][free] -= delta
            j0 = j1
            if match_row[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match_row[j0] = match_row[j1]
            j0 = j1
    col_of_row = np.zeros(n, dtype=int)
    for j in range(1, n + 1):
        if match_row[j] > 0:
            col_of_row[match_row[j] - 1] = j - 1
    return col_of_row


def max_violation_matching(G: Poset, p: Distribution) -> WeightedMatching:
    """Maximum-weight matching on TC(G) under weights max(0, p(u) - p(v)).

    Exact for every poset: matchings decompose per edge, bipartite posets run
    an assignment solver on the (closure-free) edge grid, and general posets
    up to n=24 run the subset DP. Zero-weight edges never appear in the output.
    """
    if p.n != G.n:
        raise ValueError("distribution length does not match poset")
    cand = _violation_edges(G, p.probs)
    if not cand:
        return WeightedMatching((), 0.0)
    if G.kind == "matching":
        edges = tuple(((u, v), w) for u, v, w in cand)
        return WeightedMatching(edges, float(sum(w for _, _, w in cand)))
    if G.kind == "bipartite":
        bots = sorted({u for u, _, _ in cand})
        tops = sorted({v for _, v, _ in cand})
        size = max(len(bots), len(tops))
        W = np.zeros((size, size))
        bi = {b: i for i, b in enumerate(bots)}
        ti = {t: i for i, t in enumerate(tops)}
        for u, v, w in cand:
            W[bi[u], ti[v]] = w
        col = _assignment_max_weight(W)
        chosen = []
        for i, b in enumerate(bots):
            j = col[i]
            if j < len(tops):
                w = W[i, j]
                if w > WEIGHT_TOL:
                    chosen.append(((b, tops[j]), float(w)))
        chosen.sort()
        return WeightedMatching(tuple(chosen), float(sum(w for _, w in chosen)))
    if G.n > GENERAL_MATCHING_CAP:
        raise SizeCapError(f"general-poset matching capped at n={GENERAL_MATCHING_CAP}")
    chosen = _matching_dp(cand)
    return WeightedMatching(tuple(chosen), float(sum(w for _, w in chosen)))


def closest_monotone_on_matching(G: Poset, p: Distribution) -> Distribution:
    """Midpoint fix on a matching poset: both endpoints of each violating edge
    move to their average. Attains the exact TV distance to monotonicity."""
    if G.kind != "matching":
        raise ValueError("closest_monotone_on_matching needs a matching poset")
    if p.n != G.n:
        raise ValueError("distribution length does not match poset")
    q = p.probs.copy()
    for u, v in G.edges:
        if q[u] > q[v]:
            mid = 0.5 * (q[u] + q[v])
            q[u] = mid
            q[v] = mid
    return Distribution(q)


def _transport_cost(supply, demand) -> float:
    """Balanced transportation LP between weighted point lists in the plane
    under l1 ground cost."""
    ns, nd = len(supply), len(demand)
    nvar = ns * nd
    c = np.empty(nvar)
    for i, ((x, y), _) in enumerate(supply):
        for j, ((a, b), _) in enumerate(demand):
            c[i * nd + j] = abs(x - a) + abs(y - b)
    A_eq = np.zeros((ns + nd, nvar))
    b_eq = np.zeros(ns + nd)
    for i, (_, s) in enumerate(supply):
        A_eq[i, i * nd : (i + 1) * nd] = 1.0
        b_eq[i] = s
    for j, (_, d) in enumerate(demand):
        A_eq[ns + j, j::nd] = 1.0
        b_eq[ns + j] = d
    obj, _ = solve_lp(c, A_eq=A_eq, b_eq=b_eq)
    return float(obj)


def w_distance(h: PairHistogram, g: PairHistogram) -> float:
    """Transport distance between pair histograms; per-unit cost |dx| + |dy|,
    totals balanced by padding the lighter side at (0, 0)."""
    supply = list(h.items())
    demand = list(g.items())
    diff = sum(c for _, c in supply) - sum(c for _, c in demand)
    if diff > 0:
        demand.append(((0.0, 0.0), diff))
    elif diff < 0:
        supply.append(((0.0, 0.0), -diff))
    if not supply:
        return 0.0
    return _transport_cost(supply, demand)


def _monotone_grid(step: float, upper: float, max_points: int):
    ticks = int(np.ceil(upper / step - 1e-12)) + 1
    pts = [
        (i * step, j * step)
        for j in range(ticks)
        for i in range(j + 1)
        if not (i == 0 and j == 0)
    ]
    if len(pts) > max_points:
        raise GridInfeasibleError(f"monotone grid needs {len(pts)} points (cap {max_points})")
    return pts


def min_w_to_monotone_pairhist(
    g: PairHistogram,
    mode: str = "midpoint",
    grid_step: float | None = None,
    max_grid_points: int = 5000,
):
    """Distance from g to the pair histogram of some monotone distribution.

    midpoint mode reconstructs a labeling consistent with g, applies the
    matching midpoint fix to each violating key (x > y), and reports that
    scheme's transport cost: an upper bound on the true minimum, exact enough
    for tester thresholds. lp mode minimizes W(g, g*) jointly over transport
    plans and histograms g* supported on a quantized monotone grid carrying
    total probability mass 1; it is cap-limited and meant for oracle use.

    Returns (value, g*).
    """
    items = g.items()
    if not items:
        return 0.0, PairHistogram({})
    if mode == "midpoint":
        cost = 0.0
        out: dict[tuple[float, float], float] = {}
        for (x, y), c in items:
            if x > y:
                mid = 0.5 * (x + y)
                cost += c * (x - y)
                key = (mid, mid)
            else:
                key = (x, y)
            if key != (0.0, 0.0):
                out[key] = out.get(key, 0.0) + c
        return float(cost), PairHistogram(out)
    if mode != "lp":
        raise ValueError("mode must be 'midpoint' or 'lp'")
    if grid_step is None or grid_step <= 0:
        raise ValueError("lp mode needs a positive grid_step")

    upper = max(max(x, y) for (x, y), _ in items)
    grid = _monotone_grid(grid_step, upper, max_grid_points)
    supply = [((x, y), c) for (x, y), c in items]
    ns = len(supply)
    nd = len(grid)
    # Columns: moves F[i, j] from supply i to grid point j, one sink column per
    # supply (mass destroyed at (0,0)), one source column per grid point (mass
    # created from (0,0)).
    nvar = ns * nd + ns + nd
    c_vec = np.empty(nvar)
    for i, ((x, y), _) in enumerate(supply):
        for j, (a, b) in enumerate(grid):
            c_vec[i * nd + j] = abs(x - a) + abs(y - b)
        c_vec[ns * nd + i] = x + y  # to the (0,0) sink
    for j, (a, b) in enumerate(grid):
        c_vec[ns * nd + ns + j] = a + b  # created from (0,0)
    A_eq = np.zeros((ns + 1, nvar))
    b_eq = np.zeros(ns + 1)
    for i, (_, cnt) in enumerate(supply):
        A_eq[i, i * nd : (i + 1) * nd] = 1.0
        A_eq[i, ns * nd + i] = 1.0
        b_eq[i] = cnt
    # g* must be the histogram of a probability distribution: total mass 1.
    for j, (a, b) in enumerate(grid):
        A_eq[ns, j::nd][:ns] = a + b
        A_eq[ns, ns * nd + ns + j] = a + b
    b_eq[ns] = 1.0
    obj, flow = solve_lp(c_vec, A_eq=A_eq, b_eq=b_eq)
    out = {}
    for j, pt in enumerate(grid):
        col = float(flow[j:ns * nd:nd].sum() + flow[ns * nd + ns + j])
        if col > 1e-9:
            out[pt] = col
    return float(obj), PairHistogram(out)


def min_perm_l1(p1, p2, q1, q2) -> float:
    """min over label permutations pi of |p1 - q1 o pi|_1 + |p2 - q2 o pi|_1.

    Factorial enumeration; capped at n = 9.
    """
    a1 = np.asarray(p1, dtype=float)
    a2 = np.asarray(p2, dtype=float)
    b1 = np.asarray(q1, dtype=float)
    b2 = np.asarray(q2, dtype=float)
    n = a1.size
    if not (a2.size == b1.size == b2.size == n):
        raise ValueError("all four vectors must share a length")
    if n > PERM_CAP:
        raise SizeCapError(f"permutation enumeration capped at n={PERM_CAP}")
    best = np.inf
    for perm in itertools.permutations(range(n)):
        pi = np.asarray(perm)
        val = np.abs(a1 - b1[pi]).sum() + np.abs(a2 - b2[pi]).sum()
        if val < best:
            best = float(val)
    return best
