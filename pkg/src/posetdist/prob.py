"""Distributions, seeded sampling, Poissonized histograms, pair histograms.

All randomness flows through Rng, a thin wrapper over numpy's PCG64 keyed by
(seed, stream): the same key always replays the same draw sequence, and
concurrent work derives disjoint streams instead of sharing state.

Sampling is exposed both per-draw (sample) and as exact histogram laws
(SampleAccess.histogram draws the multinomial of the counts directly, which is
the same distribution as histogramming s i.i.d. draws but costs O(n)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SUM_TOL = 1e-9


class Rng:
    """Reproducible random source keyed by a 64-bit seed and a stream index."""

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed)
        self.stream = int(stream)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream,))
        self.gen = np.random.Generator(np.random.PCG64(ss))

    def derive(self, stream: int) -> "Rng":
        """Fresh Rng on the same seed with an independent stream."""
        return Rng(self.seed, stream)

    def __repr__(self):
        return f"Rng(seed={self.seed}, stream={self.stream})"


@dataclass(frozen=True)
class Distribution:
    """Probability vector over 0..n-1: entries >= 0, total within 1e-9 of 1."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)  # own copy: callers keep theirs writable
        p.flags.writeable = False
        object.__setattr__(self, "probs", p)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("distribution must be a nonempty vector")
        if np.any(p < 0):
            raise ValueError("distribution has negative entries")
        if abs(float(p.sum()) - 1.0) > SUM_TOL:
            raise ValueError(f"distribution sums to {p.sum()!r}, not 1")

    @property
    def n(self) -> int:
        return self.probs.size

    @classmethod
    def uniform(cls, n: int) -> "Distribution":
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def point_mass(cls, n: int, i: int) -> "Distribution":
        p = np.zeros(n)
        p[i] = 1.0
        return cls(p)

    @classmethod
    def normalized(cls, vec) -> "Distribution":
        v = np.asarray(vec, dtype=float)
        total = float(v.sum())
        if total <= 0:
            raise ValueError("cannot normalize a vector with no mass")
        return cls(v / total)


@dataclass(frozen=True)
class SampleHistogram:
    """Per-element count vector of a sample multiset."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts)
        if np.any(c < 0):
            raise ValueError("histogram counts must be nonnegative")
        c = c.astype(np.int64)
        c.flags.writeable = False
        object.__setattr__(self, "counts", c)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


class PairHistogram:
    """Finite map (x, y) -> count: how many domain elements carry mass x in the
    first vector and y in the second. (0, 0) keys are excluded; counts may be
    fractional for learned or rescaled histograms."""

    def __init__(self, support):
        self.support: dict[tuple[float, float], float] = {}
        for key, count in dict(support).items():
            x, y = float(key[0]), float(key[1])
            if count <= 0:
                raise ValueError(f"count at {key} must be positive")
            if x == 0.0 and y == 0.0:
                raise ValueError("(0, 0) is excluded from pair-histogram support")
            if (x, y) in self.support:
                raise ValueError(f"duplicate key {(x, y)}")
            self.support[(x, y)] = float(count)

    def total(self) -> float:
        return sum(self.support.values())

    def items(self):
        """Support in deterministic (x, y) order."""
        return sorted(self.support.items())

    def __eq__(self, other):
        return isinstance(other, PairHistogram) and self.support == other.support

    def __repr__(self):
        return f"PairHistogram({self.items()})"


def sample(p: Distribution, s: int, rng: Rng) -> np.ndarray:
    """s i.i.d. element indices drawn from p."""
    if s < 0:
        raise ValueError("sample count must be nonnegative")
    if s == 0:
        return np.empty(0, dtype=np.int64)
    return rng.gen.choice(p.n, size=s, p=p.probs).astype(np.int64)


def multinomial_histogram(p: Distribution, s: int, rng: Rng) -> SampleHistogram:
    """Histogram of s i.i.d. draws from p, drawn directly as a multinomial."""
    if s < 0:
        raise ValueError("sample count must be nonnegative")
    return SampleHistogram(rng.gen.multinomial(int(s), p.probs))


def poissonized_histogram(weights, s: float, rng: Rng) -> SampleHistogram:
    """Independent Poisson(s * w_i) count per element.

    weights need not sum to 1; the total count is then Poisson(s * sum(w)).
    """
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    if s < 0:
        raise ValueError("rate must be nonnegative")
    if s == 0:
        return SampleHistogram(np.zeros(w.size, dtype=np.int64))
    return SampleHistogram(rng.gen.poisson(s * w))


def pair_histogram(p1, p2, quantize: float | None = None) -> PairHistogram:
    """Exact pair histogram of two equal-length nonnegative vectors.

    quantize, when given, snaps each coordinate to the nearest multiple of the
    step before keying; used for learned histograms so float noise cannot
    split keys.
    """
    a = np.asarray(p1, dtype=float)
    b = np.asarray(p2, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("pair_histogram needs two equal-length vectors")
    if quantize is not None:
        if quantize <= 0:
            raise ValueError("quantization step must be positive")
        a = np.round(a / quantize) * quantize
        b = np.round(b / quantize) * quantize
    support: dict[tuple[float, float], float] = {}
    for x, y in zip(a.tolist(), b.tolist()):
        if x == 0.0 and y == 0.0:
            continue
        support[(x, y)] = support.get((x, y), 0.0) + 1.0
    return PairHistogram(support)


def tv_distance(p: Distribution, q: Distribution) -> float:
    """Total variation distance (half the l1 gap)."""
    if p.n != q.n:
        raise ValueError("distributions have different lengths")
    return 0.5 * float(np.abs(p.probs - q.probs).sum())


def mass_of_set(p: Distribution, S, s: int, rng: Rng) -> float:
    """Empirical mass of vertex set S from s i.i.d. draws.

    Additive error eps/8 with probability >= 1 - delta once
    s >= 2 * log(1/delta) / eps^2 (Hoeffding).
    """
    if s < 1:
        raise ValueError("need at least one sample")
    indicator = np.zeros(p.n, dtype=bool)
    idx = list(S)
    if idx:
        indicator[np.asarray(idx, dtype=int)] = True
    hist = multinomial_histogram(p, s, rng)
    return float(hist.counts[indicator].sum()) / s


class SampleAccess:
    """Sample-only access to an unknown distribution: draw() yields i.i.d.
    element indices and histogram() yields the exact law of their counts.
    Subclasses must keep both views consistent."""

    n: int

    def draw(self, s: int, rng: Rng) -> np.ndarray:
        raise NotImplementedError

    def histogram(self, s: int, rng: Rng) -> np.ndarray:
        counts = np.bincount(self.draw(s, rng), minlength=self.n)
        return counts.astype(np.int64)


class ExactDistAccess(SampleAccess):
    """Sample access backed by an explicitly known distribution."""

    def __init__(self, dist: Distribution):
        self.dist = dist
        self.n = dist.n

    def draw(self, s: int, rng: Rng) -> np.ndarray:
        return sample(self.dist, s, rng)

    def histogram(self, s: int, rng: Rng) -> np.ndarray:
        return multinomial_histogram(self.dist, s, rng).counts.copy()


def read_distribution(path) -> Distribution:
    """One decimal probability per line; the sum is validated."""
    with open(path, "r", encoding="utf-8") as fh:
        vals = [float(ln.strip()) for ln in fh if ln.strip() and not ln.strip().startswith("#")]
    return Distribution(np.array(vals))


def write_distribution(p: Distribution, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for x in p.probs:
            fh.write(repr(float(x)) + "\n")


def read_histogram_csv(path) -> SampleHistogram:
    """Histogram CSV "index,count" with a header row."""
    counts: dict[int, int] = {}
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "index,count":
            raise ValueError(f"{path}: expected 'index,count' header")
        for ln in fh:
            if not ln.strip():
                continue
            i, c = ln.strip().split(",")
            counts[int(i)] = int(c)
    n = max(counts, default=-1) + 1
    vec = np.zeros(n, dtype=np.int64)
    for i, c in counts.items():
        vec[i] = c
    return SampleHistogram(vec)


def write_histogram_csv(h: SampleHistogram, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("index,count\n")
        for i, c in enumerate(h.counts):
            fh.write(f"{i},{int(c)}\n")
