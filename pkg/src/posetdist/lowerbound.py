"""Moment-matched prior pairs and the two-step histogram process.

The construction builds two priors V and V' over per-element probability
weights: both have mean 1 and identical first L moments, V is supported on
[(1+nu)/beta, lam/beta] while V' additionally puts mass at 0. Element i of a
size-n domain draws its raw weight from the prior; the raw vector w/n is
approximately a distribution, and a histogram of roughly s samples is drawn
as independent Poisson(s * w_i / n) counts.

Conditioned on the "good" events (raw mass near 1, enough samples, enough
zeros on the far side), the normalized V-side vector is 1/(beta*n)-big while
the V'-side vector is far from big by half the construction's gap value, yet
the two histogram laws are nearly indistinguishable. The gap optimum has a
closed form via best polynomial approximation of 1/x; this module gets the
same value from a discretized LP and uses the closed form as the oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .prob import Distribution, Rng
from .simplex import solve_lp

MASS_TOL = 1e-9
MEAN_TOL = 1e-8
MOMENT_REL_TOL = 1e-8
PRUNE_MASS = 1e-10
DEFAULT_GRID = 400
WILSON_Z = 1.959963984540054  # 95%

FINGERPRINT_NAMES = ("zeros", "singletons", "doubletons", "total")


class ParameterError(ValueError):
    """Requested parameter regime is infeasible for the construction."""


class PriorsError(RuntimeError):
    """The constructed prior pair violates its invariants."""


def moment_gap_value(nu: float, lam: float, L: int) -> float:
    """Closed form for the largest achievable E[1/X] - E[1/X'] over measure
    pairs on [1+nu, lam] with L-1 matched moments."""
    if nu <= 0 or lam <= 1 + nu:
        raise ValueError("need 0 < nu and lam > 1 + nu")
    if L < 2:
        raise ValueError("need L >= 2")
    rho = math.sqrt(lam / (1 + nu))
    base = (1 / math.sqrt(1 + nu) - 1 / math.sqrt(lam)) ** 2
    return base * ((rho - 1) / (rho + 1)) ** (L - 2)


def chebyshev_grid(nu: float, lam: float, size: int) -> np.ndarray:
    """Chebyshev-extrema points on [1+nu, lam], ascending."""
    lo, hi = 1 + nu, lam
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    k = np.arange(size)
    return np.sort(mid + half * np.cos(np.pi * k / (size - 1)))


def solve_moment_gap(nu: float, lam: float, L: int, grid_size: int = DEFAULT_GRID):
    """Discretized version of the gap program: maximize E[1/X] - E[1/X'] over
    two PMFs on a Chebyshev grid subject to E[X^j] = E[X'^j], j = 1..L-1.

    Returns (value, (atoms_x, mass_x), (atoms_x2, mass_x2)) with atoms of mass
    below 1e-10 pruned and each side renormalized.
    """
    if nu <= 0 or lam <= 1 + nu:
        raise ValueError("need 0 < nu and lam > 1 + nu")
    if L < 2:
        raise ValueError("need L >= 2")
    if grid_size < 2 * L + 2:
        raise ValueError(f"grid_size must be at least {2 * L + 2}")
    grid = chebyshev_grid(nu, lam, grid_size)
    g = grid.size
    c = np.concatenate([-1.0 / grid, 1.0 / grid])  # minimize the negated gap
    n_eq = 2 + (L - 1)
    A_eq = np.zeros((n_eq, 2 * g))
    b_eq = np.zeros(n_eq)
    A_eq[0, :g] = 1.0
    b_eq[0] = 1.0
    A_eq[1, g:] = 1.0
    b_eq[1] = 1.0
    for j in range(1, L):
        scaled = (grid / lam) ** j  # row scaling keeps the tableau O(1)
        A_eq[1 + j, :g] = scaled
        A_eq[1 + j, g:] = -scaled
    obj, x = solve_lp(c, A_eq=A_eq, b_eq=b_eq)

    def extract(mass):
        keep = mass > PRUNE_MASS
        atoms = grid[keep]
        m = mass[keep]
        return atoms, m / m.sum()

    ax, mx = extract(x[:g])
    ax2, mx2 = extract(x[g:])
    return float(-obj), (ax, mx), (ax2, mx2)


@dataclass(frozen=True)
class MomentPriors:
    """The prior pair (V, V') plus its construction parameters.

    gap is the construction's objective value (1/beta) * Pr[V' = 0]; it equals
    the expected distance of the far-side vector to 1/(beta*n)-bigness.
    """

    atoms_big: np.ndarray
    mass_big: np.ndarray
    atoms_far: np.ndarray
    mass_far: np.ndarray
    beta: float
    nu: float
    lam: float
    L: int
    gap: float

    def validate(self) -> None:
        """Enforce all invariants, raising PriorsError with residuals."""
        problems = []
        for name, atoms, mass in (
            ("big", self.atoms_big, self.mass_big),
            ("far", self.atoms_far, self.mass_far),
        ):
            if abs(mass.sum() - 1.0) > MASS_TOL:
                problems.append(f"{name} mass sums to {mass.sum()!r}")
            mean = float(atoms @ mass)
            if abs(mean - 1.0) > MEAN_TOL:
                problems.append(f"{name} mean is {mean!r}")
        lo = (1 + self.nu) / self.beta - 1e-12
        hi = self.lam / self.beta + 1e-12
        if np.any((self.atoms_big < lo) | (self.atoms_big > hi)):
            problems.append("big-side atom outside [(1+nu)/beta, lam/beta]")
        nz = self.atoms_far[self.atoms_far != 0.0]
        if np.any((nz < lo) | (nz > hi)):
            problems.append("far-side nonzero atom outside the interval")
        for j in range(1, self.L + 1):
            mj_big = float(self.atoms_big**j @ self.mass_big)
            mj_far = float(self.atoms_far**j @ self.mass_far)
            rel = abs(mj_big - mj_far) / max(1.0, abs(mj_big))
            if rel > MOMENT_REL_TOL:
                problems.append(f"moment {j} mismatch: {mj_big!r} vs {mj_far!r}")
        if self.gap > 0 and not (
            1 + self.nu - 1e-9 <= self.beta <= min(self.lam, 1.0 / self.gap) + 1e-9
        ):
            problems.append(f"beta {self.beta!r} outside [1+nu, min(lam, 1/gap)]")
        if problems:
            raise PriorsError("; ".join(problems))

    def zero_mass(self) -> float:
        return float(self.mass_far[self.atoms_far == 0.0].sum())


def priors_from_gap_solution(nu, lam, L, atoms_x, mass_x, atoms_x2, mass_x2) -> MomentPriors:
    """Change of measure from a gap-program solution pair (X, X') to (V, V').

    beta = 1/E[1/X]; atom x maps to x/beta with mass beta*m(x)/x, which keeps
    the measure normalized and turns matched X-moments j-1 into matched
    V-moments j; the far side's missing mass 1 - beta*E[1/X'] sits at 0.
    """
    atoms_x = np.asarray(atoms_x, dtype=float)
    mass_x = np.asarray(mass_x, dtype=float)
    atoms_x2 = np.asarray(atoms_x2, dtype=float)
    mass_x2 = np.asarray(mass_x2, dtype=float)
    inv_mean_x = float(mass_x @ (1.0 / atoms_x))
    inv_mean_x2 = float(mass_x2 @ (1.0 / atoms_x2))
    beta = 1.0 / inv_mean_x
    atoms_big = atoms_x / beta
    mass_big = beta * mass_x / atoms_x
    zero_mass = 1.0 - beta * inv_mean_x2
    atoms_far = atoms_x2 / beta
    mass_far = beta * mass_x2 / atoms_x2
    if zero_mass > 1e-15:
        atoms_far = np.concatenate([[0.0], atoms_far])
        mass_far = np.concatenate([[zero_mass], mass_far])
    gap = (1.0 / beta) * max(zero_mass, 0.0)
    priors = MomentPriors(
        atoms_big=atoms_big,
        mass_big=mass_big,
        atoms_far=atoms_far,
        mass_far=mass_far,
        beta=beta,
        nu=float(nu),
        lam=float(lam),
        L=int(L),
        gap=gap,
    )
    priors.validate()
    return priors


def build_priors(nu: float, lam: float, L: int, grid_size: int = DEFAULT_GRID) -> MomentPriors:
    """Solve the discretized gap program and apply the change of measure."""
    _, (ax, mx), (ax2, mx2) = solve_moment_gap(nu, lam, L, grid_size)
    return priors_from_gap_solution(nu, lam, L, ax, mx, ax2, mx2)


@dataclass(frozen=True)
class ParameterAssignment:
    nu: float
    lam: float
    s: int
    gap: float
    rho: float
    L: int
    n: int
    eps: float


def assign_parameters(n: int, eps: float, L: int) -> ParameterAssignment:
    """The standard parameter tuple: nu = 1/2, lam from (eps, L), s = floor(L*n / (2*e*lam)).

    Feasibility guard: rho = sqrt(lam/(1+nu)) must be at least 1.5, which also
    guarantees gap >= 2*eps. Violations raise ParameterError with rho reported.
    """
    if n < 1:
        raise ParameterError("n must be positive")
    if not 0 < eps < 1.0 / 27:
        raise ParameterError("eps must lie in (0, 1/27) for the lam formula")
    nu = 0.5
    t = 4.0 * (L - 2) / math.log(1.0 / (27.0 * eps))
    if t <= 1.0:
        raise ParameterError(f"infeasible parameters: lam ratio t={t:.4g} <= 1 (rho degenerate)")
    lam = (1 + nu) * (t - 1.0) ** 2
    rho = math.sqrt(lam / (1 + nu))
    if rho < 1.5:
        raise ParameterError(f"infeasible parameters: rho={rho:.4g} < 1.5")
    s = int(math.floor(L * n / (2.0 * math.e * lam)))
    gap = moment_gap_value(nu, lam, L)
    if gap < 2 * eps:
        raise ParameterError(f"gap {gap:.4g} below 2*eps={2 * eps:.4g}")
    return ParameterAssignment(nu=nu, lam=lam, s=s, gap=gap, rho=rho, L=L, n=n, eps=eps)


@dataclass
class LBInstance:
    """One draw of the two-step process for both priors."""

    n: int
    s: int
    raw_big: np.ndarray
    raw_far: np.ndarray
    zero_count: int
    hist_big: np.ndarray
    hist_far: np.ndarray
    event_big: bool
    event_far: bool
    norm_big: Distribution | None = None
    norm_far: Distribution | None = None
    p_max: float = field(default=0.0)


def _draw_atoms(atoms: np.ndarray, mass: np.ndarray, n: int, rng: Rng) -> np.ndarray:
    idx = rng.gen.choice(atoms.size, size=n, p=mass / mass.sum())
    return atoms[idx]


def generate_instance(priors: MomentPriors, n: int, s: int, rng: Rng) -> LBInstance:
    """Step 1 draws n i.i.d. prior weights per side; step 2 Poissonizes.

    Event flags: the big side needs raw mass within nu of 1 and more than
    s(1-nu)/2 total samples; the far side additionally needs at least
    beta*n*gap/2 zero-weight elements.
    """
    vs_big = _draw_atoms(priors.atoms_big, priors.mass_big, n, rng)
    vs_far = _draw_atoms(priors.atoms_far, priors.mass_far, n, rng)
    raw_big = vs_big / n
    raw_far = vs_far / n
    hist_big = rng.gen.poisson(s * raw_big) if s > 0 else np.zeros(n, dtype=np.int64)
    hist_far = rng.gen.poisson(s * raw_far) if s > 0 else np.zeros(n, dtype=np.int64)
    zero_count = int(np.count_nonzero(vs_far == 0.0))
    count_floor = s * (1 - priors.nu) / 2.0
    event_big = abs(raw_big.sum() - 1.0) <= priors.nu and hist_big.sum() > count_floor
    event_far = (
        abs(raw_far.sum() - 1.0) <= priors.nu
        and zero_count >= priors.beta * n * priors.gap / 2.0
        and hist_far.sum() > count_floor
    )
    inst = LBInstance(
        n=n,
        s=s,
        raw_big=raw_big,
        raw_far=raw_far,
        zero_count=zero_count,
        hist_big=hist_big.astype(np.int64),
        hist_far=hist_far.astype(np.int64),
        event_big=event_big,
        event_far=event_far,
    )
    if raw_big.sum() > 0:
        inst.norm_big = Distribution.normalized(raw_big)
    if raw_far.sum() > 0:
        inst.norm_far = Distribution.normalized(raw_far)
    peaks = []
    if inst.norm_big is not None:
        peaks.append(inst.norm_big.probs.max())
    if inst.norm_far is not None:
        peaks.append(inst.norm_far.probs.max())
    inst.p_max = float(max(peaks, default=0.0))
    return inst


def fingerprint_stats(hist: np.ndarray) -> tuple[int, int, int, int]:
    """(zero count, singleton count, doubleton count, total samples): the
    label-free summary a symmetric-property tester would look at."""
    return (
        int(np.count_nonzero(hist == 0)),
        int(np.count_nonzero(hist == 1)),
        int(np.count_nonzero(hist == 2)),
        int(hist.sum()),
    )


def _ks_advantage(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Best threshold-classifier advantage between two samples of one statistic
    and the chosen threshold's value."""
    thresholds = np.unique(np.concatenate([a, b]))
    fa = np.searchsorted(np.sort(a), thresholds, side="right") / a.size
    fb = np.searchsorted(np.sort(b), thresholds, side="right") / b.size
    gaps = np.abs(fa - fb)
    k = int(np.argmax(gaps))
    return float(gaps[k]), float(thresholds[k])


def _wilson_halfwidth(p_hat: float, m: int) -> float:
    z = WILSON_Z
    denom = 1 + z * z / m
    half = z * math.sqrt(p_hat * (1 - p_hat) / m + z * z / (4 * m * m)) / denom
    return half


@dataclass(frozen=True)
class ProbeRow:
    s: int
    kept_big: int
    kept_far: int
    best_stat: int
    advantage: float
    ci_half: float


def indistinguishability_probe(
    priors: MomentPriors,
    n: int,
    s_values,
    trials: int,
    rng: Rng,
    max_retries: int = 200,
) -> list[ProbeRow]:
    """Empirical one-sided probe of histogram indistinguishability.

    For every s, draws `trials` event-conditioned instances per side
    (rejection sampling; at s = 0 the sample-count clause is vacuous and only
    the raw-mass clause is enforced), then reports the best advantage any
    single fingerprint statistic achieves as a threshold classifier, with a
    Wilson 95% half-width. This lower-bounds the histogram TV distance; it
    cannot certify an upper bound.
    """
    rows = []
    stream = 1_000_000
    for s in s_values:
        s = int(s)
        stats_big = np.zeros((trials, 4))
        stats_far = np.zeros((trials, 4))
        kept_big = kept_far = 0
        for t in range(trials):
            got_big = got_far = False
            for attempt in range(max_retries):
                sub = rng.derive(stream)
                stream += 1
                inst = generate_instance(priors, n, s, sub)
                ok_big = inst.event_big or (s == 0 and abs(inst.raw_big.sum() - 1) <= priors.nu)
                ok_far = inst.event_far or (
                    s == 0
                    and abs(inst.raw_far.sum() - 1) <= priors.nu
                    and inst.zero_count >= priors.beta * n * priors.gap / 2.0
                )
                if not got_big and ok_big:
                    stats_big[t] = fingerprint_stats(inst.hist_big)
                    got_big = True
                if not got_far and ok_far:
                    stats_far[t] = fingerprint_stats(inst.hist_far)
                    got_far = True
                if got_big and got_far:
                    break
            if not (got_big and got_far):
                raise RuntimeError(f"event conditioning failed after {max_retries} retries at s={s}")
            kept_big += 1
            kept_far += 1
        best_adv, best_stat, best_thr = -1.0, 0, 0.0
        for k in range(4):
            adv, thr = _ks_advantage(stats_big[:, k], stats_far[:, k])
            if adv > best_adv:
                best_adv, best_stat, best_thr = adv, k, thr
        pa = float(np.mean(stats_big[:, best_stat] <= best_thr))
        pb = float(np.mean(stats_far[:, best_stat] <= best_thr))
        ci = _wilson_halfwidth(pa, trials) + _wilson_halfwidth(pb, trials)
        rows.append(
            ProbeRow(
                s=s,
                kept_big=kept_big,
                kept_far=kept_far,
                best_stat=best_stat,
                advantage=best_adv,
                ci_half=ci,
            )
        )
    return rows
