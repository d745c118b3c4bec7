"""Stroboscopic map with reset, its discontinuity boundary and attractors.

One application of the map flows the pulsed system for a full period T:
drive A on (0, d*T], drive 0 on (d*T, T], resetting to 0 at every threshold
crossing.  Spikes can only occur during (0, d*T]; the map is smooth except at
the single state ``sigma`` whose trajectory reaches the threshold exactly
when the pulse ends.  States at or right of ``sigma`` perform n spikes per
period, states left of it n-1 (right-branch convention at the boundary
itself).

Periodic attractors are detected by iterating the map, with symbolic
itineraries over {L, R} taken relative to ``sigma``:  R marks orbit points on
or right of the boundary.  The firing-number n/p and rotation number (#R)/p
are kept as exact rationals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from scipy.optimize import brentq

from .model import Forcing, LinearModel, Model, flow, time_to_threshold

__all__ = [
    "SpikeRunawayError",
    "StrobeResult",
    "BoundaryInfo",
    "OrbitOptions",
    "OrbitSummary",
    "strobe",
    "boundary_sigma",
    "fixed_point",
    "attractor",
    "rotation_number",
]

#: Default cap on spikes within one map application.
SPIKE_CAP = 10**6

#: Default state tolerance for recurrence detection.
STATE_TOL = 1e-9

#: State tolerance for boundary bisection.
SIGMA_TOL = 1e-12


class SpikeRunawayError(RuntimeError):
    """Spike count exceeded the guard cap within a single map application."""


@dataclass(frozen=True)
class StrobeResult:
    """One application of the map: image point, spike count, spike times."""

    image: float
    spikes: int
    spike_times: tuple[float, ...]


@dataclass(frozen=True)
class BoundaryInfo:
    """Discontinuity of the map: states >= sigma spike ``n`` times per period."""

    sigma: float
    n: int


@dataclass(frozen=True)
class OrbitOptions:
    """Iteration budget and tolerances for attractor detection."""

    transient: int = 10_000
    max_period: int = 10_000
    seed: float = 0.0
    state_tol: float = STATE_TOL
    spike_cap: int = SPIKE_CAP
    compute_margin: bool = True


@dataclass(frozen=True)
class OrbitSummary:
    """Detected periodic attractor of the stroboscopic map.

    ``eta`` = spikes_n / period_p and ``rho`` = (#R) / period_p are exact
    rationals; ``rate`` = eta / T.  ``word`` is the itinerary in its
    lexicographically minimal cyclic rotation; when no boundary lies in
    [0, theta) the orbit is single-branch and the word is "L" * p by
    convention.  ``converged`` is False when no recurrence was found within
    the budget, in which case the fields describe the best candidate cycle.
    """

    period_p: int
    spikes_n: int
    word: str
    eta: Fraction
    rho: Fraction
    rate: float
    points: tuple[float, ...]
    converged: bool
    contraction_margin: float
    single_branch: bool


def strobe(model: Model, forcing: Forcing, x0: float, spike_cap: int = SPIKE_CAP) -> StrobeResult:
    """Flow x0 through one full period of the square-wave drive.

    A crossing exactly at the pulse end t = d*T still counts as a spike, so
    the map takes its right-branch value on the boundary.
    """
    theta = model.theta
    if not 0.0 <= x0 < theta:
        raise ValueError(f"x0 = {x0} outside the map domain [0, {theta})")
    pulse = forcing.pulse_width
    elapsed = 0.0
    x = x0
    times: list[float] = []
    while True:
        hit = time_to_threshold(model, forcing.A, x)
        if hit is None:
            break
        t_spike = elapsed + hit
        if t_spike > pulse:
            break
        times.append(t_spike)
        if len(times) > spike_cap:
            raise SpikeRunawayError(
                f"more than {spike_cap} spikes in one period (A={forcing.A}, T={forcing.T})"
            )
        x = 0.0
        elapsed = t_spike
    x = flow(model, forcing.A, pulse - elapsed, x)
    image = flow(model, 0.0, forcing.T - pulse, x)
    return StrobeResult(image=image, spikes=len(times), spike_times=tuple(times))


def _spike_count(model: Model, forcing: Forcing, x0: float, spike_cap: int) -> int:
    return strobe(model, forcing, x0, spike_cap).spikes


def _snap_to_branch_edge(
    model: Model, forcing: Forcing, sigma: float, n: int, spike_cap: int
) -> float | None:
    """Smallest double spiking n times, searched within a few ulps of sigma."""
    theta = model.theta
    for _ in range(64):
        if sigma >= theta:
            return None
        if _spike_count(model, forcing, sigma, spike_cap) >= n:
            break
        sigma = math.nextafter(sigma, theta)
    else:
        return None
    for _ in range(64):
        below = math.nextafter(sigma, 0.0)
        if below <= 0.0 or _spike_count(model, forcing, below, spike_cap) < n:
            return sigma
        sigma = below
    return None


def boundary_sigma(
    model: Model,
    forcing: Forcing,
    state_tol: float = SIGMA_TOL,
    spike_cap: int = SPIKE_CAP,
) -> BoundaryInfo | None:
    """Unique state whose trajectory reaches the threshold exactly at t = d*T.

    Returns None when every initial state yields the same spike count (in
    particular whenever A <= critical dose).  The returned point always lies
    on the n-spike side: ``strobe(sigma).spikes == n``.
    """
    theta = model.theta
    top = math.nextafter(theta, 0.0)
    if isinstance(model, LinearModel):
        delta = time_to_threshold(model, forcing.A, 0.0)
        if delta is None:
            return None
        pulse = forcing.pulse_width
        n = math.floor(pulse / delta) + 1
        t_first = pulse - (n - 1) * delta
        if t_first <= 0.0:
            return None
        xeq = model.equilibrium(forcing.A)
        sigma = xeq + (theta - xeq) * math.exp(-model.a * t_first)
        sigma = min(max(sigma, 0.0), top)
        snapped = _snap_to_branch_edge(model, forcing, sigma, n, spike_cap)
        if snapped is not None:
            return BoundaryInfo(sigma=snapped, n=n)
        # closed form disagreed with the simulated count; fall through to bisection
    lo = 0.0
    n_lo = _spike_count(model, forcing, lo, spike_cap)
    n_hi = _spike_count(model, forcing, top, spike_cap)
    if n_hi == n_lo:
        return None
    target = n_lo + 1
    hi = top
    while hi - lo > state_tol:
        mid = 0.5 * (lo + hi)
        if _spike_count(model, forcing, mid, spike_cap) >= target:
            hi = mid
        else:
            lo = mid
    return BoundaryInfo(sigma=hi, n=_spike_count(model, forcing, hi, spike_cap))


def fixed_point(
    model: Model, forcing: Forcing, n: int, spike_cap: int = SPIKE_CAP
) -> float | None:
    """Fixed point of the map restricted to its n-spike continuity branch.

    Absent when the requested branch does not exist or its fixed point has
    moved outside the branch domain.
    """
    if n < 0:
        raise ValueError("spike count n must be >= 0")
    theta = model.theta
    top = math.nextafter(theta, 0.0)
    info = boundary_sigma(model, forcing, spike_cap=spike_cap)
    if info is None:
        if _spike_count(model, forcing, 0.0, spike_cap) != n:
            return None
        lo, hi = 0.0, top
    elif n == info.n:
        lo, hi = info.sigma, top
    elif n == info.n - 1:
        lo, hi = 0.0, math.nextafter(info.sigma, 0.0)
    else:
        return None

    def defect(x: float) -> float:
        return strobe(model, forcing, x, spike_cap).image - x

    d_lo = defect(lo)
    d_hi = defect(hi)
    if d_lo == 0.0:
        return lo
    if d_hi == 0.0:
        return hi
    if math.copysign(1.0, d_lo) == math.copysign(1.0, d_hi):
        return None
    root = float(brentq(defect, lo, hi, xtol=1e-14))
    # a sign change at the branch edge is the discontinuity, not a fixed point
    at_root = strobe(model, forcing, root, spike_cap)
    if at_root.spikes != n or abs(at_root.image - root) > 1e-12 * max(1.0, theta):
        return None
    return root


def rotation_number(word: str) -> Fraction:
    """Fraction of R symbols in an itinerary word, as an exact rational."""
    if not word:
        raise ValueError("itinerary word must be nonempty")
    bad = set(word) - {"L", "R"}
    if bad:
        raise ValueError(f"invalid itinerary symbols: {sorted(bad)}")
    return Fraction(word.count("R"), len(word))


def _least_rotation(word: str) -> str:
    """Lexicographically minimal cyclic rotation (Booth's algorithm)."""
    doubled = word + word
    fail = [-1] * len(doubled)
    k = 0
    for j in range(1, len(doubled)):
        sj = doubled[j]
        i = fail[j - k - 1]
        while i != -1 and sj != doubled[k + i + 1]:
            if sj < doubled[k + i + 1]:
                k = j - i - 1
            i = fail[i]
        if sj != doubled[k + i + 1]:
            if sj < doubled[k]:
                k = j
            fail[j - k] = -1
        else:
            fail[j - k] = i + 1
    return word[k:] + word[:k]


def _find_period(states: list[float], counts: list[int], tol: float, max_period: int) -> int | None:
    """Minimal verified period in a recorded trajectory.

    A candidate p needs a recurrence |x_p - x_0| < tol and a full second
    cycle matching both states (within 10*tol) and per-step spike counts;
    the joint check avoids false positives near tangencies.
    """
    n = len(counts)
    for p in range(1, min(n // 2, max_period) + 1):
        if abs(states[p] - states[0]) >= tol:
            continue
        if counts[p : 2 * p] != counts[:p]:
            continue
        if all(abs(states[j + p] - states[j]) < 10.0 * tol for j in range(p)):
            return p
    return None


def _best_candidate(states: list[float], counts: list[int], max_period: int) -> int:
    n = len(counts)
    best_p = 1
    best_err = math.inf
    for p in range(1, min(n, max_period) + 1):
        err = abs(states[p] - states[0])
        if err < best_err:
            best_err = err
            best_p = p
    return best_p


def _contraction_margin(
    model: Model, forcing: Forcing, spike_cap: int = SPIKE_CAP, grid: int = 33
) -> float:
    """Length lost by the right branch under one map application.

    Positive values certify contraction of the branch [sigma, theta) (the
    devil's-staircase regime); non-positive values flag possible expansion.
    For a linear field the branch is affine with slope exp(a*(T - n*delta)),
    so the margin is (theta - sigma) * (1 - slope).  Generic fields use a
    sampled sup of the central-difference derivative, a heuristic bound.
    Without a boundary the single branch is measured the same way.
    """
    theta = model.theta
    info = boundary_sigma(model, forcing, spike_cap=spike_cap)
    if info is None:
        lo = 0.0
        n = _spike_count(model, forcing, 0.0, spike_cap)
    else:
        lo = info.sigma
        n = info.n
    span = theta - lo
    if isinstance(model, LinearModel):
        ndelta = 0.0
        if n:
            delta = time_to_threshold(model, forcing.A, 0.0)
            ndelta = n * delta
        slope = math.exp(model.a * (forcing.T - ndelta))
        return span * (1.0 - slope)
    h = min(1e-6, span * 1e-3)
    top = math.nextafter(theta, 0.0)
    sup = -math.inf
    for i in range(grid):
        x = lo + span * (i + 0.5) / grid
        xl = max(x - h, lo)
        xr = min(x + h, top)
        if xr <= xl:
            continue
        sl = strobe(model, forcing, xl, spike_cap)
        sr = strobe(model, forcing, xr, spike_cap)
        if sl.spikes != n or sr.spikes != n:
            continue
        sup = max(sup, (sr.image - sl.image) / (xr - xl))
    if not math.isfinite(sup):
        return span
    return span * (1.0 - sup)


def attractor(model: Model, forcing: Forcing, opts: OrbitOptions | None = None) -> OrbitSummary:
    """Iterate the map to the periodic attractor and summarize it.

    Burn-in runs until either the budget ``opts.transient`` is spent or an
    approximate return to a stored anchor suggests convergence; the minimal
    period is then extracted from a recorded scan of at most 2*max_period
    further steps.  When no verified recurrence exists within the budget the
    summary carries ``converged=False`` and the closest candidate cycle
    (expected only where the map loses contraction).
    """
    if opts is None:
        opts = OrbitOptions()
    tol = opts.state_tol
    x = opts.seed
    budget = opts.transient
    period = None
    states: list[float] = []
    counts: list[int] = []
    while True:
        # burn-in with doubling anchors (Brent-style early exit)
        anchor = x
        next_anchor = 1
        step = 0
        while step < budget:
            x = strobe(model, forcing, x, opts.spike_cap).image
            step += 1
            if abs(x - anchor) < tol:
                break
            if step == next_anchor:
                anchor = x
                next_anchor *= 2
        budget -= step
        # scan for the minimal verified period
        states = [x]
        counts = []
        chunk = 8
        while len(counts) < 2 * opts.max_period:
            grow = min(chunk, 2 * opts.max_period - len(counts))
            for _ in range(grow):
                r = strobe(model, forcing, x, opts.spike_cap)
                x = r.image
                states.append(x)
                counts.append(r.spikes)
            chunk = min(chunk * 2, 4096)
            period = _find_period(states, counts, tol, opts.max_period)
            if period is not None:
                break
        budget -= len(counts)
        if period is not None or budget <= 0:
            break

    converged = period is not None
    p = period if converged else _best_candidate(states, counts, opts.max_period)
    points = tuple(states[:p])
    n_spikes = sum(counts[:p])

    info = boundary_sigma(model, forcing, spike_cap=opts.spike_cap)
    if info is None:
        word = "L" * p
        single_branch = True
    else:
        word = "".join("R" if pt >= info.sigma else "L" for pt in points)
        single_branch = False
    word = _least_rotation(word)

    margin = (
        _contraction_margin(model, forcing, spike_cap=opts.spike_cap)
        if opts.compute_margin
        else math.nan
    )
    return OrbitSummary(
        period_p=p,
        spikes_n=n_spikes,
        word=word,
        eta=Fraction(n_spikes, p),
        rho=Fraction(word.count("R"), p),
        rate=n_spikes / (p * forcing.T),
        points=points,
        converged=converged,
        contraction_margin=margin,
        single_branch=single_branch,
    )
