"""Period sweeps under dose conservation, plane scans and adding checks.

Dose conservation keeps the average input Q = A*d fixed while the period
varies.  Two parametrizations are provided:

* :class:`WidthCorrection` keeps (A, d) fixed, so the pulse stretches with T.
* :class:`AmplitudeCorrection` keeps the pulse duration fixed and rescales
  the amplitude, tracing (d, 1/A) = (delta/T, delta/(Q*T)).

A sweep samples the attractor at each period and optionally refines near
firing-number steps by bisection, sharpening the staircase edges.  Node
evaluations are pure, so grids can be mapped over worker processes with
results merged by index; output is identical for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

from .model import Forcing, IntegrationError, Model
from .strobe import OrbitOptions, OrbitSummary, SpikeRunawayError, attractor, _least_rotation

__all__ = [
    "WidthCorrection",
    "AmplitudeCorrection",
    "DoseMode",
    "StaircaseSample",
    "PlaneScan",
    "AddingCheck",
    "AddingReport",
    "Window",
    "sweep_T",
    "scan_plane",
    "verify_adding",
]


@dataclass(frozen=True)
class WidthCorrection:
    """Fixed amplitude and duty cycle; the pulse widens with the period."""

    A: float
    d: float

    @property
    def dose(self) -> float:
        return self.A * self.d

    def forcing_at(self, T: float) -> Forcing:
        return Forcing(A=self.A, T=T, d=self.d)


@dataclass(frozen=True)
class AmplitudeCorrection:
    """Fixed pulse duration; the amplitude rescales to conserve the dose.

    Defined for T > delta only (the duty cycle must stay below 1); periods at
    or below the pulse duration are nudged just above it by the sweep.
    """

    delta: float
    Q: float

    @property
    def dose(self) -> float:
        return self.Q

    def forcing_at(self, T: float) -> Forcing:
        if T <= self.delta:
            raise ValueError(f"period T = {T} must exceed the pulse duration {self.delta}")
        return Forcing(A=self.Q * T / self.delta, T=T, d=self.delta / T)


DoseMode = Union[WidthCorrection, AmplitudeCorrection]


@dataclass(frozen=True)
class StaircaseSample:
    """One sweep node: exact firing/rotation numbers plus convergence flags."""

    T: float
    eta: Fraction
    rho: Fraction
    rate: float
    word: str
    period_p: int
    converged: bool
    contraction_ok: bool


@dataclass(frozen=True)
class PlaneScan:
    """Attractor period and firing-number over a (d, 1/A) grid at fixed T.

    Matrices are indexed [i_d, i_invA].  Nodes where no period at or below
    the cap was confirmed are flagged in ``capped`` (period 0, eta NaN);
    nodes whose evaluation raised are flagged in ``failed``.
    """

    T: float
    d_grid: np.ndarray
    invA_grid: np.ndarray
    period: np.ndarray
    eta: np.ndarray
    capped: np.ndarray
    failed: np.ndarray


def _to_sample(T: float, orbit: OrbitSummary) -> StaircaseSample:
    return StaircaseSample(
        T=T,
        eta=orbit.eta,
        rho=orbit.rho,
        rate=orbit.rate,
        word=orbit.word,
        period_p=orbit.period_p,
        converged=orbit.converged,
        contraction_ok=orbit.contraction_margin > 0.0,
    )


def _eval_sweep_node(task: tuple[Model, DoseMode, float, OrbitOptions]) -> StaircaseSample:
    model, mode, T, opts = task
    try:
        orbit = attractor(model, mode.forcing_at(T), opts)
    except (SpikeRunawayError, IntegrationError) as exc:
        raise type(exc)(f"at node T={T}: {exc}") from exc
    return _to_sample(T, orbit)


def _pmap(fn, tasks: Sequence, workers: int) -> list:
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    chunk = max(1, len(tasks) // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=chunk))


def sweep_T(
    model: Model,
    mode: DoseMode,
    t_range: tuple[float, float],
    resolution: int,
    refine: bool = False,
    opts: OrbitOptions | None = None,
    workers: int = 1,
) -> list[StaircaseSample]:
    """Sample the firing-rate staircase on a uniform period grid.

    With ``refine`` the gap between neighbours of different firing-number is
    bisected until it shrinks below a hundredth of the initial spacing, which
    pins step edges to that width.  Samples come back sorted by period.
    """
    t_min, t_max = t_range
    if not (0.0 < t_min < t_max):
        raise ValueError("period range must satisfy 0 < t_min < t_max")
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    if opts is None:
        opts = OrbitOptions()
    if isinstance(mode, AmplitudeCorrection) and t_min <= mode.delta:
        t_min = mode.delta * (1.0 + 1e-12)
        if t_min >= t_max:
            raise ValueError("period range lies at or below the pulse duration")
    spacing = (t_max - t_min) / (resolution - 1)
    grid = [t_min + i * spacing for i in range(resolution - 1)] + [t_max]
    samples = _pmap(_eval_sweep_node, [(model, mode, T, opts) for T in grid], workers)
    samples.sort(key=lambda s: s.T)
    if not refine:
        return samples
    min_gap = spacing / 100.0
    while True:
        mids = []
        for left, right in zip(samples, samples[1:]):
            if left.eta != right.eta and (right.T - left.T) > min_gap:
                mids.append(0.5 * (left.T + right.T))
        if not mids:
            return samples
        new = _pmap(_eval_sweep_node, [(model, mode, T, opts) for T in mids], workers)
        samples = sorted(samples + new, key=lambda s: s.T)


def _eval_plane_node(
    task: tuple[Model, float, float, float, int, OrbitOptions]
) -> tuple[int, float, bool, bool]:
    model, T, d, invA, cap, opts = task
    try:
        forcing = Forcing(A=1.0 / invA, T=T, d=d)
        orbit = attractor(model, forcing, opts)
    except Exception:
        return 0, math.nan, False, True
    if orbit.converged and orbit.period_p <= cap:
        return orbit.period_p, float(orbit.eta), False, False
    return 0, math.nan, True, False


def scan_plane(
    model: Model,
    T: float,
    d_grid: Iterable[float],
    invA_grid: Iterable[float],
    period_cap: int = 20,
    opts: OrbitOptions | None = None,
    workers: int = 1,
) -> PlaneScan:
    """Attractor period (capped) and firing-number over a (d, 1/A) grid.

    Node order is row-major over d then 1/A, so results are deterministic.
    Per-node failures are recorded and the scan continues.
    """
    d_vals = np.asarray(list(d_grid), dtype=float)
    a_vals = np.asarray(list(invA_grid), dtype=float)
    if d_vals.size == 0 or a_vals.size == 0:
        raise ValueError("grids must be nonempty")
    if np.any(d_vals <= 0.0) or np.any(d_vals >= 1.0):
        raise ValueError("duty-cycle grid must lie inside (0, 1)")
    if np.any(a_vals <= 0.0):
        raise ValueError("1/A grid must be strictly positive")
    if opts is None:
        opts = OrbitOptions(max_period=max(period_cap, 2))
    else:
        opts = OrbitOptions(
            transient=opts.transient,
            max_period=max(period_cap, 2),
            seed=opts.seed,
            state_tol=opts.state_tol,
            spike_cap=opts.spike_cap,
            compute_margin=False,
        )
    tasks = [(model, T, d, invA, period_cap, opts) for d in d_vals for invA in a_vals]
    results = _pmap(_eval_plane_node, tasks, workers)
    shape = (d_vals.size, a_vals.size)
    period = np.zeros(shape, dtype=int)
    eta = np.full(shape, math.nan)
    capped = np.zeros(shape, dtype=bool)
    failed = np.zeros(shape, dtype=bool)
    for idx, (p, e, c, f) in enumerate(results):
        i, j = divmod(idx, a_vals.size)
        period[i, j] = p
        eta[i, j] = e
        capped[i, j] = c
        failed[i, j] = f
    return PlaneScan(
        T=T, d_grid=d_vals, invA_grid=a_vals, period=period, eta=eta, capped=capped, failed=failed
    )


@dataclass(frozen=True)
class Window:
    """Maximal run of sweep samples sharing one firing-number."""

    eta: Fraction
    t_lo: float
    t_hi: float
    word: str
    rho: Fraction
    period_p: int
    count: int


@dataclass(frozen=True)
class AddingCheck:
    """Outcome of one mediant test between neighbouring windows.

    ``status`` is "ok" when the mediant window was found and passed all
    applicable tests, "violation" when it was found but its word or rotation
    number disagrees with the concatenation rule, and "unresolved" when the
    sampling never resolved a window at the mediant value (a coverage gap,
    not a counterexample).
    """

    left: Window
    right: Window
    mediant: Fraction
    expected_word: str | None
    found: Window | None
    status: str
    detail: str = ""


@dataclass(frozen=True)
class AddingReport:
    windows: tuple[Window, ...]
    checks: tuple[AddingCheck, ...]

    @property
    def violations(self) -> tuple[AddingCheck, ...]:
        return tuple(c for c in self.checks if c.status == "violation")

    @property
    def unresolved(self) -> tuple[AddingCheck, ...]:
        return tuple(c for c in self.checks if c.status == "unresolved")


def _extract_windows(samples: Sequence[StaircaseSample]) -> list[Window]:
    windows: list[Window] = []
    run: list[StaircaseSample] = []
    for s in sorted(samples, key=lambda s: s.T):
        if not (s.converged and s.contraction_ok):
            run = []
            continue
        if run and s.eta != run[0].eta:
            windows.append(_close_window(run))
            run = []
        run.append(s)
    if run:
        windows.append(_close_window(run))
    return windows


def _close_window(run: list[StaircaseSample]) -> Window:
    first = run[0]
    return Window(
        eta=first.eta,
        t_lo=first.T,
        t_hi=run[-1].T,
        word=first.word,
        rho=first.rho,
        period_p=first.period_p,
        count=len(run),
    )


def _band_word(window: Window, band: int) -> str | None:
    """Itinerary of the window in the coding of the unit band [band, band+1].

    Integer windows sit at the band edges and read "L" or "R" there; interior
    windows keep their observed word, whose coding already matches the band.
    """
    if window.eta == band:
        return "L"
    if window.eta == band + 1:
        return "R"
    if band < window.eta < band + 1:
        return window.word
    return None


def verify_adding(samples: Sequence[StaircaseSample]) -> AddingReport:
    """Check the period-adding/Farey structure of a (refined) sweep.

    Every pair of windows whose firing numbers are Farey neighbours
    (|n1*p2 - n2*p1| = 1) brackets the window of their mediant; when a window
    at the mediant value was sampled between the pair, its word must be the
    cyclically-minimal concatenation of the pair's words (in the coding of
    their unit band) and its rotation number the mediant of theirs.  Pairs
    whose mediant window was never resolved by the sampling are reported as
    unresolved rather than violations, since no finite grid exhausts the
    staircase.
    """
    windows = _extract_windows(samples)
    checks: list[AddingCheck] = []
    for i, left in enumerate(windows):
        for right in windows[i + 1 :]:
            if left.eta >= right.eta:
                continue
            cross = (
                right.eta.numerator * left.eta.denominator
                - left.eta.numerator * right.eta.denominator
            )
            if cross != 1:
                continue
            mediant = Fraction(
                left.eta.numerator + right.eta.numerator,
                left.eta.denominator + right.eta.denominator,
            )
            found = next(
                (
                    w
                    for w in windows
                    if w.eta == mediant and left.t_hi < w.t_lo and w.t_hi < right.t_lo
                ),
                None,
            )
            band = math.floor(left.eta)
            sigma = _band_word(left, band)
            omega = _band_word(right, band)
            expected_word = None
            if sigma is not None and omega is not None:
                expected_word = _least_rotation(sigma + omega)
            if found is None:
                checks.append(
                    AddingCheck(
                        left=left,
                        right=right,
                        mediant=mediant,
                        expected_word=expected_word,
                        found=None,
                        status="unresolved",
                        detail=f"no window at {mediant} sampled in ({left.t_hi}, {right.t_lo})",
                    )
                )
                continue
            problems = []
            if expected_word is not None:
                if found.word != expected_word:
                    problems.append(f"word {found.word} != {expected_word}")
                rho_expected = Fraction(expected_word.count("R"), len(expected_word))
                if found.rho != rho_expected:
                    problems.append(f"rotation {found.rho} != {rho_expected}")
            checks.append(
                AddingCheck(
                    left=left,
                    right=right,
                    mediant=mediant,
                    expected_word=expected_word,
                    found=found,
                    status="violation" if problems else "ok",
                    detail="; ".join(problems),
                )
            )
    return AddingReport(windows=tuple(windows), checks=tuple(checks))
