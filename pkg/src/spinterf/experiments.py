"""Figure-level computations: time series, Delta sweeps, pairwise fidelities.

Work is split into independent items (time chunks or sweep points) and run
on a bounded thread pool; results are always returned in input order, so
output does not depend on ``jobs``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import argrelextrema

from .channel import reduced_propagator_numeric
from .dynamics import (
    SpectralPropagator,
    amplitudes,
    decompose,
    evolve,
    matrix_elements,
    time_grid,
)
from .hamiltonians import ChainSpec, Model, build_full_space, build_single_excitation
from .measures import (
    fidelity,
    fidelity_exact,
    interference,
    interference_unitary,
    pairwise_fidelity,
    reduced_interference_closed,
)

__all__ = [
    "TimeSeriesRecord",
    "SweepPoint",
    "SweepResult",
    "run_time_series",
    "run_delta_sweep",
    "run_pairwise_fidelities",
    "golden_section_max",
    "find_global_max",
    "estimate_transfer_time",
    "first_transfer_time",
    "pearson",
    "upper_envelope",
    "envelope_correlation",
    "minima_alignment",
]

CHUNK = 512
GRID_POINTS_MIN = 2000
INV_PHI = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class TimeSeriesRecord:
    t: float
    fidelity: float
    i_reduced: float
    i_full: float
    p11: float
    p1N: float
    pairwise: tuple[float, ...] | None = None


@dataclass(frozen=True)
class SweepPoint:
    param: float
    t_star: float
    max_f1N: float
    i_r_at_max: float


@dataclass(frozen=True)
class SweepResult:
    parameter: str
    window: tuple[float, float]
    points: list[SweepPoint] = field(default_factory=list)

    @property
    def values(self) -> np.ndarray:
        return np.array([p.param for p in self.points])

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(p, name) for p in self.points])


def _pool_map(fn, items, jobs: int = 1):
    items = list(items)
    if jobs is None or jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def is_mirror_symmetric(spec: ChainSpec) -> bool:
    b = spec.fields()
    jxy, jz = spec.bond_couplings()
    return bool(
        np.array_equal(b, b[::-1]) and np.array_equal(jxy, jxy[::-1]) and np.array_equal(jz, jz[::-1])
    )


def _conserving_chunk(sp: SpectralPropagator, symmetric: bool, align_phase: bool, n_sites: int,
                      pairwise: bool):
    def work(times):
        amps = amplitudes(sp, times)
        u = evolve(sp, times)
        cols = {
            "fidelity": fidelity(amps, align_phase),
            "i_reduced": reduced_interference_closed(amps, symmetric),
            "i_full": interference_unitary(u),
            "p11": amps.p11,
            "p1N": amps.p1N,
        }
        if pairwise:
            cols["pairwise"] = pairwise_fidelity(u[:, 1, 1 : n_sites + 1])
        return cols

    return work


def _full_space_chunk(sp: SpectralPropagator, n_sites: int, pairwise: bool, align_phase: bool):
    def work(times):
        amps = amplitudes(sp, times)
        i_r, fid = [], []
        for t in times:
            p = reduced_propagator_numeric(sp, n_sites, t)
            i_r.append(interference(p))
            fid.append(fidelity_exact(p, align_phase))
        cols = {
            "fidelity": np.array(fid),
            "i_reduced": np.array(i_r),
            "i_full": interference_unitary(evolve(sp, times)),
            "p11": amps.p11,
            "p1N": amps.p1N,
        }
        if pairwise:
            sites = [sp.site_index(j) for j in range(1, n_sites + 1)]
            f = matrix_elements(sp, [sp.site_index(1)], sites, times)[:, 0, :]
            cols["pairwise"] = pairwise_fidelity(f)
        return cols

    return work


def run_time_series(
    spec: ChainSpec,
    t_max: float,
    n_steps: int | None = None,
    *,
    align_phase: bool = True,
    pairwise: bool = False,
    jobs: int = 1,
) -> list[TimeSeriesRecord]:
    """Fidelity, reduced and full interference and end populations versus time.

    Conserving chains run in the (N+1)-dimensional single-excitation space:
    the reduced interference comes from the closed form (mirror-symmetric
    or general) and the full interference is that of the (N+1)x(N+1)
    propagator, normalised by N.  A flux-qubit chain with ``delta > 0`` runs
    in the full 2**N space with the reduced channel extracted numerically;
    its full interference is normalised by ``2**N - 1`` and its fidelity is
    the exact Bloch average of the extracted channel (with ``align_phase``,
    after the best z-rotation of the output spin).

    ``n_steps`` counts grid points on ``[0, t_max]``; omitted, it is chosen
    from the spectrum (see :func:`spinterf.dynamics.time_grid`).
    """
    n = spec.n_sites
    if spec.conserves_excitations:
        sp = decompose(build_single_excitation(spec))
        work = _conserving_chunk(sp, is_mirror_symmetric(spec), align_phase, n, pairwise)
    else:
        sp = decompose(build_full_space(spec))
        work = _full_space_chunk(sp, n, pairwise, align_phase)
    times = time_grid(sp, t_max, n_steps)
    chunks = [times[i : i + CHUNK] for i in range(0, len(times), CHUNK)]
    parts = _pool_map(work, chunks, jobs)
    cols = {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}

    records = []
    for i, t in enumerate(times):
        records.append(
            TimeSeriesRecord(
                t=float(t),
                fidelity=float(cols["fidelity"][i]),
                i_reduced=float(cols["i_reduced"][i]),
                i_full=float(cols["i_full"][i]),
                p11=float(cols["p11"][i]),
                p1N=float(cols["p1N"][i]),
                pairwise=tuple(float(x) for x in cols["pairwise"][i]) if pairwise else None,
            )
        )
    return records


def run_pairwise_fidelities(
    spec: ChainSpec, t_max: float, n_steps: int | None = None, *, jobs: int = 1
) -> list[TimeSeriesRecord]:
    """Time series carrying ``F_1j`` for j = 1..N alongside the usual columns."""
    if not spec.conserves_excitations:
        raise ValueError("pairwise fidelities are defined for excitation-conserving chains")
    return run_time_series(spec, t_max, n_steps, pairwise=True, jobs=jobs)


def golden_section_max(f, a: float, b: float, xtol: float) -> tuple[float, float]:
    """Maximise a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x))``."""
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > xtol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    x = (a + b) / 2
    return x, f(x)


def find_global_max(f, window: tuple[float, float], n_grid: int = GRID_POINTS_MIN,
                    rtol: float = 1e-8) -> tuple[float, float]:
    """Global maximum of an oscillatory function of time.

    ``f`` must accept an array of times.  A dense grid picks the best sample
    (earliest on ties) and golden-section search refines it inside the two
    neighbouring grid cells.
    """
    lo, hi = window
    if not hi > lo:
        raise ValueError(f"window must have positive length, got {window}")
    grid = np.linspace(lo, hi, max(n_grid, GRID_POINTS_MIN))
    values = np.asarray(f(grid))
    k = int(np.argmax(values))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    x, fx = golden_section_max(lambda s: float(f(np.array([s]))[0]), a, b, rtol * (hi - lo))
    if fx >= values[k]:
        return float(x), float(fx)
    return float(grid[k]), float(values[k])


def _sweep_point(base: ChainSpec, window, n_grid, rtol):
    def work(delta):
        spec = base.with_delta(float(delta))
        sp = decompose(build_full_space(spec))
        i1, iN = sp.site_index(1), sp.site_index(spec.n_sites)

        def f1N(times):
            return np.abs(matrix_elements(sp, [i1], [iN], times)[..., 0, 0])

        t_star, best = find_global_max(f1N, window, n_grid, rtol)
        i_r = interference(reduced_propagator_numeric(sp, spec.n_sites, t_star))
        return SweepPoint(float(delta), t_star, best, i_r)

    return work


def run_delta_sweep(
    base: ChainSpec,
    delta_grid,
    window: tuple[float, float] | None = None,
    *,
    n_grid: int = GRID_POINTS_MIN,
    rtol: float = 1e-8,
    jobs: int = 1,
) -> SweepResult:
    """Global maximum of ``|<1|U(t)|N>|`` over a time window, for each Delta.

    The reduced interference of the numerically extracted two-spin channel
    is recorded at the maximising time.  ``window`` defaults to
    ``[0, 1/J_xy]``.
    """
    if base.model is not Model.FLUX_QUBIT:
        raise ValueError("delta sweeps require a flux-qubit chain")
    grid = np.asarray(delta_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("delta grid must be a non-empty 1-d sequence")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("delta grid must be strictly increasing")
    if window is None:
        window = (0.0, 1.0 / abs(base.j_xy))
    window = (float(window[0]), float(window[1]))
    if not window[1] > window[0] or window[0] < 0:
        raise ValueError(f"window must satisfy 0 <= start < stop, got {window}")
    points = _pool_map(_sweep_point(base, window, n_grid, rtol), grid, jobs)
    return SweepResult("delta", window, points)


def estimate_transfer_time(sp: SpectralPropagator) -> float:
    """Half-period of the beat between the two eigenmodes with most weight on site 1.

    Exact for two-level transfer and a good guide for weak-end chains, where
    the end spins hybridise into a nearly degenerate doublet.
    """
    weights = np.abs(sp.eigenvectors[sp.site_index(1)]) ** 2
    a, b = np.argsort(weights)[-2:]
    return float(np.pi / abs(sp.eigenvalues[a] - sp.eigenvalues[b]))


def first_transfer_time(spec: ChainSpec, rtol: float = 1e-8) -> float:
    """Time of the fidelity maximum of the first end-to-end transfer."""
    sp = decompose(build_single_excitation(spec))
    guess = estimate_transfer_time(sp)
    n_grid = max(GRID_POINTS_MIN, int(1.25 * guess / (np.pi / 20 / np.ptp(sp.eigenvalues))))
    i1, iN = sp.site_index(1), sp.site_index(spec.n_sites)

    def f1N(times):
        return np.abs(matrix_elements(sp, [iN], [i1], times)[..., 0, 0])

    t_star, _ = find_global_max(f1N, (0.0, 1.25 * guess), n_grid, rtol)
    return t_star


def pearson(x, y) -> float:
    return float(np.corrcoef(np.asarray(x, float), np.asarray(y, float))[0, 1])


def upper_envelope(t, y, width: float):
    """Maxima of ``y`` over consecutive windows of ``width``; returns ``(centres, maxima)``."""
    t = np.asarray(t)
    y = np.asarray(y)
    edges = np.arange(t[0], t[-1] + width * 1e-9, width)
    centres, maxima = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        m = (t >= lo) & (t < hi)
        if m.any():
            centres.append((lo + hi) / 2)
            maxima.append(y[m].max())
    return np.array(centres), np.array(maxima)


def envelope_correlation(spec: ChainSpec, records: list[TimeSeriesRecord], periods: float = 5) -> float:
    """Correlation between the upper envelope of I_full and I_r at the window centres.

    The window spans ``periods`` fast periods, the fast period being
    ``2 pi`` over the spectral width of the single-excitation Hamiltonian.
    """
    sp = decompose(build_single_excitation(spec))
    width = periods * 2 * np.pi / np.ptp(sp.eigenvalues)
    t = np.array([r.t for r in records])
    i_full = np.array([r.i_full for r in records])
    i_r = np.array([r.i_reduced for r in records])
    centres, env = upper_envelope(t, i_full, width)
    i_r_centres = np.interp(centres, t, i_r)
    return pearson(env, i_r_centres)


def minima_alignment(records: list[TimeSeriesRecord], horizon: float = 1.5) -> dict:
    """Compare the deepest full-interference dip with the first transfer maximum.

    Looks at the first local maximum of ``|f_1N|^2`` (time ``t_first``) and
    the deepest local minimum of I_full in ``(0, horizon * t_first]``.
    Returns both times, their separation in grid steps, and the times of all
    local I_full minima and of local maxima of each ``F_1j``.
    """
    t = np.array([r.t for r in records])
    i_full = np.array([r.i_full for r in records])
    p1N = np.array([r.p1N for r in records])
    maxima = argrelextrema(p1N, np.greater)[0]
    if maxima.size == 0:
        raise ValueError("no transfer maximum inside the series")
    first = maxima[0]
    minima = argrelextrema(i_full, np.less)[0]
    window = minima[(minima > 0) & (t[minima] <= horizon * t[first])]
    if window.size == 0:
        raise ValueError("no full-interference minimum before the horizon")
    deepest = window[np.argmin(i_full[window])]
    out = {
        "t_first_transfer": float(t[first]),
        "t_deepest_minimum": float(t[deepest]),
        "steps_apart": int(abs(deepest - first)),
        "i_full_minima": t[minima].tolist(),
    }
    if records[0].pairwise is not None:
        pw = np.array([r.pairwise for r in records])
        out["pairwise_maxima"] = [t[argrelextrema(pw[:, j], np.greater)[0]].tolist()
                                  for j in range(pw.shape[1])]
    return out
