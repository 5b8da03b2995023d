"""Ensemble protocol: equilibration times, run averages, radius sweeps, controls."""

from __future__ import annotations

import enum
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .tdgl import (
    FieldState,
    Integrator,
    NumericalBlowup,
    RingConfig,
    grid_angles,
    init_metastable,
    integrated_current,
    integrator_for,
    linear_symbol,
    make_rng,
    target_mode,
    winding_number,
)

log = logging.getLogger(__name__)

EQUILIBRATION_FRACTION = 0.99
DEFAULT_RUNS = 50
DEFAULT_SNAPSHOT_EVERY = 10


class AmplitudeMeasure(str, enum.Enum):
    """Which amplitude is compared against ``0.99 * sqrt(rate)``.

    ``MEAN_ABS`` is the ring-averaged ``|psi|``; ``MODE`` is the Fourier
    amplitude of the target winding.  ``MODE`` only fires when the run settles
    in exactly that winding, which at larger radii is rare because neighbouring
    windings grow at almost the same rate.
    """

    MEAN_ABS = "mean_abs"
    MODE = "mode"


@dataclass
class Trajectory:
    times: np.ndarray
    mode_amp: np.ndarray  # |c_target|
    mean_abs: np.ndarray  # ring average of |psi|
    J: np.ndarray  # integrated current
    winding: list  # int | None per snapshot
    final: FieldState
    target: int
    blowup: NumericalBlowup | None = None


def _snapshot(psi: np.ndarray, config: RingConfig, target_index: int):
    m = psi.shape[0]
    amp = float(abs(sfft.fft(psi)[target_index]) / m)
    return amp, float(np.mean(np.abs(psi))), integrated_current(psi, config), winding_number(psi, config.noise.sigma)


def simulate(
    config: RingConfig,
    rng: np.random.Generator | None = None,
    initial: FieldState | None = None,
    snapshot_every: int = DEFAULT_SNAPSHOT_EVERY,
) -> Trajectory:
    """Integrate one trajectory from ``initial`` (default: psi = 0) to ``t_max``.

    Snapshots are taken at t = 0 and every ``snapshot_every`` steps.  A
    blow-up ends the run early; the partial trajectory is returned with
    ``blowup`` set.
    """
    if snapshot_every < 1:
        raise ValueError("snapshot_every must be >= 1")
    if rng is None:
        rng = make_rng(config.seed)
    integ: Integrator = integrator_for(config)
    state = initial if initial is not None else init_metastable(config)
    state.validate(config)
    psi = state.psi.copy()
    t0 = state.time
    tgt = target_mode(config)
    tgt_index = tgt % config.grid_points

    times, amps, means, Js, winds = [], [], [], [], []

    def record(t):
        a, mabs, j, w = _snapshot(psi, config, tgt_index)
        times.append(t)
        amps.append(a)
        means.append(mabs)
        Js.append(j)
        winds.append(w)

    record(t0)
    blowup = None
    for s in range(config.n_steps):
        try:
            psi = integ.advance(psi, rng, s)
        except NumericalBlowup as exc:
            blowup = exc
            break
        if (s + 1) % snapshot_every == 0:
            record(t0 + (s + 1) * config.dt)
    return Trajectory(
        times=np.array(times),
        mode_amp=np.array(amps),
        mean_abs=np.array(means),
        J=np.array(Js),
        winding=winds,
        final=FieldState(psi, t0 + (config.n_steps if blowup is None else blowup.step_index) * config.dt),
        target=tgt,
        blowup=blowup,
    )


@dataclass(frozen=True)
class EquilibrationResult:
    t99: float | None
    reached: bool
    final_winding: int | None


def equilibration_threshold(config: RingConfig) -> float:
    rate = linear_symbol(config, target_mode(config))
    if rate <= 0:
        raise ValueError(
            f"target mode {target_mode(config)} has non-positive growth rate {rate}; "
            "no nonzero asymptotic amplitude exists"
        )
    return EQUILIBRATION_FRACTION * math.sqrt(rate)


def first_crossing(times, values, threshold) -> float | None:
    hits = np.nonzero(np.asarray(values) >= threshold)[0]
    return float(times[hits[0]]) if hits.size else None


def _amplitude_series(traj: Trajectory, measure: AmplitudeMeasure) -> np.ndarray:
    return traj.mode_amp if AmplitudeMeasure(measure) is AmplitudeMeasure.MODE else traj.mean_abs


def equilibration_from_trajectory(
    traj: Trajectory, config: RingConfig, measure: AmplitudeMeasure = AmplitudeMeasure.MEAN_ABS
) -> EquilibrationResult:
    thr = equilibration_threshold(config)
    t99 = first_crossing(traj.times, _amplitude_series(traj, measure), thr)
    return EquilibrationResult(t99=t99, reached=t99 is not None, final_winding=traj.winding[-1])


def equilibration_time(
    config: RingConfig,
    rng: np.random.Generator | None = None,
    measure: AmplitudeMeasure = AmplitudeMeasure.MEAN_ABS,
    snapshot_every: int = DEFAULT_SNAPSHOT_EVERY,
) -> EquilibrationResult:
    """First snapshot time at which the amplitude reaches 99% of its asymptote.

    Runs one noisy trajectory from psi = 0; t99 is resolved on the snapshot
    grid (``snapshot_every * dt``).  Raises ``NumericalBlowup`` on divergence.
    """
    equilibration_threshold(config)  # fail fast when no supported mode exists
    traj = simulate(config, rng, snapshot_every=snapshot_every)
    if traj.blowup is not None:
        raise traj.blowup
    return equilibration_from_trajectory(traj, config, measure)


@dataclass
class RunResult:
    run_index: int
    t99: float | None
    final_winding: int | None
    times: np.ndarray | None
    J: np.ndarray | None
    mode_amp: np.ndarray | None
    error: str | None = None


@dataclass
class EnsembleStats:
    n_runs: int
    n_reached: int
    mean_t99: float | None
    std_t99: float | None  # sample std (n-1); None with fewer than two reached runs
    times: np.ndarray
    mean_J: np.ndarray
    std_J: np.ndarray
    mean_mode_amp: np.ndarray
    runs: list[RunResult] = field(default_factory=list)

    @property
    def n_completed(self) -> int:
        return sum(r.error is None for r in self.runs)

    @property
    def failures(self) -> list[dict]:
        return [{"run": r.run_index, "error": r.error} for r in self.runs if r.error is not None]

    @property
    def final_windings(self) -> list[int | None]:
        return [r.final_winding for r in self.runs if r.error is None]

    def per_run_tail_means(self, fraction: float = 0.5) -> np.ndarray:
        """Time average of each completed run's J over the last ``fraction`` of the run."""
        out = []
        for r in self.runs:
            if r.error is None:
                start = int(len(r.J) * (1.0 - fraction))
                out.append(float(np.mean(r.J[start:])))
        return np.array(out)


def _one_run(args) -> RunResult:
    config, run_index, master_seed, measure, snapshot_every = args
    rng = make_rng(master_seed, run_index)
    traj = simulate(config, rng, snapshot_every=snapshot_every)
    if traj.blowup is not None:
        return RunResult(run_index, None, None, None, None, None, error=str(traj.blowup))
    t99 = None
    if linear_symbol(config, target_mode(config)) > 0:
        t99 = equilibration_from_trajectory(traj, config, measure).t99
    return RunResult(run_index, t99, traj.winding[-1], traj.times, traj.J, traj.mode_amp)


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        env = os.environ.get("TDGL_RING_THREADS")
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(threads))


def _map_runs(jobs, threads: int | None):
    threads = resolve_threads(threads)
    if threads == 1 or len(jobs) <= 1:
        return [_one_run(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(threads, len(jobs))) as pool:
        return list(pool.map(_one_run, jobs))


def aggregate(runs: list[RunResult], n_runs: int) -> EnsembleStats:
    """Combine run results in run-index order (summation order is fixed)."""
    runs = sorted(runs, key=lambda r: r.run_index)
    done = [r for r in runs if r.error is None]
    t99s = [r.t99 for r in done if r.t99 is not None]
    mean_t99 = float(np.mean(t99s)) if t99s else None
    std_t99 = float(np.std(t99s, ddof=1)) if len(t99s) >= 2 else None
    if done:
        times = done[0].times
        J = np.vstack([r.J for r in done])
        amps = np.vstack([r.mode_amp for r in done])
        mean_J = J.mean(axis=0)
        std_J = J.std(axis=0, ddof=1) if len(done) >= 2 else np.full_like(mean_J, np.nan)
        mean_amp = amps.mean(axis=0)
    else:
        times = mean_J = std_J = mean_amp = np.array([])
    return EnsembleStats(
        n_runs=n_runs,
        n_reached=len(t99s),
        mean_t99=mean_t99,
        std_t99=std_t99,
        times=times,
        mean_J=mean_J,
        std_J=std_J,
        mean_mode_amp=mean_amp,
        runs=runs,
    )


def run_ensemble(
    config: RingConfig,
    n_runs: int = DEFAULT_RUNS,
    master_seed: int = 0,
    measure: AmplitudeMeasure = AmplitudeMeasure.MEAN_ABS,
    snapshot_every: int = DEFAULT_SNAPSHOT_EVERY,
    threads: int | None = 1,
) -> EnsembleStats:
    """Run ``n_runs`` independent trajectories; run r uses stream (master_seed, r)."""
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    measure = AmplitudeMeasure(measure)
    jobs = [(config, r, master_seed, measure, snapshot_every) for r in range(n_runs)]
    runs = _map_runs(jobs, threads)
    for r in runs:
        if r.error:
            log.warning("run %d failed: %s", r.run_index, r.error)
    return aggregate(runs, n_runs)


def control_run(config: RingConfig, n_runs: int = DEFAULT_RUNS, master_seed: int = 0, **kw) -> EnsembleStats:
    """Zero-flux control on the same grid and noise settings."""
    if config.flux_norm != 0:
        raise ValueError("control_run expects a zero-flux config; use config.with_(flux_norm=0.0)")
    return run_ensemble(config, n_runs, master_seed, **kw)


def coarse_grid_run(config: RingConfig, n_runs: int = DEFAULT_RUNS, master_seed: int = 0, **kw) -> EnsembleStats:
    """Ensemble on a grid deliberately too coarse to hold the selected winding.

    The field then only follows a slowly varying envelope; equilibration is
    measured on the ring-averaged amplitude.
    """
    if not config.coarse_grid:
        config = config.with_(coarse_grid=True)
    kw.setdefault("measure", AmplitudeMeasure.MEAN_ABS)
    return run_ensemble(config, n_runs, master_seed, **kw)


# -- sweep ------------------------------------------------------------------


def sweep_radius(i: int) -> float:
    return 1.5 * 10.0 ** (i / 2)


def _ceil_sqrt10_pow(i: int) -> int:
    # exact ceil(sqrt(10)**i); the float power gives 10.000000000000002 at i = 2
    if i <= 0:
        return 1
    n = 10**i
    r = math.isqrt(n)
    return r if r * r == n else r + 1


def sweep_flux(i: int) -> float:
    return _ceil_sqrt10_pow(int(i)) + 0.2


@dataclass(frozen=True)
class SweepSpec:
    indices: tuple[int, ...]
    base_config: RingConfig
    runs_per_point: int = DEFAULT_RUNS
    master_seed: int = 0
    measure: AmplitudeMeasure = AmplitudeMeasure.MEAN_ABS

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        object.__setattr__(self, "measure", AmplitudeMeasure(self.measure))
        if self.runs_per_point < 1:
            raise ValueError("runs_per_point must be >= 1")

    def point_config(self, i: int) -> RingConfig:
        base = self.base_config
        grid = base.grid_points if base.coarse_grid else None
        return base.with_(radius_norm=sweep_radius(i), flux_norm=sweep_flux(i), grid_points=grid)


@dataclass
class SweepRow:
    i: int
    radius_norm: float
    flux_norm: float
    mean_t99: float | None
    std_t99: float | None
    n_reached: int
    n_runs: int
    error: str | None = None
    stats: EnsembleStats | None = field(default=None, repr=False)


def sweep(spec: SweepSpec, threads: int | None = 1) -> list[SweepRow]:
    rows = []
    for i in spec.indices:
        radius, flux = sweep_radius(i), sweep_flux(i)
        try:
            cfg = spec.point_config(i)
            st = run_ensemble(cfg, spec.runs_per_point, spec.master_seed, spec.measure, threads=threads)
        except (ValueError, NumericalBlowup) as exc:
            log.warning("sweep point i=%d failed: %s", i, exc)
            rows.append(SweepRow(i, radius, flux, None, None, 0, spec.runs_per_point, error=str(exc)))
            continue
        rows.append(SweepRow(i, radius, flux, st.mean_t99, st.std_t99, st.n_reached, st.n_runs, stats=st))
    return rows


def coefficient_of_variation(values) -> float:
    v = np.asarray([x for x in values if x is not None], dtype=float)
    if v.size < 2:
        raise ValueError("need at least two values")
    return float(np.std(v, ddof=1) / np.mean(v))


# -- organized-current statistics -------------------------------------------


@dataclass(frozen=True)
class CurrentSummary:
    mean: float  # across-run mean of per-run tail-averaged J
    stderr: float  # its standard error
    n: int


def tail_current(stats: EnsembleStats, fraction: float = 0.5) -> CurrentSummary:
    """Second-half time average of J per run, summarized across runs."""
    per_run = stats.per_run_tail_means(fraction)
    if per_run.size == 0:
        raise ValueError("no completed runs")
    se = float(np.std(per_run, ddof=1) / math.sqrt(per_run.size)) if per_run.size > 1 else 0.0
    return CurrentSummary(float(np.mean(per_run)), se, int(per_run.size))


def is_organized(flux: CurrentSummary, control: CurrentSummary, factor: float = 5.0) -> bool:
    """Flux-run mean current exceeds ``factor`` control standard errors.

    A noiseless control has zero standard error, so any nonzero mean counts.
    """
    return abs(flux.mean) > factor * control.stderr and flux.mean != 0.0


def within_noise(control: CurrentSummary, factor: float = 3.0) -> bool:
    return abs(control.mean) <= factor * control.stderr


def seeded_mode(config: RingConfig, k: int, epsilon: float) -> FieldState:
    """Plane wave ``sqrt(epsilon) exp(i k phi)``, the single-mode seed used for oracle runs."""
    return FieldState(math.sqrt(epsilon) * np.exp(1j * k * grid_angles(config.grid_points)), 0.0)
