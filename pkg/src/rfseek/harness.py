"""Closed-loop episodes, Monte Carlo batches and summary statistics."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .channel import (
    CfoProcess,
    calibrate_gain,
    complex_noise,
    evolve_cfo,
    field_at,
    path_arrays,
    synthesize_batch,
)
from .estimator import estimate_frequencies
from .seeker import STAGE1, InsufficientDataError, Seeker, SeekerConfig, error_step
from .world import (
    TWO_PI,
    Scenario,
    path_geometry,
    place_scatterers,
    scatterer_arrays,
    wrap_angle,
)

FULL = "full"
ABSTRACT = "abstract"
BACKENDS = (FULL, ABSTRACT)

# fixed tags keep each noise source on its own stream
_STREAMS = ("scatterers", "geometry", "cfo", "noise", "bearing", "calibration")

LOG_COLUMNS = ("t", "x", "y", "d", "phi", "theta_k", "theta_star", "omega_tilde", "accepted", "rss")


@dataclass(frozen=True)
class EpisodeOptions:
    """Knobs the reference setup leaves open.

    ``theta_err0`` sets the initial direction error when Stage 1 is skipped;
    ``None`` draws a uniformly random initial direction. ``max_t`` of ``None``
    means four times the straight-line flight time.
    """

    with_stage1: bool = True
    theta_err0: float | None = None
    sigma_phi: float = math.radians(2.0)  # heading tracking error, rad
    sigma_omega: float = TWO_PI * 1.0  # abstract backend only, rad/s
    cfo_drift_std: float = 1.0  # Hz / sqrt(s)
    cfo_init_range: float = 1e3  # Hz
    receiver_noise: bool = True
    max_t: float | None = None


def episode_streams(seed: int, index: int = 0) -> dict[str, np.random.Generator]:
    return {
        tag: np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index, i)))
        for i, tag in enumerate(_STREAMS)
    }


@dataclass
class EpisodeLog:
    columns: dict[str, np.ndarray]
    success: bool
    distance_traveled: float
    t_end: float
    seed: int
    index: int
    backend: str
    shortest_path: float
    stage1_slots: int = 0
    extras: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def n_slots(self) -> int:
        return len(self.columns["t"])

    @property
    def ratio(self) -> float:
        return self.distance_traveled / self.shortest_path

    @property
    def termination(self) -> str:
        return "success" if self.success else "timeout"

    def __getitem__(self, name: str) -> np.ndarray:
        if name in self.columns:
            return self.columns[name]
        return self.extras[name]

    def csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(LOG_COLUMNS)
        cols = [self.columns[c] for c in LOG_COLUMNS]
        for row in zip(*cols):
            writer.writerow([int(v) if isinstance(v, (bool, np.bool_)) else repr(float(v)) for v in row])
        return buf.getvalue()

    def to_csv(self, path: str | Path) -> None:
        atomic_write(path, self.csv_text())

    def summary_line(self) -> str:
        return (
            f"{self.termination} distance={self.distance_traveled:.1f} m "
            f"ratio={self.ratio:.4f} t={self.t_end:.2f} s slots={self.n_slots} "
            f"backend={self.backend} seed={self.seed} index={self.index}"
        )


def atomic_write(path: str | Path, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run_episode(scenario: Scenario, seeker_config: SeekerConfig | None = None, backend: str = FULL,
                seed: int = 0, options: EpisodeOptions | None = None, index: int = 0) -> EpisodeLog:
    """Fly one episode until the UAV is within ``d_v`` of the source or time runs out.

    Each slot the UAV flies its commanded heading (plus tracking error) for
    ``T_slot``, takes one capture, and hands the frequency estimate to the
    seeker. Streams for scatterers, geometry, CFO, receiver noise and bearing
    error are independent, so toggling one leaves the others unchanged.
    """
    if backend not in BACKENDS:
        raise ValueError(f"backend must be one of {BACKENDS}, got {backend!r}")
    opts = options or EpisodeOptions()
    cfg = seeker_config or SeekerConfig()
    if cfg.f_d_max is None:
        cfg = replace(cfg, f_d_max=scenario.f_d_max)
    rng = episode_streams(seed, index)

    scn = scenario
    if scn.scatterers is None:
        scn = scn.with_scatterers(place_scatterers(rng["scatterers"], scn.L, scn.R_in, scn.R))
    scat = scatterer_arrays(scn.scatterers)
    gain = calibrate_gain(scn, rng["calibration"])

    start_angle, circle_heading0, random_theta = rng["geometry"].uniform(-np.pi, np.pi, 3)
    pos = scn.d_init * np.array([math.cos(start_angle), math.sin(start_angle)])
    theta_star0 = wrap_angle(start_angle + np.pi)
    if opts.with_stage1:
        seeker = Seeker(cfg, scn.v * scn.T_slot, circle_heading0=float(circle_heading0))
    else:
        theta0 = random_theta if opts.theta_err0 is None else theta_star0 + opts.theta_err0
        seeker = Seeker(cfg, scn.v * scn.T_slot, theta0=float(theta0))

    cfo = CfoProcess.initial(scn, rng["cfo"], opts.cfo_drift_std, opts.cfo_init_range)
    max_t = opts.max_t if opts.max_t is not None else 4.0 * scn.shortest_path / scn.v
    step = scn.v * scn.T_slot
    sigma_n = scn.sigma_n2

    rows: dict[str, list] = {name: [] for name in LOG_COLUMNS + ("omega_true", "omega_checked", "stage1")}
    t = 0.0
    flown_prev = None
    success = False
    done = False
    stage1_slots = 0

    while not done:
        commands = seeker.planned_headings()
        n = len(commands)
        in_stage1 = seeker.phase == STAGE1
        flown = np.asarray(commands) + opts.sigma_phi * rng["bearing"].standard_normal(n)
        if scn.max_turn_rate is not None:
            limit = scn.max_turn_rate * scn.T_slot
            for i in range(n):
                if flown_prev is not None:
                    flown[i] = flown_prev + np.clip(wrap_angle(flown[i] - flown_prev), -limit, limit)
                flown_prev = flown[i]
        flown = wrap_angle(flown)
        points = pos + np.cumsum(step * np.column_stack([np.cos(flown), np.sin(flown)]), axis=0)
        times = t + scn.T_slot * np.arange(1, n + 1)
        ranges = np.hypot(points[:, 0], points[:, 1])
        stop = np.flatnonzero((ranges <= scn.d_v) | (times > max_t))
        if stop.size:
            n = int(stop[0]) + 1
            success = bool(ranges[n - 1] <= scn.d_v)
            done = True
            commands, flown, points, times = commands[:n], flown[:n], points[:n], times[:n]

        f_o = np.empty(n)
        for i in range(n):
            cfo = evolve_cfo(cfo, scn.T_slot, rng["cfo"])
            f_o[i] = cfo.f_o
        d, theta_star, _, _, _ = path_geometry(points, scat[0])
        omega_true = TWO_PI * (scn.f_d_max * np.cos(theta_star - flown) + f_o)
        if backend == FULL:
            amp, phase, doppler, _, _ = path_arrays(scn, points, flown, gain, scat)
            samples = synthesize_batch(amp, phase, doppler, f_o, scn.T_s, scn.N)
            if opts.receiver_noise:
                samples = samples + complex_noise(rng["noise"], sigma_n, (n, scn.N))
            omega_tilde = estimate_frequencies(samples, scn.T_s, scn.N_fft)
        else:
            omega_tilde = omega_true + opts.sigma_omega * rng["noise"].standard_normal(n)
        rss = np.abs(gain * field_at(scn, points, scat)) ** 2

        for i in range(n):
            checked, accepted = seeker.observe(float(omega_tilde[i]), float(commands[i]))
            rows["theta_k"].append(seeker.theta_k)
            rows["omega_checked"].append(checked)
            rows["accepted"].append(accepted)
        rows["t"].extend(times)
        rows["x"].extend(points[:, 0])
        rows["y"].extend(points[:, 1])
        rows["d"].extend(d)
        rows["phi"].extend(flown)
        rows["theta_star"].extend(theta_star)
        rows["omega_tilde"].extend(omega_tilde)
        rows["omega_true"].extend(omega_true)
        rows["rss"].extend(rss)
        rows["stage1"].extend([in_stage1] * n)
        if in_stage1:
            stage1_slots += n

        pos = points[-1]
        t = float(times[-1])

    columns = {name: np.asarray(rows[name], dtype=bool if name == "accepted" else float) for name in LOG_COLUMNS}
    extras = {
        "omega_true": np.asarray(rows["omega_true"]),
        "omega_checked": np.asarray(rows["omega_checked"]),
        "stage1": np.asarray(rows["stage1"], dtype=bool),
    }
    n_total = len(columns["t"])
    return EpisodeLog(
        columns=columns,
        success=success,
        distance_traveled=n_total * step,
        t_end=t,
        seed=seed,
        index=index,
        backend=backend,
        shortest_path=scn.shortest_path,
        stage1_slots=stage1_slots,
        extras=extras,
    )


@dataclass
class McSummary:
    """Batch statistics. Distance statistics and ratios cover successful runs;
    the histogram counts every run."""

    n_runs: int
    n_success: int
    success_rate: float
    mean_distance: float
    median_distance: float
    std_distance: float
    mean_ratio: float
    shortest_path: float
    bin_width: float
    histogram: list[tuple[float, float, int]]
    distances: list[float] = field(repr=False)
    successes: list[bool] = field(repr=False)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["histogram"] = [{"bin_low": lo, "bin_high": hi, "count": c} for lo, hi, c in self.histogram]
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=True) + "\n"

    def histogram_csv(self) -> str:
        lines = ["bin_low,bin_high,count"]
        lines += [f"{lo!r},{hi!r},{c}" for lo, hi, c in self.histogram]
        return "\n".join(lines) + "\n"

    def write_histogram_csv(self, path: str | Path) -> None:
        atomic_write(path, self.histogram_csv())

    def write_json(self, path: str | Path) -> None:
        atomic_write(path, self.to_json())


def histogram(values: Sequence[float], bin_width: float = 250.0) -> list[tuple[float, float, int]]:
    values = np.asarray(values, dtype=float)
    lo = math.floor(values.min() / bin_width) * bin_width
    hi = math.ceil(values.max() / bin_width) * bin_width
    if hi <= lo:
        hi = lo + bin_width
    edges = np.arange(lo, hi + 0.5 * bin_width, bin_width)
    counts, _ = np.histogram(values, bins=edges)
    return [(float(a), float(b), int(c)) for a, b, c in zip(edges[:-1], edges[1:], counts)]


def summarize(logs: Sequence[EpisodeLog], bin_width: float = 250.0) -> McSummary:
    if len(logs) == 0:
        raise InsufficientDataError("summarize needs at least one episode log")
    ordered = sorted(logs, key=lambda lg: lg.index)
    distances = np.array([lg.distance_traveled for lg in ordered])
    ok = np.array([lg.success for lg in ordered])
    shortest = ordered[0].shortest_path
    good = distances[ok]
    if good.size:
        mean, median = float(np.mean(good)), float(np.median(good))
        std = float(np.std(good, ddof=1)) if good.size > 1 else 0.0
        mean_ratio = float(np.mean(good / shortest))
    else:
        mean = median = std = mean_ratio = math.nan
    return McSummary(
        n_runs=len(ordered),
        n_success=int(ok.sum()),
        success_rate=float(ok.mean()),
        mean_distance=mean,
        median_distance=median,
        std_distance=std,
        mean_ratio=mean_ratio,
        shortest_path=shortest,
        bin_width=bin_width,
        histogram=histogram(distances, bin_width),
        distances=[float(x) for x in distances],
        successes=[bool(x) for x in ok],
    )


def _episode_job(args) -> EpisodeLog:
    scenario, cfg, backend, seed, opts, index = args
    log = run_episode(scenario, cfg, backend, seed, opts, index)
    # per-slot arrays stay in the worker; the summary needs only the totals
    log.columns = {k: v[-1:] for k, v in log.columns.items()}
    log.extras = {}
    return log


def monte_carlo(scenario: Scenario, seeker_config: SeekerConfig | None = None, backend: str = FULL,
                n_runs: int = 100, master_seed: int = 0, with_stage1: bool = True,
                options: EpisodeOptions | None = None, workers: int | None = 1,
                bin_width: float = 250.0) -> McSummary:
    """Run ``n_runs`` independent episodes and summarise them.

    Episode ``i`` draws every random quantity from ``(master_seed, i)``, so the
    result does not depend on ``workers``. Runs with and without Stage 1 under
    the same master seed share scatterers, start point and noise streams.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    opts = replace(options or EpisodeOptions(), with_stage1=with_stage1)
    jobs = [(scenario, seeker_config, backend, master_seed, opts, i) for i in range(n_runs)]
    if workers is None:
        workers = len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count()
    if workers > 1 and n_runs > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            logs = list(pool.map(_episode_job, jobs, chunksize=max(1, n_runs // (4 * workers))))
    else:
        logs = [_episode_job(job) for job in jobs]
    return summarize(logs, bin_width)


def convergence_trace(theta_err_0: float, delta: float, k_max: int) -> list[float]:
    """Iterates of the noiseless heading-error recursion, ``k_max + 1`` values."""
    trace = [float(theta_err_0)]
    for _ in range(k_max):
        trace.append(error_step(trace[-1], delta))
    return trace
