"""Complex baseband beacon synthesis for a UAV listening to a scattered emitter.

Path amplitudes and phases come from the geometric field model (LoS term
``exp(-j*beta*d)/d`` plus one ``Gamma_i*exp(-j*beta*(d_i+r_i))/(d_i+r_i)`` term
per scatterer). Each path rotates at its own Doppler frequency plus the common
carrier frequency offset. A single calibration gain ``g`` scales the field so
the average SNR at the initial range hits the configured value.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .world import (
    TWO_PI,
    ConfigError,
    Scenario,
    UavState,
    as_generator,
    path_geometry,
    scatterer_arrays,
)


@dataclass(frozen=True)
class CfoProcess:
    """Carrier frequency offset ``f_o`` (Hz) drifting as a Wiener process."""

    f_o: float
    drift_rate_std: float = 1.0  # Hz / sqrt(s)
    f_o_init_range: float = 1e3  # Hz
    f_limit: float = 25e3  # |f_o| is kept strictly below this

    @classmethod
    def initial(cls, scenario: Scenario, rng, drift_rate_std: float = 1.0,
                f_o_init_range: float = 1e3) -> "CfoProcess":
        rng = as_generator(rng)
        limit = 1.0 / (4.0 * scenario.T_s)
        f_o = float(rng.uniform(-f_o_init_range, f_o_init_range))
        return cls(_clamp(f_o, limit), drift_rate_std, f_o_init_range, limit)


def _clamp(f_o: float, limit: float) -> float:
    edge = np.nextafter(limit, 0.0)
    return float(min(max(f_o, -edge), edge))


def evolve_cfo(cfo: CfoProcess, dt: float, rng) -> CfoProcess:
    if dt < 0:
        raise ValueError("dt must be non-negative")
    if dt == 0 or cfo.drift_rate_std == 0:
        return cfo
    step = cfo.drift_rate_std * np.sqrt(dt) * as_generator(rng).standard_normal()
    return replace(cfo, f_o=_clamp(cfo.f_o + step, cfo.f_limit))


@dataclass(frozen=True)
class PathSet:
    """LoS path at index 0 followed by one entry per scatterer."""

    amplitude: np.ndarray
    phase: np.ndarray  # radians
    doppler: np.ndarray  # rad/s
    d: float
    theta_star: float

    @property
    def k_factor(self) -> float:
        """LoS power over total scattered power (inf without scatterers)."""
        scattered = float(np.sum(self.amplitude[1:] ** 2))
        return np.inf if scattered == 0 else float(self.amplitude[0] ** 2) / scattered


@dataclass(frozen=True)
class BeaconCapture:
    samples: np.ndarray
    d: float
    theta_star: float
    f_o: float
    dopplers: np.ndarray  # rad/s, LoS first
    slot_index: int = 0


def _scatterers(scenario: Scenario):
    if scenario.scatterers is None:
        if scenario.L:
            raise ConfigError("scenario has L > 0 but no placed scatterers; call with_scatterers first")
        return scatterer_arrays(())
    return scatterer_arrays(scenario.scatterers)


def path_arrays(scenario: Scenario, points, headings, gain: float = 1.0,
                scat=None):
    """Per-path amplitude, phase and Doppler for many (position, heading) pairs.

    Returns ``(amplitude, phase, doppler, d, theta_star)`` where the first three
    are (S, L+1) arrays with the LoS path in column 0.
    """
    scat_xy, gamma = _scatterers(scenario) if scat is None else scat
    d, theta_star, d_i, r_i, alpha_s = path_geometry(points, scat_xy)
    headings = np.atleast_1d(np.asarray(headings, dtype=float))
    beta = scenario.beta
    w_max = TWO_PI * scenario.f_d_max
    total = d_i[None, :] + r_i
    amplitude = np.concatenate([(gain / d)[:, None], gain * np.abs(gamma)[None, :] / total], axis=1)
    phase = np.concatenate([(-beta * d)[:, None], -beta * total + np.angle(gamma)[None, :]], axis=1)
    doppler = w_max * np.cos(np.concatenate([theta_star[:, None], alpha_s], axis=1) - headings[:, None])
    return amplitude, phase, doppler, d, theta_star


def build_paths(scenario: Scenario, uav_state: UavState, gain: float = 1.0) -> PathSet:
    amp, phase, doppler, d, theta_star = path_arrays(
        scenario, uav_state.position[None, :], uav_state.phi, gain
    )
    return PathSet(amp[0], phase[0], doppler[0], float(d[0]), float(theta_star[0]))


def field_at(scenario: Scenario, points, scat=None) -> np.ndarray:
    """Complex field (unit gain) at each point, LoS plus scattered terms."""
    scat_xy, gamma = _scatterers(scenario) if scat is None else scat
    d, _, d_i, r_i, _ = path_geometry(points, scat_xy)
    beta = scenario.beta
    total = d_i[None, :] + r_i
    los = np.exp(-1j * beta * d) / d
    return los + np.sum(gamma[None, :] * np.exp(-1j * beta * total) / total, axis=1)


def rss_at(scenario: Scenario, p, gain: float = 1.0):
    """Received power ``|g * EF|^2``; accepts one point or an (S, 2) array."""
    p = np.asarray(p, dtype=float)
    power = np.abs(gain * field_at(scenario, np.atleast_2d(p))) ** 2
    return float(power[0]) if p.ndim == 1 else power


def calibrate_gain(scenario: Scenario, seed=0, n_positions: int = 8192) -> float:
    """Gain that puts the average received power at ``d_init`` at ``sigma_n2 * SNR``.

    The average runs over UAV positions spread uniformly around the circle of
    radius ``d_init``, which also averages the relative path phases.
    """
    target = scenario.sigma_n2 * 10.0 ** (scenario.snr_init_db / 10.0)
    scat = _scatterers(scenario)
    if len(scat[1]) == 0:
        return float(scenario.d_init * np.sqrt(target))
    rng = as_generator(seed)
    ang = rng.uniform(-np.pi, np.pi, n_positions)
    pts = scenario.d_init * np.column_stack([np.cos(ang), np.sin(ang)])
    mean_power = float(np.mean(np.abs(field_at(scenario, pts, scat)) ** 2))
    return float(np.sqrt(target / mean_power))


def synthesize_beacon(paths: PathSet, cfo: CfoProcess, scenario: Scenario, rng=None,
                      noise: bool = True, slot_index: int = 0) -> BeaconCapture:
    """One pilot capture of ``N`` samples; frequencies are frozen over the capture."""
    n = np.arange(scenario.N)
    omega = paths.doppler + TWO_PI * cfo.f_o
    tones = np.exp(1j * (np.outer(n * scenario.T_s, omega) + paths.phase))
    samples = tones @ paths.amplitude.astype(complex)
    if noise:
        samples = samples + complex_noise(as_generator(rng), scenario.sigma_n2, scenario.N)
    return BeaconCapture(samples, paths.d, paths.theta_star, cfo.f_o, paths.doppler.copy(), slot_index)


def complex_noise(rng: np.random.Generator, power: float, shape) -> np.ndarray:
    """Circular complex Gaussian noise with total variance ``power``."""
    shape = (shape,) if np.isscalar(shape) else tuple(shape)
    z = rng.standard_normal(shape + (2,))
    return np.sqrt(power / 2.0) * (z[..., 0] + 1j * z[..., 1])


def synthesize_batch(amplitude, phase, doppler, f_o, T_s: float, N: int) -> np.ndarray:
    """Noise-free captures for S slots at once, shape (S, N).

    Writes the sample index as ``n = q*B + r`` so each capture becomes a
    product of a (Q, K) and a (K, B) matrix of phasors. This needs only
    ``Q + B`` complex exponentials per path instead of ``N``.
    """
    amplitude = np.atleast_2d(amplitude)
    omega = np.atleast_2d(doppler) + TWO_PI * np.asarray(f_o, dtype=float).reshape(-1, 1)
    coeff = amplitude * np.exp(1j * np.atleast_2d(phase))
    B = int(np.ceil(np.sqrt(N)))
    Q = -(-N // B)
    outer = np.exp(1j * omega[:, None, :] * (B * T_s * np.arange(Q))[None, :, None]) * coeff[:, None, :]
    inner = np.exp(1j * omega[:, :, None] * (T_s * np.arange(B))[None, None, :])
    return np.matmul(outer, inner).reshape(len(omega), Q * B)[:, :N]


def write_capture_csv(capture: BeaconCapture, path: str | Path) -> None:
    """Debug dump: one row per sample with columns index, real, imag."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "real", "imag"])
        for i, z in enumerate(capture.samples):
            writer.writerow([i, repr(float(z.real)), repr(float(z.imag))])
