"""Single-tone frequency estimation by DFT peak picking and quadratic refinement."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .world import TWO_PI, ConfigError, as_generator, wrap_angle


@dataclass(frozen=True)
class Measurement:
    omega_tilde: float  # rad/s
    phi_tilde: float  # rad
    slot_index: int = 0


def spectrum(samples, N_fft: int) -> np.ndarray:
    """Magnitudes of the zero-padded length-``N_fft`` DFT (last axis)."""
    samples = np.asarray(samples)
    if samples.shape[-1] > N_fft:
        raise ConfigError(f"capture of {samples.shape[-1]} samples exceeds N_fft={N_fft}")
    return np.abs(np.fft.fft(samples, n=N_fft, axis=-1))


def bin_to_omega(k, T_s: float, N_fft: int):
    """Angular frequency of a (signed or fractional) DFT bin."""
    return TWO_PI * np.asarray(k, dtype=float) / (T_s * N_fft)


def signed_bin(i, N_fft: int):
    """Map bin index 0..N_fft-1 onto (-N_fft/2, N_fft/2]."""
    i = np.asarray(i)
    return np.where(i > N_fft // 2, i - N_fft, i)


def quad_interp(m_prev: float, m_peak: float, m_next: float, peak_bin: float,
                T_s: float, N_fft: int) -> float:
    """Refine a grid peak with a parabola through the three magnitudes around it.

    A flat triple (zero curvature) returns the grid frequency unchanged.
    """
    denom = 2.0 * (m_prev + m_next - 2.0 * m_peak)
    offset = 0.0 if denom == 0 else (m_prev - m_next) / denom
    return float(bin_to_omega(peak_bin + offset, T_s, N_fft))


def estimate_frequencies(samples, T_s: float, N_fft: int) -> np.ndarray:
    """Vectorised estimator over the leading axis of an (S, N) array, rad/s."""
    mags = np.atleast_2d(spectrum(samples, N_fft))
    rows = np.arange(mags.shape[0])
    i = np.argmax(mags, axis=1)
    m_peak = mags[rows, i]
    m_prev = mags[rows, (i - 1) % N_fft]
    m_next = mags[rows, (i + 1) % N_fft]
    denom = 2.0 * (m_prev + m_next - 2.0 * m_peak)
    safe = np.where(denom == 0, 1.0, denom)
    offset = np.where(denom == 0, 0.0, (m_prev - m_next) / safe)
    return bin_to_omega(signed_bin(i, N_fft) + offset, T_s, N_fft)


def estimate_frequency(capture, T_s: float, N_fft: int) -> float:
    """Frequency estimate (rad/s) of one capture or raw sample vector.

    The argmax runs over the full two-sided grid so negative frequencies are
    reported with their sign; neighbours wrap circularly at the grid edges.
    """
    samples = getattr(capture, "samples", capture)
    mags = spectrum(samples, N_fft)
    i = int(np.argmax(mags))
    return quad_interp(mags[(i - 1) % N_fft], mags[i], mags[(i + 1) % N_fft],
                       int(signed_bin(i, N_fft)), T_s, N_fft)


def measure_abstract(true_omega: float, true_phi: float, sigma_omega: float,
                     sigma_phi: float, rng, slot_index: int = 0) -> Measurement:
    """Additive Gaussian measurement model, bypassing signal synthesis."""
    if sigma_omega < 0 or sigma_phi < 0:
        raise ValueError("noise standard deviations must be non-negative")
    rng = as_generator(rng)
    n_omega, n_phi = rng.standard_normal(2)
    return Measurement(true_omega + sigma_omega * n_omega, true_phi + sigma_phi * n_phi, slot_index)


def measure_bearing(true_phi: float, sigma_phi: float, rng) -> float:
    if sigma_phi < 0:
        raise ValueError("sigma_phi must be non-negative")
    if sigma_phi == 0:
        return wrap_angle(true_phi)
    return wrap_angle(true_phi + sigma_phi * as_generator(rng).standard_normal())
