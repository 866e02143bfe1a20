"""Frequency-feedback source seeking.

Stage 1 flies one circle and takes the bearing at which the (gated, smoothed)
frequency peaks as the initial direction. Stage 2 alternates ``theta_k + delta``
and ``theta_k - delta`` legs of ``M`` slots and steers by the difference of the
two leg means, which cancels the slowly varying carrier offset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .world import TWO_PI, ConfigError, wrap_angle

STAGE1 = "stage1"
PLUS = "plus"
MINUS = "minus"


class InsufficientDataError(ValueError):
    pass


class ProtocolError(ValueError):
    pass


@dataclass(frozen=True)
class SeekerConfig:
    """Controller constants. ``f_d_max`` of ``None`` means take ``v*f_c/c`` from the scenario."""

    delta: float = math.radians(10.0)
    M: int = 20
    smoothing_len: int = 15
    R_c: float = 50.0
    f_d_max: float | None = None

    def __post_init__(self):
        if not 0 < self.delta < np.pi / 2:
            raise ConfigError(f"delta must lie in (0, 90 deg), got {math.degrees(self.delta):.3f} deg")
        if self.delta * math.sin(self.delta) >= 1:
            raise ConfigError("delta*sin(delta) must be < 1")
        if self.M < 1:
            raise ConfigError(f"M must be >= 1, got {self.M}")
        if self.smoothing_len < 1:
            raise ConfigError(f"smoothing_len must be >= 1, got {self.smoothing_len}")
        if self.R_c <= 0:
            raise ConfigError(f"R_c must be positive, got {self.R_c}")
        if self.f_d_max is not None and self.f_d_max <= 0:
            raise ConfigError("f_d_max must be positive")

    @property
    def outlier_threshold(self) -> float:
        """Gate width 4*pi*f_d_max in rad/s, twice the full Doppler swing."""
        if self.f_d_max is None:
            raise ConfigError("f_d_max unresolved; bind the config to a scenario first")
        return 2.0 * TWO_PI * self.f_d_max


def reject_outlier(omega_new: float, omega_prev: float, threshold: float) -> float:
    """Hold the previous value when the new one jumps by ``threshold`` or more."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    return omega_new if abs(omega_new - omega_prev) < threshold else omega_prev


def smooth(history: Sequence[float], smoothing_len: int) -> float:
    if len(history) == 0:
        raise InsufficientDataError("cannot smooth an empty history")
    tail = np.asarray(history[-smoothing_len:], dtype=float)
    return float(np.mean(tail))


def centered_smooth(values: Sequence[float], smoothing_len: int) -> np.ndarray:
    """Moving average aligned with the window centre, truncated at the ends.

    Entry ``i`` is :func:`smooth` applied to the history up to ``i + len//2``,
    which removes the half-window lag of a trailing average.
    """
    values = list(values)
    half = smoothing_len // 2
    return np.array([smooth(values[: i + half + 1], smoothing_len) for i in range(len(values))])


def stage1_direction(measurements: Sequence[tuple[float, float]]) -> float:
    """Bearing reading at the largest smoothed frequency; first index wins ties."""
    if len(measurements) == 0:
        raise InsufficientDataError("stage 1 needs at least one measurement")
    data = np.asarray(measurements, dtype=float)
    return float(data[int(np.argmax(data[:, 0])), 1])


def stage2_update(theta_k: float, plus_leg: Sequence[float], minus_leg: Sequence[float],
                  delta: float, f_d_max: float) -> float:
    """One Stage-2 heading correction, wrapped to (-pi, pi].

    Legs are differenced sample by sample before summing so a common offset
    cancels before any rounding of large values accumulates.
    """
    plus = np.asarray(plus_leg, dtype=float)
    minus = np.asarray(minus_leg, dtype=float)
    if plus.shape != minus.shape or plus.ndim != 1 or plus.size == 0:
        raise ProtocolError(f"legs must be equal-length and non-empty, got {plus.shape} and {minus.shape}")
    diff = float(np.sum(plus - minus)) / plus.size
    return wrap_angle(theta_k + diff * delta / (TWO_PI * f_d_max))


def error_step(theta_err: float, delta: float) -> float:
    """Heading-error recursion for noiseless legs and a slowly moving source bearing."""
    nxt = theta_err - 2.0 * math.sin(theta_err) * math.sin(delta) * delta
    return nxt if -np.pi <= nxt <= np.pi else wrap_angle(nxt)


def lyapunov_decrement(theta_err, delta):
    """Change of the squared heading error over one update; works on arrays."""
    alpha = delta * np.sin(delta)
    s = np.sin(theta_err)
    return -4.0 * alpha * s * (theta_err - alpha * s)


@dataclass
class SeekerState:
    theta_k: float = 0.0
    phase: str = PLUS
    slot: int = 0  # slots completed in the current phase
    k: int = 0
    plus_leg: list = field(default_factory=list)
    minus_leg: list = field(default_factory=list)
    last_accepted: float | None = None
    # stage 1 bookkeeping
    circle_heading0: float = 0.0
    turn_per_slot: float = 0.0
    circle_slots: int = 0
    stage1_omega: list = field(default_factory=list)
    stage1_phi: list = field(default_factory=list)


def next_heading(state: SeekerState, config: SeekerConfig) -> float:
    """Commanded heading for the upcoming slot."""
    if state.phase == STAGE1:
        return wrap_angle(state.circle_heading0 + state.slot * state.turn_per_slot)
    if state.phase == PLUS:
        return wrap_angle(state.theta_k + config.delta)
    return wrap_angle(state.theta_k - config.delta)


def remaining_in_phase(state: SeekerState, config: SeekerConfig) -> int:
    total = state.circle_slots if state.phase == STAGE1 else config.M
    return total - state.slot


class Seeker:
    """Single-episode controller: feed one frequency/bearing pair per slot.

    Parameters
    ----------
    config : SeekerConfig
        Must have ``f_d_max`` resolved.
    step_len : float
        Distance flown per slot, ``v * T_slot``; sets the Stage-1 turn rate.
    theta0 : float, optional
        Skip Stage 1 and start Stage 2 from this direction.
    circle_heading0 : float
        Initial tangent heading of the Stage-1 circle.
    """

    def __init__(self, config: SeekerConfig, step_len: float, theta0: float | None = None,
                 circle_heading0: float = 0.0):
        if config.f_d_max is None:
            raise ConfigError("SeekerConfig.f_d_max must be set")
        self.config = config
        if theta0 is None:
            turn = step_len / config.R_c
            self.state = SeekerState(
                phase=STAGE1,
                circle_heading0=circle_heading0,
                turn_per_slot=turn,
                circle_slots=int(round(TWO_PI / turn)),
            )
        else:
            self.state = SeekerState(theta_k=wrap_angle(theta0), phase=PLUS)

    @property
    def heading(self) -> float:
        return next_heading(self.state, self.config)

    @property
    def phase(self) -> str:
        return self.state.phase

    @property
    def theta_k(self) -> float:
        return self.state.theta_k

    def planned_headings(self) -> list[float]:
        """Headings for the rest of the current phase; fixed regardless of measurements."""
        st = self.state
        n = remaining_in_phase(st, self.config)
        if st.phase == STAGE1:
            return [wrap_angle(st.circle_heading0 + (st.slot + i) * st.turn_per_slot) for i in range(n)]
        return [self.heading] * n

    def gate(self, omega_tilde: float) -> tuple[float, bool]:
        prev = self.state.last_accepted
        if prev is None:
            return omega_tilde, True
        checked = reject_outlier(omega_tilde, prev, self.config.outlier_threshold)
        return checked, checked == omega_tilde

    def observe(self, omega_tilde: float, phi_tilde: float) -> tuple[float, bool]:
        """Gate one measurement and advance the protocol. Returns (checked value, accepted)."""
        checked, accepted = self.gate(omega_tilde)
        st, cfg = self.state, self.config
        st.last_accepted = checked
        st.slot += 1
        if st.phase == STAGE1:
            st.stage1_omega.append(checked)
            st.stage1_phi.append(phi_tilde)
            if st.slot == st.circle_slots:
                smoothed = centered_smooth(st.stage1_omega, cfg.smoothing_len)
                st.theta_k = wrap_angle(stage1_direction(list(zip(smoothed, st.stage1_phi))))
                st.phase, st.slot = PLUS, 0
        elif st.phase == PLUS:
            st.plus_leg.append(checked)
            if st.slot == cfg.M:
                st.phase, st.slot = MINUS, 0
        else:
            st.minus_leg.append(checked)
            if st.slot == cfg.M:
                st.theta_k = stage2_update(st.theta_k, st.plus_leg, st.minus_leg, cfg.delta, cfg.f_d_max)
                st.k += 1
                st.plus_leg, st.minus_leg = [], []
                st.phase, st.slot = PLUS, 0
        return checked, accepted
