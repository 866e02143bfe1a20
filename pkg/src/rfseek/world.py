"""Planar geometry, scatterer placement and UAV kinematics.

The emitter sits at the origin of the plane. Everything here is a pure
function of its inputs so scenarios can be shared freely between episodes.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

TWO_PI = 2.0 * np.pi


class ConfigError(ValueError):
    """Raised for scenario or controller parameters that break an invariant."""


class GeometryError(ValueError):
    """Raised when a bearing is requested between coincident points."""


def wrap_angle(x):
    """Wrap an angle (scalar or array) into (-pi, pi]."""
    x = np.asarray(x, dtype=float)
    inside = (x > -np.pi) & (x <= np.pi)
    wrapped = np.where(inside, x, np.pi - np.mod(np.pi - x, TWO_PI))
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


def as_generator(seed) -> np.random.Generator:
    """Accept an int, a SeedSequence or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class Scatterer:
    alpha: float  # angle from the source, radians
    rho: float  # distance from the source, meters
    gamma: complex  # reflection coefficient

    @property
    def position(self) -> np.ndarray:
        return np.array([self.rho * math.cos(self.alpha), self.rho * math.sin(self.alpha)])


@dataclass(frozen=True)
class Scenario:
    """Immutable world description. Defaults are the reference simulation setup.

    ``sigma_n2_db`` is the receiver noise power in dB and ``snr_init_db`` the
    average SNR at ``d_init``. ``scatterers`` left as ``None`` means each
    episode draws its own ring of ``L`` scatterers.
    """

    d_init: float = 5000.0
    R: float = 200.0
    R_in: float = 100.0
    L: int = 20
    f_c: float = 2e9
    v: float = 10.0
    c: float = 2.998e8
    sigma_n2_db: float = -70.0
    snr_init_db: float = 0.0
    d_v: float = 200.0
    T_slot: float = 0.05
    T_s: float = 1e-5
    N: int = 1000
    N_fft: int = 4096
    max_turn_rate: float | None = None  # rad/s, None disables the clamp
    scatterers: tuple[Scatterer, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        if not 0 < self.R_in < self.R < self.d_init:
            raise ConfigError(
                f"need 0 < R_in < R < d_init, got R_in={self.R_in}, R={self.R}, d_init={self.d_init}"
            )
        if not 0 < self.d_v < self.d_init:
            raise ConfigError(f"need 0 < d_v < d_init, got d_v={self.d_v}")
        if self.v <= 0:
            raise ConfigError(f"speed must be positive, got v={self.v}")
        if self.L < 0:
            raise ConfigError(f"scatterer count must be >= 0, got L={self.L}")
        if not 0 < self.N <= self.N_fft:
            raise ConfigError(f"need 0 < N <= N_fft, got N={self.N}, N_fft={self.N_fft}")
        if self.T_s <= 0 or self.T_slot < self.N * self.T_s:
            raise ConfigError("need T_s > 0 and the capture N*T_s to fit inside T_slot")
        if self.max_turn_rate is not None and self.max_turn_rate <= 0:
            raise ConfigError("max_turn_rate must be positive when set")
        if self.scatterers is not None:
            for s in self.scatterers:
                if not self.R_in - 1e-9 <= s.rho <= self.R + 1e-9:
                    raise ConfigError(f"scatterer at radius {s.rho} lies outside the annulus")
                if abs(s.gamma) > 1.0 + 1e-12:
                    raise ConfigError(f"|Gamma| must be <= 1, got {abs(s.gamma)}")

    @property
    def f_d_max(self) -> float:
        """Maximum Doppler shift v*f_c/c in Hz."""
        return self.v * self.f_c / self.c

    @property
    def wavelength(self) -> float:
        return self.c / self.f_c

    @property
    def beta(self) -> float:
        return TWO_PI / self.wavelength

    @property
    def sigma_n2(self) -> float:
        """Linear noise power."""
        return 10.0 ** (self.sigma_n2_db / 10.0)

    @property
    def T(self) -> float:
        """Capture duration N*T_s."""
        return self.N * self.T_s

    @property
    def shortest_path(self) -> float:
        return self.d_init - self.d_v

    def with_scatterers(self, scatterers: Sequence[Scatterer]) -> "Scenario":
        return replace(self, scatterers=tuple(scatterers), L=len(scatterers))

    @classmethod
    def from_mapping(cls, values: Mapping[str, object]) -> "Scenario":
        """Build a scenario from string or numeric overrides; unknown keys raise."""
        known = {f.name: f for f in fields(cls) if f.name != "scatterers"}
        kwargs = {}
        for key, raw in values.items():
            if key not in known:
                raise ConfigError(f"unknown scenario key {key!r}")
            kwargs[key] = _coerce(key, raw, int if key in ("L", "N", "N_fft") else float)
        return cls(**kwargs)


def _coerce(key, raw, kind):
    if raw is None or (isinstance(raw, str) and raw.strip().lower() in ("none", "")):
        return None
    try:
        if kind is int:
            value = float(raw)
            if value != int(value):
                raise ValueError
            return int(value)
        return float(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"cannot read {key}={raw!r} as {kind.__name__}") from None


def read_flat_config(path: str | Path) -> dict[str, str]:
    """Read a flat ``key = value`` file. ``#`` starts a comment; keys are case-sensitive."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    parser.optionxform = str
    text = Path(path).read_text(encoding="utf-8")
    try:
        parser.read_string("[config]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return dict(parser["config"])


def load_scenario(path: str | Path) -> Scenario:
    return Scenario.from_mapping(read_flat_config(path))


@dataclass(frozen=True)
class UavState:
    x: float
    y: float
    phi: float  # heading, radians
    v: float
    t: float = 0.0

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])


def place_scatterers(seed, L: int, R_in: float, R: float) -> list[Scatterer]:
    """Draw ``L`` scatterers uniformly over the area of the annulus ``[R_in, R]``.

    Angles are uniform on (-pi, pi]. Reflection coefficients have magnitude
    uniform on [0.3, 0.9] and uniform phase.
    """
    if not 0 < R_in < R:
        raise ConfigError(f"need 0 < R_in < R, got R_in={R_in}, R={R}")
    if L < 0:
        raise ConfigError(f"L must be >= 0, got {L}")
    rng = as_generator(seed)
    u = rng.random((4, L))
    alpha = np.pi - TWO_PI * u[0]
    rho = np.sqrt(u[1] * (R**2 - R_in**2) + R_in**2)
    mag = 0.3 + 0.6 * u[2]
    phase = np.pi - TWO_PI * u[3]
    gamma = mag * np.exp(1j * phase)
    return [Scatterer(float(a), float(r), complex(g)) for a, r, g in zip(alpha, rho, gamma)]


def scatterer_arrays(scatterers: Sequence[Scatterer]) -> tuple[np.ndarray, np.ndarray]:
    """Positions as an (L, 2) array and reflection coefficients as (L,)."""
    if not scatterers:
        return np.zeros((0, 2)), np.zeros(0, dtype=complex)
    xy = np.array([[s.rho * math.cos(s.alpha), s.rho * math.sin(s.alpha)] for s in scatterers])
    gamma = np.array([s.gamma for s in scatterers], dtype=complex)
    return xy, gamma


def bearing_to_source(p) -> float:
    """World-frame direction from ``p`` towards the origin, in (-pi, pi]."""
    x, y = float(p[0]), float(p[1])
    if x == 0.0 and y == 0.0:
        raise GeometryError("bearing to source is undefined at the source")
    return wrap_angle(math.atan2(-y, -x))


def advance(state: UavState, heading: float, duration: float) -> UavState:
    if duration < 0:
        raise ValueError("duration must be non-negative")
    step = state.v * duration
    return UavState(
        x=state.x + step * math.cos(heading),
        y=state.y + step * math.sin(heading),
        phi=wrap_angle(heading),
        v=state.v,
        t=state.t + duration,
    )


def path_angles(p, scatterer: Scatterer) -> tuple[float, float, float]:
    """Source-to-scatterer length, scatterer-to-UAV length, and UAV-to-scatterer bearing."""
    sx, sy = scatterer.position
    dx, dy = sx - float(p[0]), sy - float(p[1])
    r_i = math.hypot(dx, dy)
    if r_i == 0.0:
        raise GeometryError("UAV coincides with a scatterer")
    return math.hypot(sx, sy), r_i, wrap_angle(math.atan2(dy, dx))


def path_geometry(points: np.ndarray, scat_xy: np.ndarray):
    """Vectorised :func:`path_angles` for many UAV positions.

    Parameters
    ----------
    points : (S, 2) array of UAV positions.
    scat_xy : (L, 2) array of scatterer positions.

    Returns
    -------
    d : (S,) LoS ranges
    theta_star : (S,) bearings towards the source
    d_i : (L,) source-to-scatterer lengths
    r_i : (S, L) scatterer-to-UAV lengths
    alpha_s : (S, L) UAV-to-scatterer bearings
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    d = np.hypot(points[:, 0], points[:, 1])
    if np.any(d == 0.0):
        raise GeometryError("bearing to source is undefined at the source")
    theta_star = wrap_angle(np.arctan2(-points[:, 1], -points[:, 0]))
    d_i = np.hypot(scat_xy[:, 0], scat_xy[:, 1])
    rel = scat_xy[None, :, :] - points[:, None, :]
    r_i = np.hypot(rel[..., 0], rel[..., 1])
    if np.any(r_i == 0.0):
        raise GeometryError("UAV coincides with a scatterer")
    alpha_s = wrap_angle(np.arctan2(rel[..., 1], rel[..., 0]))
    return d, np.atleast_1d(theta_star), d_i, r_i, np.atleast_2d(alpha_s)
