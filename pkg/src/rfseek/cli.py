"""Command-line front end: ``rfseek run | montecarlo | converge``."""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

from .harness import BACKENDS, FULL, EpisodeOptions, atomic_write, convergence_trace, monte_carlo, run_episode
from .seeker import SeekerConfig
from .world import ConfigError, Scenario, read_flat_config

_SCENARIO_DEFAULTS = Scenario()
_SEEKER_DEFAULTS = SeekerConfig()
_OPTION_DEFAULTS = EpisodeOptions()

# (Scenario field / config key, flag, help)
_SCENARIO_FLAGS = [
    ("d_init", "--d-init", "initial source-UAV range, m"),
    ("R", "--R", "scatterer annulus outer radius, m"),
    ("R_in", "--R-in", "scatterer annulus inner radius, m"),
    ("L", "--L", "number of scatterers"),
    ("f_c", "--f-c", "carrier frequency, Hz"),
    ("v", "--v", "UAV speed, m/s"),
    ("c", "--c", "speed of light, m/s"),
    ("sigma_n2_db", "--sigma-n2-db", "receiver noise power, dB"),
    ("snr_init_db", "--snr-init-db", "average SNR at the initial range, dB"),
    ("d_v", "--d-v", "success radius, m"),
    ("T_slot", "--T-slot", "beacon period, s"),
    ("T_s", "--T-s", "sample period, s"),
    ("N", "--N", "samples per capture"),
    ("N_fft", "--N-fft", "DFT length"),
    ("max_turn_rate", "--max-turn-rate", "heading rate clamp, rad/s (off when unset)"),
]

COLUMNS_HELP = """\
outputs:
  run         trajectory.csv  t,x,y,d,phi,theta_k,theta_star,omega_tilde,accepted,rss
              (s, m, m, m, rad, rad, rad, rad/s, 0/1, field units^2); summary on stdout
  montecarlo  histogram.csv   bin_low,bin_high,count (m of distance traveled)
              summary.json    n_runs, n_success, success_rate, mean/median/std_distance,
                              mean_ratio, shortest_path, bin_width, histogram, distances
  converge    convergence.csv k,theta_err (rad)
config file: flat 'key = value' lines using the keys shown in brackets.
seed: --seed, else $SEEK_SEED, else 0.
"""


def parse_angle(text: str) -> float:
    """Angle in degrees; accepts a bare number, a ``deg`` suffix or a ``rad`` suffix."""
    s = str(text).strip().lower()
    try:
        if s.endswith("rad"):
            return math.degrees(float(s[:-3]))
        if s.endswith("deg"):
            return float(s[:-3])
        return float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid angle {text!r}") from None


def _delta_arg(text: str) -> float:
    deg = parse_angle(text)
    if not 0 < deg < 90:
        raise argparse.ArgumentTypeError(f"delta must lie strictly between 0 and 90 deg, got {text!r}")
    return deg


@dataclass
class RunSpec:
    subcommand: str
    scenario: Scenario = field(default_factory=Scenario)
    seeker: SeekerConfig = field(default_factory=SeekerConfig)
    options: EpisodeOptions = field(default_factory=EpisodeOptions)
    backend: str = FULL
    seed: int = 0
    n_runs: int = 100
    stage1: bool = True
    out: Path = Path(".")
    workers: int = 1
    bin_width: float = 250.0
    theta_err0: float = math.radians(60.0)
    k_max: int = 50


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    g = common.add_argument_group("scenario")
    for key, flag, text in _SCENARIO_FLAGS:
        g.add_argument(flag, dest=key, default=None, metavar="X",
                       help=f"{text} [{key}] (default: {getattr(_SCENARIO_DEFAULTS, key)})")
    g = common.add_argument_group("seeker")
    g.add_argument("--delta", type=_delta_arg, default=None, metavar="DEG",
                   help=f"perturbation angle, deg [delta_deg] (default: {math.degrees(_SEEKER_DEFAULTS.delta):g})")
    g.add_argument("--M", type=int, default=None, help=f"slots per half-leg [M] (default: {_SEEKER_DEFAULTS.M})")
    g.add_argument("--smoothing-len", type=int, default=None,
                   help=f"stage-1 moving average length, slots [smoothing_len] (default: {_SEEKER_DEFAULTS.smoothing_len})")
    g.add_argument("--R-c", type=float, default=None,
                   help=f"stage-1 circle radius, m [R_c] (default: {_SEEKER_DEFAULTS.R_c:g})")
    g = common.add_argument_group("episode")
    g.add_argument("--config", type=Path, default=None, help="flat key = value config file")
    g.add_argument("--seed", type=int, default=None, help="master seed (default: $SEEK_SEED or 0)")
    g.add_argument("--backend", choices=BACKENDS, default=FULL, help="signal model (default: full)")
    g.add_argument("--stage1", action=argparse.BooleanOptionalAction, default=None,
                   help="fly the stage-1 circle first (default: on)")
    g.add_argument("--theta0", type=parse_angle, default=None, metavar="DEG",
                   help="initial heading error, deg; converge start value, or stage-2 start when --no-stage1 "
                        "(default: random for run/montecarlo, 60 for converge)")
    g.add_argument("--sigma-phi", type=parse_angle, default=None, metavar="DEG",
                   help=f"heading tracking error std, deg [sigma_phi_deg] (default: {math.degrees(_OPTION_DEFAULTS.sigma_phi):g})")
    g.add_argument("--sigma-omega", type=float, default=None, metavar="HZ",
                   help="abstract-backend frequency noise std, Hz [sigma_omega_hz] (default: 1)")
    g.add_argument("--cfo-drift", type=float, default=None, metavar="HZ",
                   help=f"CFO random-walk intensity, Hz/sqrt(s) [cfo_drift_std] (default: {_OPTION_DEFAULTS.cfo_drift_std:g})")
    g.add_argument("--cfo-init-range", type=float, default=None, metavar="HZ",
                   help=f"initial CFO drawn uniformly in +-this, Hz [cfo_init_range] (default: {_OPTION_DEFAULTS.cfo_init_range:g})")
    g.add_argument("--out", type=Path, default=Path("."), help="output directory (default: .)")

    parser = argparse.ArgumentParser(
        prog="rfseek",
        description="Doppler-feedback RF source seeking simulator.",
        epilog=COLUMNS_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        allow_abbrev=False,
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, text in (("run", "fly one episode and write its trajectory"),
                       ("montecarlo", "run a batch and write histogram + summary"),
                       ("converge", "iterate the analytic heading-error recursion")):
        p = sub.add_parser(name, parents=[common], help=text, description=text, epilog=COLUMNS_HELP,
                           formatter_class=argparse.RawDescriptionHelpFormatter, allow_abbrev=False)
        p.set_defaults(_parser=p)
        if name == "montecarlo":
            p.add_argument("--runs", type=int, default=100, help="number of episodes (default: 100)")
            p.add_argument("--workers", type=int, default=1, help="worker processes (default: 1)")
            p.add_argument("--bin-width", type=float, default=250.0, help="histogram bin width, m (default: 250)")
        if name == "converge":
            p.add_argument("--k-max", type=int, default=50, help="iterations (default: 50)")
    return parser


_SEEKER_KEYS = {"delta_deg", "M", "smoothing_len", "R_c"}
_OPTION_KEYS = {"sigma_phi_deg", "sigma_omega_hz", "cfo_drift_std", "cfo_init_range"}


def _resolve(config: dict[str, str], ns: argparse.Namespace) -> tuple[Scenario, SeekerConfig, EpisodeOptions]:
    scen = {k: v for k, v in config.items() if k not in _SEEKER_KEYS | _OPTION_KEYS}
    for key, _, _ in _SCENARIO_FLAGS:
        if getattr(ns, key) is not None:
            scen[key] = getattr(ns, key)
    scenario = Scenario.from_mapping(scen)

    def pick(flag_value, key, default, conv=float):
        if flag_value is not None:
            return flag_value
        if key in config:
            try:
                return conv(config[key])
            except ValueError:
                raise ConfigError(f"cannot read {key}={config[key]!r}") from None
        return default

    delta_deg = pick(ns.delta, "delta_deg", math.degrees(_SEEKER_DEFAULTS.delta))
    seeker = SeekerConfig(
        delta=math.radians(delta_deg),
        M=pick(ns.M, "M", _SEEKER_DEFAULTS.M, int),
        smoothing_len=pick(ns.smoothing_len, "smoothing_len", _SEEKER_DEFAULTS.smoothing_len, int),
        R_c=pick(ns.R_c, "R_c", _SEEKER_DEFAULTS.R_c),
    )
    options = EpisodeOptions(
        sigma_phi=math.radians(pick(ns.sigma_phi, "sigma_phi_deg", math.degrees(_OPTION_DEFAULTS.sigma_phi))),
        sigma_omega=2 * math.pi * pick(ns.sigma_omega, "sigma_omega_hz", _OPTION_DEFAULTS.sigma_omega / (2 * math.pi)),
        cfo_drift_std=pick(ns.cfo_drift, "cfo_drift_std", _OPTION_DEFAULTS.cfo_drift_std),
        cfo_init_range=pick(ns.cfo_init_range, "cfo_init_range", _OPTION_DEFAULTS.cfo_init_range),
    )
    return scenario, seeker, options


def parse_args(argv=None) -> RunSpec:
    """Parse ``argv``; usage problems exit with status 2 and name the offending flag or key."""
    parser = build_parser()
    ns = parser.parse_args(argv)
    sub = ns._parser
    try:
        config = read_flat_config(ns.config) if ns.config is not None else {}
        scenario, seeker, options = _resolve(config, ns)
    except (ConfigError, OSError) as exc:
        sub.error(str(exc))
    seed = ns.seed
    if seed is None:
        env = os.environ.get("SEEK_SEED")
        try:
            seed = int(env) if env else 0
        except ValueError:
            sub.error(f"SEEK_SEED must be an integer, got {env!r}")
    stage1 = True if ns.stage1 is None else ns.stage1
    spec = RunSpec(subcommand=ns.subcommand, scenario=scenario, seeker=seeker, options=options,
                   backend=ns.backend, seed=seed, stage1=stage1, out=ns.out)
    if ns.subcommand == "montecarlo":
        if ns.runs < 1:
            sub.error("argument --runs: must be >= 1")
        spec.n_runs, spec.workers, spec.bin_width = ns.runs, ns.workers, ns.bin_width
    if ns.subcommand == "converge":
        if ns.k_max < 0:
            sub.error("argument --k-max: must be >= 0")
        spec.k_max = ns.k_max
    if ns.theta0 is not None:
        if ns.subcommand == "converge" and abs(ns.theta0) > 180:
            sub.error("argument --theta0: must lie within [-180, 180] deg")
        spec.theta_err0 = math.radians(ns.theta0)
        spec.options = replace(spec.options, theta_err0=spec.theta_err0)
    spec.options = replace(spec.options, with_stage1=stage1)
    return spec


def execute(spec: RunSpec) -> int:
    try:
        spec.out.mkdir(parents=True, exist_ok=True)
        if spec.subcommand == "run":
            log = run_episode(spec.scenario, spec.seeker, spec.backend, spec.seed, spec.options)
            log.to_csv(spec.out / "trajectory.csv")
            print(log.summary_line())
        elif spec.subcommand == "montecarlo":
            summary = monte_carlo(spec.scenario, spec.seeker, spec.backend, spec.n_runs, spec.seed,
                                  spec.stage1, spec.options, workers=spec.workers, bin_width=spec.bin_width)
            summary.write_histogram_csv(spec.out / "histogram.csv")
            summary.write_json(spec.out / "summary.json")
            print(f"runs={summary.n_runs} success_rate={summary.success_rate:.3f} "
                  f"mean_distance={summary.mean_distance:.1f} m mean_ratio={summary.mean_ratio:.4f}")
        else:
            trace = convergence_trace(spec.theta_err0, spec.seeker.delta, spec.k_max)
            lines = ["k,theta_err"] + [f"{k},{x!r}" for k, x in enumerate(trace)]
            atomic_write(spec.out / "convergence.csv", "\n".join(lines) + "\n")
            print(f"k_max={spec.k_max} final |theta_err|={abs(trace[-1]):.6g} rad")
    except OSError as exc:
        print(f"rfseek: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    return execute(parse_args(argv))


if __name__ == "__main__":
    sys.exit(main())
