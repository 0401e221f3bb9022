"""Command-line entry point.

Selects a scenario, runs it, writes CSV/JSON artifacts to the output
directory, and exits 0 on success, 2 when a statistical threshold fails,
and 1 on configuration or validation errors (CI can tell "broken" from
"statistically failing").  Every flag has a config-file equivalent
(YAML, same key with underscores); explicit flags override file values.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

import yaml

from . import experiments
from .chronometry import ClockScenario, dilation_time, queue_clock_count
from .engine import Mode, run_trial
from .errors import ConfigError, ScoutnetError
from .lattice import (
    Lattice,
    build_grid,
    build_intensity_star,
    build_slit_grid,
    build_star,
    build_two_path,
    load_topology,
)

SCENARIOS = ("star", "two-path", "double-slit", "grid", "clock", "dilation", "custom")
OUT_ENV_VAR = "SCOUTNET_OUT"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_THRESHOLD = 2


@dataclass
class RunConfig:
    scenario: str = "star"
    mode: str = "aggregate"
    wavelength: float = 1.0
    trials: int = 10_000
    seed: int = 42
    jobs: int = 1
    topology: Optional[str] = None
    out: str = "."
    trace: bool = False
    tv_threshold: Optional[float] = None
    chi_percentile: float = 0.99
    detectors: int = 3
    arm_hops: int = 2
    intensities: Optional[str] = None
    len_a: float = 2.0
    len_b: float = 2.0
    hops: int = 2
    grid_w: int = 3
    grid_h: int = 9
    slits: str = "2,6"
    screen_detectors: Optional[int] = None
    v: Optional[str] = None
    distance: str = "10"
    laser_distance: int = 1
    cadence: int = 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scoutnet",
        description="Deterministic scout/query/lottery protocol simulator",
    )
    add = parser.add_argument
    add("--config", help="YAML config file; flags override its values")
    add("--scenario", choices=SCENARIOS)
    add("--mode", choices=[m.value for m in Mode])
    add("--lambda", dest="wavelength", type=float, help="photon wavelength")
    add("--trials", type=int)
    add("--seed", type=int, help="64-bit master seed")
    add("--jobs", type=int, help="parallel trial workers (results identical)")
    add("--topology", help="topology document (custom scenario)")
    add("--out", help=f"output directory (default ${OUT_ENV_VAR} or cwd)")
    add("--trace", action="store_true", default=None, help="write a trial event log")
    add("--tv-threshold", dest="tv_threshold", type=float)
    add("--chi-percentile", dest="chi_percentile", type=float)
    add("--detectors", type=int, help="star detector count")
    add("--arm-hops", dest="arm_hops", type=int, help="star arm hop count")
    add("--intensities", help="comma list of star arm target intensities")
    add("--len-a", dest="len_a", type=float, help="two-path: first path length")
    add("--len-b", dest="len_b", type=float, help="two-path: second path length")
    add("--hops", type=int, help="two-path: hops per path")
    add("--grid-w", dest="grid_w", type=int)
    add("--grid-h", dest="grid_h", type=int)
    add("--slits", help="comma list of open barrier rows")
    add("--screen-detectors", dest="screen_detectors", type=int)
    add("--v", help="dilation: comma list of speeds in units of c")
    add("--distance", help="clock: comma list of source distances in hops")
    add("--laser-distance", dest="laser_distance", type=int)
    add("--cadence", type=int, help="clock: ticks between laser emissions")
    return parser


def _merge_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig()
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            loaded = yaml.safe_load(path.read_text()) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"unparseable config file: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must be a mapping")
        known = {f.name for f in fields(RunConfig)}
        for key, value in loaded.items():
            name = str(key).replace("-", "_")
            if name not in known:
                raise ConfigError(f"unknown config key {key!r}")
            setattr(config, name, value)
    env_out = os.environ.get(OUT_ENV_VAR)
    if env_out and args.out is None and config.out == ".":
        config.out = env_out
    for f in fields(RunConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            setattr(config, f.name, value)
    return config


def _parse_float_list(text: str, flag: str) -> list[float]:
    try:
        return [float(part) for part in str(text).split(",") if part != ""]
    except ValueError as exc:
        raise ConfigError(f"malformed {flag} value {text!r}") from exc


def _parse_int_list(text: str, flag: str) -> list[int]:
    try:
        return [int(part) for part in str(text).split(",") if part != ""]
    except ValueError as exc:
        raise ConfigError(f"malformed {flag} value {text!r}") from exc


def _scenario_lattice(config: RunConfig) -> Lattice:
    if config.scenario == "star":
        if config.intensities:
            targets = _parse_float_list(config.intensities, "--intensities")
            return build_intensity_star(targets, wavelength=config.wavelength)
        return build_star(
            config.detectors,
            config.arm_hops,
            [1.0] * config.detectors,
            wavelength=config.wavelength,
        )
    if config.scenario == "two-path":
        return build_two_path(
            config.len_a, config.len_b, config.hops, wavelength=config.wavelength
        )
    if config.scenario == "double-slit":
        return build_slit_grid(
            config.grid_w,
            config.grid_h,
            _parse_int_list(config.slits, "--slits"),
            screen_detectors=config.screen_detectors,
            wavelength=config.wavelength,
        )
    if config.scenario == "grid":
        return build_grid(
            config.grid_w,
            config.grid_h,
            detector_mode="column",
            wavelength=config.wavelength,
        )
    if config.scenario == "custom":
        if not config.topology:
            raise ConfigError("custom scenario requires --topology")
        path = Path(config.topology)
        if not path.is_file():
            raise ConfigError(f"topology file not found: {path}")
        return load_topology(path.read_text())
    raise ConfigError(f"scenario {config.scenario!r} has no lattice")


def _run_ensemble_scenario(config: RunConfig, out_dir: Path) -> int:
    lattice = _scenario_lattice(config)
    mode = Mode(config.mode)
    if config.trace:
        events: list[str] = []
        run_trial(lattice, mode, config.seed, 0, trace=events.append)
        (out_dir / "trial_trace.log").write_text("\n".join(events) + "\n")

    if config.scenario == "double-slit":
        profile = experiments.interference_profile(
            lattice, mode, config.trials, config.seed, jobs=config.jobs
        )
        result = profile.ensemble
        (out_dir / "profile.csv").write_text(experiments.profile_csv(profile))
        default_tv = 0.02
    else:
        result = experiments.run_ensemble(
            lattice,
            mode,
            config.trials,
            config.seed,
            jobs=config.jobs,
            lattice_id=config.scenario,
        )
        default_tv = 0.01
    (out_dir / "ensemble.csv").write_text(experiments.ensemble_csv(result))
    (out_dir / "summary.json").write_text(experiments.summary_json(result))

    tv_threshold = (
        config.tv_threshold if config.tv_threshold is not None else default_tv
    )
    if result.tv_distance > tv_threshold:
        print(
            f"threshold failure: tv {result.tv_distance:.5f} > {tv_threshold}",
            file=sys.stderr,
        )
        return EXIT_THRESHOLD
    if result.dof > 0:
        critical = experiments.chi_square_critical(result.dof, config.chi_percentile)
        if result.chi_square > critical:
            print(
                f"threshold failure: chi2 {result.chi_square:.3f} > "
                f"critical {critical:.3f} (dof {result.dof})",
                file=sys.stderr,
            )
            return EXIT_THRESHOLD
    return EXIT_OK


def _run_clock(config: RunConfig, out_dir: Path) -> int:
    lines = ["source_distance,laser_distance,cadence,laser_count"]
    for d_s in _parse_int_list(config.distance, "--distance"):
        scenario = ClockScenario(d_s, config.laser_distance, config.cadence)
        reading = queue_clock_count(scenario)
        lines.append(
            f"{d_s},{config.laser_distance},{config.cadence},{reading.laser_count}"
        )
    (out_dir / "clock.csv").write_text("\n".join(lines) + "\n")
    return EXIT_OK


def _run_dilation(config: RunConfig, out_dir: Path) -> int:
    if config.v is not None:
        speeds = _parse_float_list(config.v, "--v")
    else:
        speeds = [i / 100.0 for i in range(0, 100)]
    lines = ["v,t"]
    for v in speeds:
        lines.append(f"{v!r},{dilation_time(1.0, v)!r}")
    (out_dir / "dilation.csv").write_text("\n".join(lines) + "\n")
    return EXIT_OK


def run(config: RunConfig) -> int:
    if config.scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {config.scenario!r}")
    if config.trials < 1:
        raise ConfigError("trials must be >= 1")
    if config.jobs < 1:
        raise ConfigError("jobs must be >= 1")
    out_dir = Path(config.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if config.scenario == "clock":
        return _run_clock(config, out_dir)
    if config.scenario == "dilation":
        return _run_dilation(config, out_dir)
    return _run_ensemble_scenario(config, out_dir)


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = _merge_config(args)
        return run(config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ScoutnetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
