"""Command-line front end: config loading, execution, CSV/JSON export.

Config files are flat ``section.key = value`` text: one assignment per
line, ``#`` starts a comment, blank lines are ignored. Every key is
optional; missing keys take the library defaults. The full resolved
configuration is echoed next to the outputs in the same format, so an
output directory is always reproducible from its own echo.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .outage import AdaptiveConfidenceParams
from .simkit import PREDICTORS, McResult, ScenarioConfig, SensorConfig, TrajectoryConfig, monte_carlo

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


class ConfigError(Exception):
    """A config file or config value the run cannot proceed with."""


def _parse_bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


# key -> (converter, pretty type name); order fixed for the resolved echo.
_SCHEMA = {
    "sim.duration": (float, "float"),
    "sim.dt": (float, "float"),
    "sim.outage_start": (float, "float"),
    "sim.outage_duration": (float, "float"),
    "sim.history_window": (float, "float"),
    "sim.mc_runs": (int, "int"),
    "sim.base_seed": (int, "int"),
    "sim.sigma_jerk": (float, "float"),
    "current.speed": (float, "float"),
    "current.heading_deg": (float, "float"),
    "sensor.position_fix_noise": (float, "float"),
    "sensor.accel_white_noise": (float, "float"),
    "sensor.accel_bias_walk": (float, "float"),
    "sensor.fix_rate": (float, "float"),
    "sensor.imu_during_outage": (_parse_bool, "bool"),
    "vhd.r_base": (float, "float"),
    "vhd.alpha": (float, "float"),
    "vhd.p": (float, "float"),
    "vhd.poly_degree": (int, "int"),
    "baseline.lagrange_nodes": (int, "int"),
    "traj.cruise_speed": (float, "float"),
    "traj.turn_rate": (float, "float"),
    "traj.turn_start": (float, "float"),
    "traj.turn_duration": (float, "float"),
    "traj.initial_heading": (float, "float"),
}


def _parse_lines(lines, source: str) -> dict[str, object]:
    values: dict[str, object] = {}
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, text = line.partition("=")
        key, text = key.strip(), text.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r} (first set on line {seen[key]})")
        seen[key] = lineno
        converter, type_name = _SCHEMA[key]
        try:
            values[key] = converter(text)
        except ValueError:
            raise ConfigError(
                f"{source}:{lineno}: value for {key!r} must be {type_name}, got {text!r}"
            ) from None
    return values


def _build_config(values: dict[str, object]) -> ScenarioConfig:
    defaults = ScenarioConfig()

    def pick(key: str, fallback):
        return values.get(key, fallback)

    try:
        sensor = SensorConfig(
            position_fix_noise=pick("sensor.position_fix_noise", defaults.sensor.position_fix_noise),
            accel_white_noise=pick("sensor.accel_white_noise", defaults.sensor.accel_white_noise),
            accel_bias_walk=pick("sensor.accel_bias_walk", defaults.sensor.accel_bias_walk),
            fix_rate=pick("sensor.fix_rate", defaults.sensor.fix_rate),
            imu_during_outage=pick("sensor.imu_during_outage", defaults.sensor.imu_during_outage),
        )
        r_base_scale = pick("vhd.r_base", float(defaults.vhd_params.r_base[0, 0]))
        vhd_params = AdaptiveConfidenceParams(
            r_base=np.diag([r_base_scale, r_base_scale]),
            alpha=pick("vhd.alpha", defaults.vhd_params.alpha),
            p=pick("vhd.p", defaults.vhd_params.p),
        )
        trajectory = TrajectoryConfig(
            cruise_speed=pick("traj.cruise_speed", defaults.trajectory.cruise_speed),
            turn_rate=pick("traj.turn_rate", defaults.trajectory.turn_rate),
            turn_start=pick("traj.turn_start", defaults.trajectory.turn_start),
            turn_duration=pick("traj.turn_duration", defaults.trajectory.turn_duration),
            initial_heading=pick("traj.initial_heading", defaults.trajectory.initial_heading),
        )
        return ScenarioConfig(
            duration=pick("sim.duration", defaults.duration),
            dt=pick("sim.dt", defaults.dt),
            outage_start=pick("sim.outage_start", defaults.outage_start),
            outage_duration=pick("sim.outage_duration", defaults.outage_duration),
            history_window=pick("sim.history_window", defaults.history_window),
            mc_runs=pick("sim.mc_runs", defaults.mc_runs),
            base_seed=pick("sim.base_seed", defaults.base_seed),
            sigma_jerk=pick("sim.sigma_jerk", defaults.sigma_jerk),
            poly_degree=pick("vhd.poly_degree", defaults.poly_degree),
            lagrange_nodes=pick("baseline.lagrange_nodes", defaults.lagrange_nodes),
            current_speed=pick("current.speed", defaults.current_speed),
            current_heading_deg=pick("current.heading_deg", defaults.current_heading_deg),
            sensor=sensor,
            vhd_params=vhd_params,
            trajectory=trajectory,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> ScenarioConfig:
    """Load a config file; missing keys fall back to the defaults."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return _build_config(_parse_lines(lines, str(path)))


def config_values(cfg: ScenarioConfig) -> dict[str, object]:
    """The flat key/value view of a resolved config, in schema order."""
    return {
        "sim.duration": cfg.duration,
        "sim.dt": cfg.dt,
        "sim.outage_start": cfg.outage_start,
        "sim.outage_duration": cfg.outage_duration,
        "sim.history_window": cfg.history_window,
        "sim.mc_runs": cfg.mc_runs,
        "sim.base_seed": cfg.base_seed,
        "sim.sigma_jerk": cfg.sigma_jerk,
        "current.speed": cfg.current_speed,
        "current.heading_deg": cfg.current_heading_deg,
        "sensor.position_fix_noise": cfg.sensor.position_fix_noise,
        "sensor.accel_white_noise": cfg.sensor.accel_white_noise,
        "sensor.accel_bias_walk": cfg.sensor.accel_bias_walk,
        "sensor.fix_rate": cfg.sensor.fix_rate,
        "sensor.imu_during_outage": cfg.sensor.imu_during_outage,
        "vhd.r_base": float(cfg.vhd_params.r_base[0, 0]),
        "vhd.alpha": cfg.vhd_params.alpha,
        "vhd.p": cfg.vhd_params.p,
        "vhd.poly_degree": cfg.poly_degree,
        "baseline.lagrange_nodes": cfg.lagrange_nodes,
        "traj.cruise_speed": cfg.trajectory.cruise_speed,
        "traj.turn_rate": cfg.trajectory.turn_rate,
        "traj.turn_start": cfg.trajectory.turn_start,
        "traj.turn_duration": cfg.trajectory.turn_duration,
        "traj.initial_heading": cfg.trajectory.initial_heading,
    }


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def resolved_config_text(cfg: ScenarioConfig) -> str:
    """Round-trippable echo of every parameter the run will use."""
    lines = ["# resolved configuration (all values explicit)"]
    lines += [f"{key} = {_format_value(val)}" for key, val in config_values(cfg).items()]
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------
# output writing
# ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class OutputBundle:
    """Paths of everything run_command wrote, plus the aggregate result."""

    out_dir: Path
    paths: dict[str, Path]
    result: McResult


_AGGREGATION_NOTE = (
    "per-step error series = mean across runs of Euclidean position error; "
    "RMSE pooled over all outage steps and runs; terminal = mean across runs "
    "of the final-step error"
)


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def _summary_text(cfg: ScenarioConfig, result: McResult, predictors) -> str:
    lines = [
        "outage prediction summary",
        f"  runs: {result.mc_runs}   base seed: {result.base_seed}   "
        f"outage: {_fmt(cfg.outage_start)} s + {_fmt(cfg.outage_duration)} s   dt: {_fmt(cfg.dt)} s",
        f"  aggregation: {_AGGREGATION_NOTE}",
        "",
        f"  {'predictor':<12}{'RMSE [m]':>14}{'terminal [m]':>16}{'reduction vs ukf [%]':>24}",
    ]
    for name in predictors:
        reduction = result.reduction_vs_ukf_pct.get(name)
        red_text = _fmt(reduction) if reduction is not None and "ukf" in predictors else "--"
        lines.append(
            f"  {name:<12}{_fmt(result.rmse_m[name]):>14}"
            f"{_fmt(result.terminal_mean_m[name]):>16}{red_text:>24}"
        )
    return "\n".join(lines) + "\n"


def _summary_json(cfg: ScenarioConfig, result: McResult, predictors) -> str:
    def sig(v: float) -> float:
        return float(f"{v:.6g}")

    metrics = {}
    for name in predictors:
        entry = {
            "rmse_m": sig(result.rmse_m[name]),
            "terminal_mean_m": sig(result.terminal_mean_m[name]),
        }
        if name in result.reduction_vs_ukf_pct and "ukf" in predictors:
            entry["reduction_vs_ukf_pct"] = sig(result.reduction_vs_ukf_pct[name])
        metrics[name] = entry
    payload = {
        "aggregation": _AGGREGATION_NOTE,
        "mc_runs": result.mc_runs,
        "base_seed": result.base_seed,
        "predictors": metrics,
        "config": {k: (v if not isinstance(v, float) else sig(v)) for k, v in config_values(cfg).items()},
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _error_series_csv(result: McResult, predictors) -> str:
    header = ["time_s"] + [f"{name}_mean_err_m" for name in predictors]
    rows = [",".join(header)]
    for k, t in enumerate(result.times):
        cells = [_fmt(t)] + [_fmt(result.mean_err[name][k]) for name in predictors]
        rows.append(",".join(cells))
    return "\n".join(rows) + "\n"


def _trajectory_csv(result: McResult, predictors) -> str:
    rec = result.designated_run
    header = ["time_s", "truth_x", "truth_y"]
    for name in predictors:
        header += [f"{name}_x", f"{name}_y"]
    rows = [",".join(header)]
    for k, t in enumerate(rec.times):
        cells = [_fmt(t), _fmt(rec.truth_xy[k, 0]), _fmt(rec.truth_xy[k, 1])]
        for name in predictors:
            cells += [_fmt(rec.paths[name][k, 0]), _fmt(rec.paths[name][k, 1])]
        rows.append(",".join(cells))
    return "\n".join(rows) + "\n"


def run_command(
    cfg: ScenarioConfig,
    out_dir,
    predictors=PREDICTORS,
    quiet: bool = False,
    jobs: int = 1,
) -> OutputBundle:
    """Execute the Monte Carlo batch and write the output bundle.

    Writes resolved_config.cfg, summary.txt, summary.json,
    error_series.csv (mean error series), and trajectory.csv (the
    base-seed run). Column sets follow the `predictors` selection in the
    fixed order ukf, lagrange, vhd.
    """
    predictors = tuple(name for name in PREDICTORS if name in predictors)
    if not predictors:
        raise ConfigError("predictor selection is empty")

    result = monte_carlo(cfg, jobs=jobs)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    contents = {
        "resolved_config": (out_dir / "resolved_config.cfg", resolved_config_text(cfg)),
        "summary_text": (out_dir / "summary.txt", _summary_text(cfg, result, predictors)),
        "summary_json": (out_dir / "summary.json", _summary_json(cfg, result, predictors)),
        "error_series": (out_dir / "error_series.csv", _error_series_csv(result, predictors)),
        "trajectory": (out_dir / "trajectory.csv", _trajectory_csv(result, predictors)),
    }
    paths = {}
    for key, (path, text) in contents.items():
        path.write_text(text, encoding="utf-8", newline="\n")
        paths[key] = path

    if not quiet:
        sys.stdout.write(contents["summary_text"][1])

    return OutputBundle(out_dir=out_dir, paths=paths, result=result)


# ----------------------------------------------------------------------
# entry point
# ----------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vhd-sim",
        description="Monte Carlo comparison of outage-time trajectory predictors.",
    )
    parser.add_argument("--config", metavar="PATH", help="config file (flat key = value lines)")
    parser.add_argument("--runs", type=int, metavar="N", help="override sim.mc_runs")
    parser.add_argument("--seed", type=int, metavar="S", help="override sim.base_seed")
    parser.add_argument("--out-dir", default="out", metavar="PATH", help="output directory (default: out)")
    parser.add_argument(
        "--predictors",
        default=",".join(PREDICTORS),
        metavar="LIST",
        help="comma-separated subset of ukf,lagrange,vhd",
    )
    parser.add_argument("--jobs", type=int, default=1, metavar="N", help="parallel worker processes")
    parser.add_argument("--quiet", action="store_true", help="suppress the summary on stdout")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)

    try:
        cfg = load_config(args.config) if args.config else ScenarioConfig()
        overrides = {}
        if args.runs is not None:
            overrides["mc_runs"] = args.runs
        if args.seed is not None:
            overrides["base_seed"] = args.seed
        if overrides:
            cfg = replace(cfg, **overrides)
        names = tuple(part.strip() for part in args.predictors.split(",") if part.strip())
        unknown = [name for name in names if name not in PREDICTORS]
        if unknown:
            raise ConfigError(f"unknown predictors: {', '.join(unknown)} (choose from {', '.join(PREDICTORS)})")
        if args.jobs < 1:
            raise ConfigError(f"--jobs must be >= 1, got {args.jobs}")
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        run_command(cfg, args.out_dir, predictors=names, quiet=args.quiet, jobs=args.jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
