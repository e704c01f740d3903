"""Scenario generation, sensor simulation, and Monte Carlo execution.

A run simulates a vehicle cruising, performing a coordinated turn, and
then losing its communication link for a fixed interval. Up to the
outage, a Kalman filter tracks the vehicle from noisy position fixes and
biased accelerometer readings while a sliding window collects its
estimates. At onset, three predictors branch from the same belief:

* ``ukf``      - open-loop prediction through the motion model
* ``lagrange`` - interpolating polynomial through the most recent window
                 nodes, evaluated forward
* ``vhd``      - virtual-measurement updates from the history polynomial
                 with adaptive confidence

Per-run randomness derives only from the run's seed, so runs are
independent and a Monte Carlo aggregate is identical whether the runs
execute serially or in parallel.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .estimator import GaussianBelief, open_loop_predict, predict, update
from .history import HistoryWindow, lagrange_extrapolate
from .kinematics import (
    AX,
    AY,
    CaModel,
    Disturbance,
    PX,
    PY,
    accel_measurement_matrix,
    ca_model,
    make_state,
    position_measurement_matrix,
    propagate_truth,
)
from .outage import AdaptiveConfidenceParams, run_outage

PREDICTORS = ("ukf", "lagrange", "vhd")

# Initial belief covariance per axis: sigma 1 m, 0.5 m/s, 0.2 m/s^2.
_P0_DIAG = (1.0, 0.25, 0.04, 1.0, 0.25, 0.04)

_GRID_TOL = 1e-9


# ----------------------------------------------------------------------
# configuration
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class SensorConfig:
    """Sensor noise magnitudes.

    position_fix_noise : std dev of each fix coordinate, meters.
    accel_white_noise  : accelerometer white noise std dev, m/s^2.
    accel_bias_walk    : std dev of each per-step bias increment, m/s^2.
    fix_rate           : position fixes per second outside the outage.
    imu_during_outage  : whether accelerometer readings keep feeding the
                         estimators during the outage (off by default:
                         the outage is a total blackout of external data).
    """

    position_fix_noise: float = 1.0
    accel_white_noise: float = 0.05
    accel_bias_walk: float = 0.005
    fix_rate: float = 1.0
    imu_during_outage: bool = False

    def __post_init__(self):
        for name in ("position_fix_noise", "accel_white_noise", "accel_bias_walk"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"SensorConfig invariant: {name} must be >= 0")
        if self.fix_rate <= 0.0:
            raise ValueError("SensorConfig invariant: fix_rate must be > 0")


@dataclass(frozen=True)
class TrajectoryConfig:
    """Vehicle motion plan: straight cruise, one coordinated turn, straight.

    The turn covers [turn_start, turn_start + turn_duration) at a constant
    yaw rate; centripetal acceleration is cruise_speed * turn_rate.
    """

    cruise_speed: float = 2.0
    turn_rate: float = 0.1
    turn_start: float = 45.0
    turn_duration: float = 10.0
    initial_heading: float = 0.0

    def __post_init__(self):
        if self.cruise_speed < 0.0:
            raise ValueError("TrajectoryConfig invariant: cruise_speed must be >= 0")
        if self.turn_start < 0.0 or self.turn_duration < 0.0:
            raise ValueError("TrajectoryConfig invariant: turn timing must be >= 0")

    @property
    def turn_end(self) -> float:
        return self.turn_start + self.turn_duration

    @property
    def has_turn(self) -> bool:
        return self.turn_duration > 0.0 and self.turn_rate != 0.0

    def phases(self, duration: float) -> list[tuple[str, float, float]]:
        """Ordered (kind, t0, t1) segments covering [0, duration]."""
        if not self.has_turn or self.turn_start >= duration:
            return [("straight", 0.0, duration)]
        out = []
        if self.turn_start > 0.0:
            out.append(("straight", 0.0, self.turn_start))
        end = min(self.turn_end, duration)
        out.append(("turning", self.turn_start, end))
        if end < duration:
            out.append(("straight", end, duration))
        return out


@dataclass(frozen=True)
class ScenarioConfig:
    """Every knob of a simulated run.

    Durations are in seconds. The outage covers
    [outage_start, outage_start + outage_duration); the history window
    must be filled before it begins.
    """

    duration: float = 110.0
    dt: float = 0.1
    outage_start: float = 60.0
    outage_duration: float = 40.0
    history_window: float = 50.0
    mc_runs: int = 100
    base_seed: int = 1234
    sigma_jerk: float = 5.0
    poly_degree: int = 2
    lagrange_nodes: int = 8
    current_speed: float = 1.0
    current_heading_deg: float = 45.0
    sensor: SensorConfig = field(default_factory=SensorConfig)
    vhd_params: AdaptiveConfidenceParams = field(default_factory=AdaptiveConfidenceParams)
    trajectory: TrajectoryConfig = field(default_factory=TrajectoryConfig)

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("ScenarioConfig invariant: dt must be > 0")
        if self.duration <= 0.0:
            raise ValueError("ScenarioConfig invariant: duration must be > 0")
        if self.outage_start < self.history_window:
            raise ValueError(
                "ScenarioConfig invariant: outage_start must be >= history_window "
                "(the buffer must fill before the outage)"
            )
        if self.outage_start + self.outage_duration > self.duration + _GRID_TOL:
            raise ValueError("ScenarioConfig invariant: outage must end within the run")
        if self.mc_runs < 1:
            raise ValueError("ScenarioConfig invariant: mc_runs must be >= 1")
        if self.history_window <= 0.0:
            raise ValueError("ScenarioConfig invariant: history_window must be > 0")
        if self.poly_degree < 0:
            raise ValueError("ScenarioConfig invariant: poly_degree must be >= 0")
        if self.lagrange_nodes < 2:
            raise ValueError("ScenarioConfig invariant: lagrange_nodes must be >= 2")
        if self.current_speed < 0.0:
            raise ValueError("ScenarioConfig invariant: current_speed must be >= 0")
        if self.trajectory.has_turn and self.trajectory.turn_start >= self.outage_start:
            raise ValueError(
                "ScenarioConfig invariant: the turn must begin before the outage"
            )
        # The step grid must line up with the fix cadence, the 1 s window
        # sampling, and the configured interval boundaries.
        for name, value in (
            ("window sample period", 1.0 / self.dt),
            ("fix period", 1.0 / (self.sensor.fix_rate * self.dt)),
            ("duration", self.duration / self.dt),
            ("outage_start", self.outage_start / self.dt),
            ("outage_duration", self.outage_duration / self.dt),
        ):
            if abs(value - round(value)) > 1e-6 or round(value) < 1:
                raise ValueError(
                    f"ScenarioConfig invariant: {name} must be a positive multiple of dt"
                )

    # -- derived step counts -------------------------------------------

    @property
    def n_steps(self) -> int:
        return round(self.duration / self.dt)

    @property
    def onset_step(self) -> int:
        return round(self.outage_start / self.dt)

    @property
    def outage_steps(self) -> int:
        return round(self.outage_duration / self.dt)

    @property
    def fix_period_steps(self) -> int:
        return round(1.0 / (self.sensor.fix_rate * self.dt))

    @property
    def window_period_steps(self) -> int:
        return round(1.0 / self.dt)

    @property
    def window_capacity(self) -> int:
        return round(self.history_window) + 1

    @property
    def current(self) -> Disturbance:
        heading = np.radians(self.current_heading_deg)
        return Disturbance(
            current_x=self.current_speed * float(np.cos(heading)),
            current_y=self.current_speed * float(np.sin(heading)),
        )


# ----------------------------------------------------------------------
# truth and sensors
# ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Trajectory:
    """True vehicle states on the step grid."""

    times: np.ndarray
    states: np.ndarray

    @property
    def positions(self) -> np.ndarray:
        return self.states[:, [PX, PY]]

    @property
    def accelerations(self) -> np.ndarray:
        return self.states[:, [AX, AY]]


def generate_truth(cfg: ScenarioConfig, seed: int) -> Trajectory:
    """Simulate the true vehicle trajectory on the step grid.

    Straight segments advance through the CA model plus current drift
    (propagate_truth); the turn advances along the exact circular arc with
    the same per-step drift. The geometry is deterministic, so the result
    does not depend on `seed`; the parameter keeps the interface uniform
    with the sensor layer.
    """
    del seed  # geometry is noise-free
    traj = cfg.trajectory
    dt = cfg.dt
    n = cfg.n_steps
    current = cfg.current
    model = ca_model(dt, 0.0)

    turn_start_step = round(traj.turn_start / dt)
    turn_end_step = round(traj.turn_end / dt)

    def in_turn(step: int) -> bool:
        return traj.has_turn and turn_start_step <= step < turn_end_step

    v = traj.cruise_speed
    w = traj.turn_rate
    heading = traj.initial_heading

    def accel_at(step: int, th: float) -> tuple[float, float]:
        if in_turn(step):
            return (-v * w * np.sin(th), v * w * np.cos(th))
        return (0.0, 0.0)

    states = np.zeros((n + 1, 6))
    ax0, ay0 = accel_at(0, heading)
    state = make_state(
        p_x=0.0, v_x=v * np.cos(heading), a_x=ax0,
        p_y=0.0, v_y=v * np.sin(heading), a_y=ay0,
    )
    states[0] = state

    for i in range(n):
        if in_turn(i):
            new_heading = heading + w * dt
            r = v / w
            state = state.copy()
            state[PX] += r * (np.sin(new_heading) - np.sin(heading)) + current.current_x * dt
            state[PY] += r * (np.cos(heading) - np.cos(new_heading)) + current.current_y * dt
            heading = new_heading
            state[1], state[4] = v * np.cos(heading), v * np.sin(heading)
        else:
            state = propagate_truth(state, model, current)
        state[AX], state[AY] = accel_at(i + 1, heading)
        states[i + 1] = state

    times = np.arange(n + 1) * dt
    return Trajectory(times=times, states=states)


@dataclass(frozen=True, eq=False)
class MeasurementSet:
    """Sensor outputs for one run.

    fix_steps  : step indices at which a position fix arrives.
    fix_values : (len(fix_steps), 2) noisy position fixes.
    imu_accel  : (n_steps + 1, 2) accelerometer readings on the full grid
                 (true acceleration + accumulated bias + white noise).
    imu_bias   : (n_steps + 1, 2) the underlying bias random walk, kept
                 for diagnostics.
    """

    fix_steps: np.ndarray
    fix_values: np.ndarray
    imu_accel: np.ndarray
    imu_bias: np.ndarray


def simulate_measurements(truth: Trajectory, cfg: ScenarioConfig, seed: int) -> MeasurementSet:
    """Generate the sensor streams for one run.

    Position fixes arrive every fix period starting at the first period
    boundary after t = 0 and are suppressed for steps inside
    [outage_start, outage_start + outage_duration). The accelerometer
    reports every step with white noise plus a bias that accumulates an
    independent Gaussian increment per step (zero bias at step 0).

    The three noise streams draw from independent child generators spawned
    from `seed`, so the realization of one stream does not depend on the
    sizing of another.
    """
    n1 = truth.states.shape[0]
    sensor = cfg.sensor

    ss = np.random.SeedSequence(entropy=seed)
    fix_rng, white_rng, bias_rng = (np.random.default_rng(c) for c in ss.spawn(3))

    period = cfg.fix_period_steps
    onset, end = cfg.onset_step, cfg.onset_step + cfg.outage_steps
    fix_steps = np.array(
        [i for i in range(period, n1, period) if not (onset <= i < end)], dtype=int
    )
    fix_noise = fix_rng.normal(0.0, sensor.position_fix_noise, size=(fix_steps.size, 2))
    fix_values = truth.positions[fix_steps] + fix_noise

    white = white_rng.normal(0.0, sensor.accel_white_noise, size=(n1, 2))
    increments = bias_rng.normal(0.0, sensor.accel_bias_walk, size=(n1, 2))
    increments[0] = 0.0
    bias = np.cumsum(increments, axis=0)
    imu_accel = truth.accelerations + bias + white

    return MeasurementSet(
        fix_steps=fix_steps, fix_values=fix_values, imu_accel=imu_accel, imu_bias=bias
    )


# ----------------------------------------------------------------------
# single run
# ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class OnsetState:
    """Everything known at the moment the outage begins."""

    belief: GaussianBelief
    window: HistoryWindow
    model: CaModel
    truth: Trajectory
    measurements: MeasurementSet
    tracking_err: np.ndarray


def track_to_outage(cfg: ScenarioConfig, seed: int) -> OnsetState:
    """Run the tracking filter from t = 0 to the outage onset.

    Per step the filter predicts, assimilates the accelerometer reading
    (weighted by its white-noise covariance; the bias is unmodeled), then
    assimilates the position fix when one arrives. Once per second the
    post-update estimate is pushed into the history window, including at
    the onset step itself, so the window's newest sample is the belief the
    predictors branch from.
    """
    model = ca_model(cfg.dt, cfg.sigma_jerk)
    truth = generate_truth(cfg, seed)
    meas = simulate_measurements(truth, cfg, seed)

    H_pos = position_measurement_matrix()
    H_acc = accel_measurement_matrix()
    R_fix = np.diag([cfg.sensor.position_fix_noise**2] * 2)
    R_imu = np.diag([cfg.sensor.accel_white_noise**2] * 2)

    belief = GaussianBelief(truth.states[0].copy(), np.diag(_P0_DIAG))
    window = HistoryWindow(cfg.window_capacity)
    window.push(0.0, belief.mean)

    fix_row = {int(s): k for k, s in enumerate(meas.fix_steps)}
    onset = cfg.onset_step
    tracking_err = np.zeros(onset + 1)

    for i in range(1, onset + 1):
        belief = predict(belief, model)
        belief = update(belief, meas.imu_accel[i], R_imu, H_acc)
        if i in fix_row:
            belief = update(belief, meas.fix_values[fix_row[i]], R_fix, H_pos)
        if i % cfg.window_period_steps == 0:
            window.push(i * cfg.dt, belief.mean)
        tracking_err[i] = float(
            np.hypot(belief.mean[PX] - truth.states[i, PX], belief.mean[PY] - truth.states[i, PY])
        )

    return OnsetState(
        belief=belief,
        window=window,
        model=model,
        truth=truth,
        measurements=meas,
        tracking_err=tracking_err,
    )


@dataclass(frozen=True, eq=False)
class RunRecord:
    """Outage-window results of a single seeded run.

    All sequences share the outage timestamps; index 0 is the shared
    branch point at onset, where every predictor coincides with the
    filter's last belief.
    """

    seed: int
    times: np.ndarray
    truth_xy: np.ndarray
    paths: dict[str, np.ndarray]
    errors: dict[str, np.ndarray]
    tracking_err: np.ndarray


def run_scenario(cfg: ScenarioConfig, seed: int) -> RunRecord:
    """Track to onset, then branch the three predictors over the outage."""
    onset_state = track_to_outage(cfg, seed)
    model = onset_state.model
    window = onset_state.window
    b0 = onset_state.belief

    T = cfg.outage_steps
    onset = cfg.onset_step
    times = cfg.outage_start + np.arange(T + 1) * cfg.dt
    truth_xy = onset_state.truth.positions[onset : onset + T + 1]

    start_pos = np.array([b0.mean[PX], b0.mean[PY]])
    paths = {name: np.empty((T + 1, 2)) for name in PREDICTORS}
    for name in PREDICTORS:
        paths[name][0] = start_pos

    ukf_seq = open_loop_predict(b0, model, T)
    vhd_seq = run_outage(b0, window, cfg.vhd_params, T, model, degree=cfg.poly_degree)
    for k in range(1, T + 1):
        paths["ukf"][k] = (ukf_seq[k - 1].mean[PX], ukf_seq[k - 1].mean[PY])
        paths["vhd"][k] = (vhd_seq[k - 1].mean[PX], vhd_seq[k - 1].mean[PY])
        paths["lagrange"][k] = lagrange_extrapolate(
            window, cfg.outage_start + k * cfg.dt, cfg.lagrange_nodes
        )

    errors = {
        name: np.linalg.norm(paths[name] - truth_xy, axis=1) for name in PREDICTORS
    }

    return RunRecord(
        seed=seed,
        times=times,
        truth_xy=truth_xy,
        paths=paths,
        errors=errors,
        tracking_err=onset_state.tracking_err,
    )


# ----------------------------------------------------------------------
# Monte Carlo
# ----------------------------------------------------------------------

def rmse(errors) -> float:
    """Root mean square of a non-empty error sequence."""
    arr = np.asarray(errors, dtype=float)
    if arr.size == 0:
        raise ValueError("rmse of an empty sequence")
    return float(np.sqrt(np.mean(np.square(arr))))


@dataclass(frozen=True, eq=False)
class McResult:
    """Aggregate metrics over a batch of seeded runs.

    mean_err maps each predictor to the per-step mean (across runs) of the
    Euclidean position error; rmse_m pools all steps of all runs; terminal
    errors are averaged across runs. Reductions compare pooled RMSE
    against the open-loop predictor.
    """

    times: np.ndarray
    mean_err: dict[str, np.ndarray]
    rmse_m: dict[str, float]
    terminal_mean_m: dict[str, float]
    reduction_vs_ukf_pct: dict[str, float]
    mc_runs: int
    base_seed: int
    designated_run: RunRecord


def _run_scenario_packed(args: tuple[ScenarioConfig, int]) -> RunRecord:
    return run_scenario(*args)


def monte_carlo(cfg: ScenarioConfig, jobs: int = 1) -> McResult:
    """Run mc_runs seeded scenarios and aggregate their error series.

    Seeds are base_seed .. base_seed + mc_runs - 1. With jobs > 1 the runs
    execute in a process pool; records are collected in seed order, so the
    aggregate is identical to the serial one.
    """
    seeds = [cfg.base_seed + k for k in range(cfg.mc_runs)]
    if jobs < 1:
        raise ValueError(f"jobs must be >= 1, got {jobs}")
    if jobs == 1 or cfg.mc_runs == 1:
        records = [run_scenario(cfg, s) for s in seeds]
    else:
        work = [(cfg, s) for s in seeds]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_scenario_packed, work, chunksize=max(1, len(work) // (4 * jobs))))

    stacked = {
        name: np.stack([rec.errors[name] for rec in records]) for name in PREDICTORS
    }
    mean_err = {name: stacked[name].mean(axis=0) for name in PREDICTORS}
    rmse_m = {name: rmse(stacked[name]) for name in PREDICTORS}
    terminal = {name: float(stacked[name][:, -1].mean()) for name in PREDICTORS}
    reduction = {
        name: 100.0 * (1.0 - rmse_m[name] / rmse_m["ukf"])
        for name in PREDICTORS
        if name != "ukf"
    }

    return McResult(
        times=records[0].times,
        mean_err=mean_err,
        rmse_m=rmse_m,
        terminal_mean_m=terminal,
        reduction_vs_ukf_pct=reduction,
        mc_runs=cfg.mc_runs,
        base_seed=cfg.base_seed,
        designated_run=records[0],
    )
