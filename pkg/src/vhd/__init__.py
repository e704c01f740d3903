"""Trajectory prediction through communication outages.

The package tracks a vehicle with a constant-acceleration Kalman filter
while fixes arrive, and when the link drops it keeps the estimate alive by
distilling the recent trajectory history into a polynomial and feeding the
filter synthetic position measurements whose confidence decays with the
outage age. Open-loop prediction and Lagrange extrapolation are included
as baselines, with a Monte Carlo harness and CLI to compare all three.
"""

from .estimator import (
    GaussianBelief,
    KlArgminResult,
    TargetDistribution,
    gaussian_kl,
    kl_optimal_virtual_measurement,
    open_loop_predict,
    predict,
    update,
)
from .history import (
    HistoryWindow,
    PolyModel,
    extrapolate,
    fit_polynomial,
    lagrange_extrapolate,
    residual_covariance,
    smoothed_state,
)
from .kinematics import (
    CaModel,
    Disturbance,
    ca_model,
    ca_process_noise,
    ca_transition_matrix,
    make_state,
    propagate_truth,
)
from .outage import (
    AdaptiveConfidenceParams,
    OutageClock,
    VirtualMeasurement,
    VirtualUpdateDiagnostic,
    adaptive_noise,
    run_outage,
    vhd_outage_step,
    virtual_measurement,
)
from .simkit import (
    McResult,
    MeasurementSet,
    OnsetState,
    PREDICTORS,
    RunRecord,
    ScenarioConfig,
    SensorConfig,
    Trajectory,
    TrajectoryConfig,
    generate_truth,
    monte_carlo,
    rmse,
    run_scenario,
    simulate_measurements,
    track_to_outage,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptiveConfidenceParams",
    "CaModel",
    "Disturbance",
    "GaussianBelief",
    "HistoryWindow",
    "KlArgminResult",
    "McResult",
    "MeasurementSet",
    "OnsetState",
    "OutageClock",
    "PREDICTORS",
    "PolyModel",
    "RunRecord",
    "ScenarioConfig",
    "SensorConfig",
    "TargetDistribution",
    "Trajectory",
    "TrajectoryConfig",
    "VirtualMeasurement",
    "VirtualUpdateDiagnostic",
    "adaptive_noise",
    "ca_model",
    "ca_process_noise",
    "ca_transition_matrix",
    "extrapolate",
    "fit_polynomial",
    "gaussian_kl",
    "generate_truth",
    "kl_optimal_virtual_measurement",
    "lagrange_extrapolate",
    "make_state",
    "monte_carlo",
    "open_loop_predict",
    "predict",
    "propagate_truth",
    "residual_covariance",
    "rmse",
    "run_outage",
    "run_scenario",
    "simulate_measurements",
    "smoothed_state",
    "track_to_outage",
    "update",
    "vhd_outage_step",
    "virtual_measurement",
    "__version__",
]
