"""Value-of-information scheduling and LQG control over multi-hop networks."""

from .control import CostReport, GainSchedule, control_action, empirical_cost, riccati_backward, theoretical_cost
from .estimation import (
    AoiTracker,
    HopEstimate,
    KalmanState,
    MismatchState,
    aoi_step,
    cascade_step,
    error_decomposition,
    innovation_covariance,
    kalman_init,
    kalman_step,
    mismatch_direct,
    mismatch_recursion,
)
from .harness import (
    PolicySpec,
    ScenarioConfig,
    SimulationTrace,
    SummaryMetrics,
    compare_policies,
    export_summary,
    export_trace,
    load_scenario,
    load_trace,
    monte_carlo,
    parse_policy,
    pendulum_scenario,
    run_episode,
    save_scenario,
    validate_scenario,
)
from .scheduling import (
    NetworkTopology,
    RateAccumulator,
    SchedulerDecisionRecord,
    calibrate_lambda,
    dvoi_decide,
    dvoi_value,
    periodic_policy,
    request_rate,
    threshold_single_hop,
)
from .system_model import (
    NoiseSource,
    PlantModel,
    PlantNoise,
    PlantState,
    discretize_continuous,
    sample_gaussian,
    step_plant,
    validate_model,
)
from .unknown_input import (
    AckLedger,
    InputEstimatorWeights,
    approximated_dvoi,
    closed_form_two_hop,
    estimate_unknown_inputs,
)

__version__ = "0.1.0"
