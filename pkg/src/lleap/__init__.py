"""Time-bucket supply-chain simulation, L-leap stochastic kernels, and
multilevel Monte Carlo uncertainty propagation."""

from .model import (
    CyclicNetwork,
    DelayQueue,
    EmptyProcessList,
    InventoryPolicy,
    ModelError,
    OrderEvent,
    OrderStream,
    ProcessSpec,
    QueueEntry,
    RefillRule,
    SimConfig,
    SupplyChainNetwork,
    SystemState,
    ValidationReport,
    classify_parts,
    part_name,
    validate_network,
)
from .bucket_engine import (
    Trajectory,
    compute_flags,
    compute_rate,
    compute_rate_shared,
    consume,
    manage_inventory,
    produce,
    project_demand,
    run_pull,
    run_push,
)
from .lleap_engine import (
    CoupledPair,
    RngStream,
    run_coupled_pair,
    run_lleap,
    sample_consumption,
    sample_production,
)
from .des_oracle import NoConvergence, OracleConfig, OracleResult, run_oracle
from .uq import (
    BudgetExceeded,
    DegenerateFit,
    LevelEstimate,
    MCResult,
    MLMCResult,
    ParamSpec,
    QoISpec,
    QoIVariant,
    RateEstimates,
    ScenarioSampler,
    ScreeningConfig,
    Tolerances,
    Uniform,
    UqBlock,
    apply_parameters,
    estimate_rates,
    evaluate_qoi,
    mc_estimate,
    mlmc_estimate,
    optimal_samples,
    sample_parameters,
    select_max_level,
)
from .scenario_io import (
    ParseError,
    Scenario,
    ValidationError,
    builtin_names,
    builtin_scenarios,
    get_scenario,
    load_scenario,
    parse_scenario,
    serialize_scenario,
)

__version__ = "0.1.0"
