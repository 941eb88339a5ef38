"""Energy-efficiency optimization for downlink NOMA pinching-antenna systems.

Pipeline: deterministic geometry/channel construction, closed-form optimal
power allocation for a fixed activation set (Dinkelbach), matching-based
local search over which candidate positions to activate, benchmark schemes,
and a seeded Monte Carlo experiment harness.
"""

from .benchmarks import (
    SchemeId,
    best_activation,
    conventional_baseline,
    exhaustive_search,
    min_power_scheme,
    nearest_pa_scheme,
)
from .channel import (
    ChannelMatrix,
    Layout,
    build_channel_matrix,
    build_layout,
    effective_gain,
    effective_gains,
    freespace_factor,
    sic_order,
    waveguide_factor,
)
from .config import ScenarioConfig, dbm_to_watt, load_scenario, watt_to_dbm
from .errors import (
    ConfigError,
    ConvergenceFailure,
    EmptyActivation,
    Infeasible,
    InitializationInfeasible,
    NonPositiveBeta,
    OutOfRegion,
    SearchSpaceTooLarge,
    ZeroGain,
)
from .experiment import (
    ConvergenceRecord,
    SweepSpec,
    TrialRecord,
    generate_scenario,
    read_results,
    run_convergence,
    run_sweep,
    run_trial,
    write_results,
)
from .link import EEOutcome, PowerAllocation, achievable_rate, sinr_target, total_power
from .matching import (
    Matching,
    MatchState,
    accept_if_better,
    candidate_moves,
    is_core_stable,
    run_matching,
    utility,
)
from .power_alloc import (
    DinkelbachTrace,
    QosStructure,
    beta_update,
    build_qos,
    clamp_alpha_K,
    dinkelbach_init,
    qos_recursion,
    solve_power_allocation,
    stationary_alpha_K,
)

__version__ = "0.1.0"
