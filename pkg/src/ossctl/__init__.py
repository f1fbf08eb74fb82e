"""Optimal steady-state control toolkit: drive an LTI plant's input/output
to the optimizer of a convex steady-state program via feedback, certify the
loop, and fall back to dynamic-stabilizer synthesis when needed."""

from ._linalg import hinf_norm, is_hurwitz, numerical_rank
from .controller import (
    AlgebraicLoopError,
    ControllerState,
    DynamicStabilizer,
    PiGains,
    error_signal,
    pi_as_stabilizer,
    pi_dynamics,
    resolve_input,
    stabilizer_dynamics,
)
from .kkt import KktError, KktGeometry, build_kkt_geometry, kkt_residual, nullspace_equivalence
from .lmi import (
    LmiCertificate,
    LmiError,
    RealizationH,
    SectorMultiplier,
    assemble_lmi,
    build_multiplier,
    build_realization,
    gain_grid_search,
    verify_stability,
)
from .objective import (
    ComposedObjective,
    ObjectiveError,
    SteadyStateObjective,
    check_gradient_fd,
    cosh_example_objective,
    quadratic_objective,
)
from .oracle import (
    OptimizerResult,
    OracleError,
    check_uniqueness,
    solve_quadratic_closed_form,
    solve_steady_state,
)
from .plant import (
    EquilibriumPoint,
    LtiPlant,
    PlantError,
    check_detectable,
    check_full_row_rank_AB,
    check_stabilizable,
    particular_equilibrium,
)
from .scenario import Scenario, ScenarioError, load_scenario, save_scenario, scenario_from_dict
from .sdp import AffineBlock, FeasibilityResult, solve_feasibility
from .sim import (
    DisturbanceSchedule,
    DivergenceError,
    SimulationError,
    Trace,
    convergence_metrics,
    simulate,
)
from .synthesis import (
    AugmentedPlant,
    SynthesisError,
    SynthesisResult,
    closed_loop_gain,
    loop_transform,
    pi_closed_loop_gain,
    stabilizer_from_dict,
    stabilizer_to_dict,
    synthesize_stabilizer,
    validate_synthesis,
)

__version__ = "0.1.0"
