"""Joint service-chain caching and computation-offloading toolkit for
LEO satellite edge networks: scenario generation, latency/energy cost
model, exact binary-linear solving, greedy baselines, and an experiment
harness."""

from .costs import (
    CostBreakdown,
    DcPrefixError,
    FeasibilityReport,
    TerminalCost,
    check_feasibility,
    dco_normalizers,
    evaluate,
    ground_costs,
    isl_costs,
    satellite_compute_delay,
    total_cost,
    total_energy,
    total_latency,
    uplink_roundtrip,
)
from .experiments import (
    CompareReport,
    ResultRow,
    ResultTable,
    SweepSpec,
    compare_single,
    emit_results,
    run_sweep,
)
from .heuristics import dco, gco, gco_with_stats, nfco, popularity
from .ilp import IlpModel, build_model, decision_assignment, export_lp, objective_value, parse_lp
from .model import (
    Decision,
    GenerationConfig,
    GenerationError,
    NfCatalog,
    Scenario,
    ServiceChain,
    Topology,
    TopologyError,
    build_topology,
    generate_scenario,
    validate_scenario,
)
from .solver import (
    OracleSizeError,
    SolveLimits,
    SolveResult,
    brute_force_oracle,
    solve_exact,
    solve_scenario,
)

__version__ = "0.1.0"
