//! Joint power control and slot scheduling for two-phase amplify-and-forward
//! cooperative relaying under an SINR threshold model.
//!
//! The crate builds a mixed-integer program over link activations, relay
//! selections and per-slot powers ([`milp`]), solves it exactly with a
//! branch-and-bound on a bounded-variable simplex ([`solver`]) or
//! approximately by randomized rounding with feasibility repair
//! ([`rounding`]), and validates every schedule against the SINR model
//! ([`sinr`]). [`experiment`] runs parameter sweeps comparing cooperative
//! (CLS) and direct-only (DLS) scheduling.

pub mod error;
pub mod experiment;
pub mod milp;
pub mod model;
pub mod rng;
pub mod rounding;
pub mod sinr;
pub mod solver;

pub use error::{Error, Result};
pub use experiment::{run_single, run_sweep, ExperimentSpec, SolveConfig, SolverChoice, ThroughputRecord};
pub use milp::{build_cls_milp, build_dls_milp, build_milp, BuildOptions, DeltaPolicy, MilpModel, Mode};
pub use model::{
    db_to_linear, generate_instance, linear_to_db, DemandMode, GainTable, Link, NetworkInstance, NodeId, Placement,
    RelayLink, Role, SystemParams,
};
pub use rounding::{round_best_of_k, PowerPolicy, RoundingConfig};
pub use sinr::{cooperative_sinr, validate_schedule, Schedule, ScheduleViolation};
pub use solver::{
    enumerate_milp, extract_schedule, solve_lp, solve_milp, LpSolution, LpStatus, MilpSolution, MilpStatus,
};
