//! MAP inference toolkit for ferromagnetic Potts models (uniform metric
//! labeling).
//!
//! The crate covers the full pipeline around expansion-stable instances:
//!
//! - [`instance`]: problem instances, labelings, objective vectors, and
//!   brute-force oracles.
//! - [`maxflow`]: exact two-terminal max-flow / min-cut.
//! - [`expansion`]: alpha-expansion auxiliary graphs with capacities affine
//!   in the instance parameters, best-move queries, and the expansion-move
//!   local search heuristic.
//! - [`lp`]: a sparse revised-simplex linear-program solver returning primal
//!   and dual solutions.
//! - [`locallp`]: the local (pairwise) LP relaxation, projection to the
//!   min-diagonal subset of the local polytope, and recovery diagnostics.
//! - [`stability`]: adversarial perturbations and the (2,1)- and
//!   (2,1,psi)-expansion-stability checker.
//! - [`repair`]: the nearest-stable-instance linear program with per-label
//!   max-flow dual witnesses.
//! - [`bounds`]: curvature and recovery bounds.
//! - [`noise`]: the noisy-instance generative model, rounding algorithms,
//!   and statistical validation.

pub mod affine;
pub mod bounds;
pub mod expansion;
#[doc(hidden)]
pub mod fixtures;
pub mod instance;
pub mod locallp;
pub mod lp;
pub mod maxflow;
pub mod noise;
pub mod repair;
pub mod stability;

pub use affine::{AffineExpr, ParamSpace};
pub use instance::{
    brute_force_map, energy, enumerate_expansions, Instance, InstanceError, Labeling,
    ObjectiveVector,
};
pub use lp::{LinearProgram, LpSolution, LpStatus, Relation, Tolerances};
pub use maxflow::{max_flow, min_cut_value_bruteforce, CutResult, FlowNetwork, MaxFlowError};
