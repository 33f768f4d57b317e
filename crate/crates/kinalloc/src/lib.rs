//! Nash equilibria of family resource-allocation games.
//!
//! Each individual in a family splits a fixed effort budget across everyone
//! (herself included). A target's personal fitness is a concave nondecreasing
//! function of the total investment it receives, and each source maximizes
//! her inclusive fitness: the relatedness-weighted sum of all personal
//! fitnesses. This crate computes Nash equilibria of that game by
//! water-filling best responses, verifies any profile with an exact
//! first-order certificate, classifies who is selfish or altruistic at a
//! solution, and ships a brute-force grid oracle for desk-scale ground truth.
//!
//! The `pedigree` module derives relatedness coefficients from parentage
//! records, and `formats` defines the JSON document types used by the CLI.

pub mod best_response;
pub mod equilibrium;
mod error;
pub mod fitness;
pub mod formats;
pub mod game;
pub mod oracle;
pub mod pedigree;

pub use best_response::{adjusted_marginal, spend_at_multiplier, water_fill, BestResponse, BR_TOL};
pub use equilibrium::{
    check_support_inclusions, classify, kkt_verify, solve_nash, Classification, EquilibriumReport,
    KktCertificate, KktResiduals, SolveDiagnostics, SolveMode, SolveOptions, SupportInclusions,
    ARGMAX_TOL, KKT_TOL, SUPPORT_TOL,
};
pub use error::Error;
pub use fitness::{FitnessFunction, FitnessKind, Marginal};
pub use game::{AllocationProfile, FamilyGame, Violation, FEAS_TOL};
pub use oracle::{
    grid_best_response, grid_nash_check, random_instance, GridBestResponse, GridNashCheck,
    GridSpec, InstanceSpec, RelatednessModel, MAX_GRID_POINTS,
};
pub use pedigree::{Pedigree, PedigreeMember, RelatednessMatrix};
