//! Convex kernel: a dense two-phase simplex solver for general LPs and the
//! small per-pair programs (feasibility and minimum perturbation radius) that
//! drive robustness verification.

mod pair;
mod simplex;

pub use pair::{pair_feasible, pair_min_radius, PairFeasibility, PairProgram, PairSolution};
pub use simplex::{lp_solve, ConstraintSense, GeneralLP, LpStatus, SolveResult};
