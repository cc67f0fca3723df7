//! Linear and mixed-binary linear programming for small dense scheduling
//! problems.
//!
//! [`solve_lp`] is a bounded-variable revised simplex (primal and dual) with
//! an explicit basis inverse. [`solve_milp`] runs best-first branch and bound
//! on top of it, warm-starting every child node from its parent's basis.

mod factor;
pub mod lp;
pub mod milp;
pub mod mps;
pub mod simplex;

pub use lp::{LinearProgram, LpError, Row, Sense};
pub use milp::{
    brute_force_milp, solve_milp, solve_milp_with_incumbent, MilpError, MilpLimits, MilpProblem, MilpSolution, MilpStatus};
pub use simplex::{dual_bound, solve_lp, solve_lp_warm, Basis, LpLimits, LpSolution, LpStatus, SimplexOptions};
