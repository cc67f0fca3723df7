//! Robust scheduling with affine disturbance feedback.

pub mod counterpart;
pub mod policy;
pub mod schedule;
pub mod solve;

pub use counterpart::{robustify_row, Affine, CounterpartMode, Robustifier, UncertainRow, UncertainTerm};
pub use policy::{extract_policy, realized_outcome, worst_case_check, AffinePolicy, Outcome, PolicyError};
pub use schedule::{
    build, build_level1, build_level2, build_omniscient, build_openloop_level1, BuildError, BuildOptions, Layout, Mode,
    PolicyEntry, Realization, ScheduleMilp, ScheduleProblem,
};
pub use solve::{solve_schedule, solve_schedule_hinted, Hint, ScheduleError, Solved};
