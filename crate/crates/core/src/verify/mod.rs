//! Oracles, the vertex test-function construction, and cross-checks between
//! the solver and the simulator.

mod checks;
mod gadget;
mod oracle;
mod report;

pub use checks::{
    check_against_oracle, check_comparison_monotonicity, check_diffraction_law, check_dpp, check_localtime_rate,
    check_no_localtime_consistency, check_nonstickiness, check_ode_gadget, check_terminal_ordering, check_truncation,
    check_value_characterization, LocalTimeRate, Probe, Solution, StopRule, TruncationAxis, CENSORING_LIMIT, SE_FACTOR,
};
pub use gadget::{
    calibrate_slope, gadget_sweep, slope_lower_bound, solve_ode_gadget, GadgetBounds, GadgetCase, GadgetParams,
    OdeTestFunction, MAX_SIGN_ITERATIONS,
};
pub use oracle::{integrate, mean_local_time, reflected_bm_oracle};
pub use report::{write_reports_csv, write_reports_text, CheckReport, Relation, Statistic, REPORT_COLUMNS};
