//! Backward finite-difference solver for the HJB system on the star network.

mod csv;
mod field;
mod grid;
mod solver;

pub(crate) use csv::write_preamble;
pub use csv::{read_field_csv, write_field_csv, CsvHeader, COLUMNS};
pub use field::{eval_value, FeedbackPolicy, ValueField};
pub use grid::{build_grid, cfl_limit, Grid};
pub use solver::{ensure_local_time_free, solve_backward, solve_no_localtime, vertex_update};
