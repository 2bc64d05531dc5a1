//! Monte Carlo engine, scenario presets, configuration and result I/O.

mod config;
mod engine;
mod presets;
mod textio;

pub use config::{Scenario, Scheme, SimConfig};
pub use engine::{run_sweep, ReportRow, SimReport, SkipRecord};
pub use presets::scenario_preset;
pub use textio::{
    format_f64, load_matrix, load_transceiver, parse_matrix, read_matrix, save_matrix,
    save_transceiver, write_matrix,
};
