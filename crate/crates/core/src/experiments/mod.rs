//! Configuration, figure presets and result tables for the CLI.

mod config;
mod presets;
mod table;

pub use config::{parse_config, KEYS as CONFIG_KEYS, CodebookSize, ConfigOverrides, SystemConfig};
pub use presets::{
    analyze, fig2, fig3, fig4, fig5, run_preset, simulate, Preset, DEFAULT_CDF_THRESHOLDS,
};
pub use table::{emit, format_number, Column, Format, Provenance, ResultTable};
