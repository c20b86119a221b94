//! Finite general model: report multisets, benchmark tables, the sensitive
//! parameter and the regret bounds it controls.

mod fooling;
mod game;
mod histogram;
mod sensitivity;
mod table;

pub use fooling::{fooling_scenario, FoolingInstance};
pub use game::{TableGame, TableMinimax};
pub use histogram::{confusion_padding, report_distance, ReportHistogram};
pub use sensitivity::{
    naive_aggregator, naive_forecast, regret_lower_bound_instance, sensitive_parameter,
    sensitivity_ratio_check, BoundChecks, LowerBoundInstance, RatioCheck, SensitivityReport,
    Witness,
};
pub use table::{ci_informative_table, linear_table, OptTable, TableEntry, TableStructure};

/// A report multiset, kept sorted.
pub type Reports = Vec<u32>;
