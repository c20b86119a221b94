//! Vote-level simulation: synthetic voters, adversary passes, parameter
//! estimation and empirical regret of aggregators.

mod csv_io;
mod dataset;
mod evaluate;

pub use csv_io::{ingest_csv, read_csv, write_csv};
pub use dataset::{apply_adversaries, synthesize, Strategy, VoteDataset, VoteRow};
pub use evaluate::{
    builtin_aggregators, estimate_params, evaluate, majority, run_experiment, Evaluation,
    EvalRow, EstimatedParams, ExperimentConfig,
};
