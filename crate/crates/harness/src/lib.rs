//! Experiment runner for the sjdpv decoding engine: configuration,
//! planted-phrase workloads, paired benchmarks, ablation sweeps and
//! CSV/JSON output.

pub mod bench;
pub mod checks;
pub mod config;
pub mod error;
pub mod planted;
pub mod report;
pub mod sweep;

pub use bench::{run_benchmark, BenchmarkReport, ModeSummary, RunRow, Workload};
pub use config::{ExperimentConfig, ModelSource};
pub use error::{HarnessError, Result};
pub use planted::{planted_model, planted_phrase_corpus, PlantSpec, PlantedModel};
pub use report::emit_plot_data;
pub use sweep::{run_merge_sweep, run_tau_sweep, MergeRow, TauRow};
