//! Ablation sweeps over the neighborhood threshold and the merge count.

use serde::Serialize;
use sjdpv_core::DecodeMode;

use crate::bench::{benchmark_with, Workload};
use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauRow {
    pub tau: f64,
    pub mean_nfe: f64,
    pub phrase_accept_rate: f64,
    pub seq_divergence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MergeRow {
    #[serde(rename = "M")]
    pub merges: usize,
    pub library_size: usize,
    pub mean_nfe: f64,
    pub phrase_hit_rate: f64,
}

fn pv_only(cfg: &ExperimentConfig) -> ExperimentConfig {
    let mut c = cfg.clone();
    c.modes = vec![DecodeMode::SjdPv];
    c
}

/// Phrase-verified decoding at each `tau`, on one workload and library and
/// the same per-decode seeds throughout.
pub fn run_tau_sweep(cfg: &ExperimentConfig, taus: &[f64]) -> Result<Vec<TauRow>> {
    if taus.is_empty() {
        return Err(HarnessError::ConfigInvalid("tau grid is empty".into()));
    }
    if taus.windows(2).any(|w| w[0] >= w[1]) {
        return Err(HarnessError::ConfigInvalid(format!(
            "tau grid must be ascending: {taus:?}"
        )));
    }
    let workload = Workload::prepare(cfg)?;
    let lib = workload.library(cfg.merges, cfg.max_phrase_len)?;
    taus.iter()
        .map(|&tau| {
            let mut c = pv_only(cfg);
            c.tau = tau;
            c.validate()?;
            let report = benchmark_with(&workload, &lib, &c)?;
            let m = &report.modes[0];
            Ok(TauRow {
                tau,
                mean_nfe: m.mean_nfe,
                phrase_accept_rate: m.phrase_accept_rate,
                seq_divergence: m.seq_divergence,
            })
        })
        .collect()
}

/// Rebuilds the library for each merge count over the same corpus and
/// runs phrase-verified decoding on matched seeds. `M = 0` uses the empty
/// library.
pub fn run_merge_sweep(cfg: &ExperimentConfig, merges: &[usize]) -> Result<Vec<MergeRow>> {
    if merges.is_empty() {
        return Err(HarnessError::ConfigInvalid("merge grid is empty".into()));
    }
    let workload = Workload::prepare(cfg)?;
    let c = pv_only(cfg);
    merges
        .iter()
        .map(|&m| {
            let lib = workload.library(m, cfg.max_phrase_len)?;
            let report = benchmark_with(&workload, &lib, &c)?;
            let s = &report.modes[0];
            Ok(MergeRow {
                merges: m,
                library_size: lib.len(),
                mean_nfe: s.mean_nfe,
                phrase_hit_rate: s.phrase_hit_rate,
            })
        })
        .collect()
}
