//! Theory oracle run as a harness report.

use serde::Serialize;
use sjdpv_core::rng::{derive_seed, seeded};
use sjdpv_core::theory::{acceptance_bound_sweep, min_inequality_sweep, SweepConfig, GAP_BINS};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryCheckReport {
    pub report_version: u32,
    pub seed: u64,
    pub trials: usize,
    pub v_max: usize,
    pub l_max: usize,
    /// Trials where the joint rate fell below the token-wise rate by more
    /// than 1e-12.
    pub violations: usize,
    pub min_gap: f64,
    pub max_gap: f64,
    pub mean_gap: f64,
    /// Lower bin edges are `i / gap_histogram.len()`.
    pub gap_histogram: Vec<u64>,
    pub min_inequality_trials: usize,
    pub min_inequality_failures: usize,
}

pub fn theory_check(
    seed: u64,
    trials: usize,
    v_max: usize,
    l_max: usize,
    min_inequality_trials: usize,
) -> Result<TheoryCheckReport> {
    let sweep = acceptance_bound_sweep(
        &SweepConfig::new(trials, v_max, l_max),
        &mut seeded(derive_seed(seed, 0)),
    )?;
    let ineq = min_inequality_sweep(min_inequality_trials, 8, &mut seeded(derive_seed(seed, 1)))?;
    debug_assert_eq!(sweep.gap_histogram.len(), GAP_BINS);
    Ok(TheoryCheckReport {
        report_version: crate::bench::REPORT_VERSION,
        seed,
        trials: sweep.trials,
        v_max,
        l_max,
        violations: sweep.violations,
        min_gap: sweep.min_gap,
        max_gap: sweep.max_gap,
        mean_gap: sweep.mean_gap,
        gap_histogram: sweep.gap_histogram,
        min_inequality_trials: ineq.trials,
        min_inequality_failures: ineq.failures,
    })
}
