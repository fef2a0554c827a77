//! Acceptance-rate oracles.
//!
//! `alpha(p, q) = E_{x~q}[min(1, p(x)/q(x))]` is the probability that a
//! single draft survives the accept–resample test. For a run of `L`
//! independent positions the token-wise rate is the product of the per-slot
//! rates, while a joint test on the product of ratios has rate
//! `E[min(1, ∏ r_i)]`. Because `min(1, ab) >= min(1, a)·min(1, b)` for
//! non-negative `a, b`, the joint rate is never below the token-wise one.
//! This module computes both exactly (by enumeration) and by Monte Carlo,
//! and sweeps random instances to check the bound.

use rand::Rng;
use rayon::prelude::*;

use crate::dist::{same_vocab, sample, sample_dirichlet, CategoricalDistribution};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded};

/// Largest joint outcome space [`alpha_phr_exact`] will enumerate.
pub const ENUMERATION_LIMIT: u64 = 10_000_000;

/// Tolerance for exact comparisons of acceptance rates.
pub const EXACT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcceptanceReport {
    pub alpha_tokenwise: f64,
    pub alpha_phrase: f64,
    pub per_position_alphas: Vec<f64>,
    pub method: Method,
    /// Samples drawn, for Monte Carlo reports.
    pub sample_count: Option<u64>,
    /// Standard error of `alpha_phrase`, for Monte Carlo reports.
    pub std_error: Option<f64>,
}

impl AcceptanceReport {
    pub fn gap(&self) -> f64 {
        self.alpha_phrase - self.alpha_tokenwise
    }
}

/// `Σ_x q(x)·min(1, p(x)/q(x))`; slots with `q(x) = 0` contribute nothing.
pub fn alpha(p: &CategoricalDistribution, q: &CategoricalDistribution) -> f64 {
    p.probs()
        .iter()
        .zip(q.probs())
        .filter(|(_, &qx)| qx > 0.0)
        .map(|(&px, &qx)| qx * (px / qx).min(1.0))
        .sum()
}

fn check_lists(p: &[CategoricalDistribution], q: &[CategoricalDistribution]) -> Result<()> {
    if p.is_empty() || p.len() != q.len() {
        return Err(Error::InvalidArgument(format!(
            "need equal non-empty lists, got {} and {}",
            p.len(),
            q.len()
        )));
    }
    p.iter().zip(q).try_for_each(|(a, b)| same_vocab(a, b))
}

/// Token-wise rate: `∏_i alpha(p_i, q_i)`.
pub fn alpha_seq(p: &[CategoricalDistribution], q: &[CategoricalDistribution]) -> Result<f64> {
    check_lists(p, q)?;
    Ok(p.iter().zip(q).map(|(a, b)| alpha(a, b)).product())
}

/// Joint rate `E_{x~∏q_i}[min(1, ∏ p_i(x_i)/q_i(x_i))]` by full enumeration
/// of the joint outcome space.
pub fn alpha_phr_exact(
    p: &[CategoricalDistribution],
    q: &[CategoricalDistribution],
) -> Result<f64> {
    check_lists(p, q)?;
    let outcomes: f64 = p.iter().map(|d| d.vocab_size() as f64).product();
    if outcomes > ENUMERATION_LIMIT as f64 {
        return Err(Error::EnumerationTooLarge {
            outcomes,
            limit: ENUMERATION_LIMIT,
        });
    }
    let len = p.len();
    let sizes: Vec<usize> = p.iter().map(CategoricalDistribution::vocab_size).collect();
    let mut idx = vec![0usize; len];
    let mut total = 0.0;
    loop {
        let mut qprod = 1.0;
        let mut pprod = 1.0;
        for i in 0..len {
            qprod *= q[i].probs()[idx[i]];
            pprod *= p[i].probs()[idx[i]];
        }
        if qprod > 0.0 {
            total += qprod * (pprod / qprod).min(1.0);
        }
        // odometer increment, last position fastest
        let mut i = len;
        loop {
            if i == 0 {
                return Ok(total);
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < sizes[i] {
                break;
            }
            idx[i] = 0;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
}

/// Monte Carlo estimate of the joint rate: the mean of `min(1, ∏ r_i)`
/// over `samples` draws `x ~ ∏ q_i`, with its standard error.
pub fn alpha_phr_mc<R: Rng + ?Sized>(
    p: &[CategoricalDistribution],
    q: &[CategoricalDistribution],
    samples: u64,
    rng: &mut R,
) -> Result<McEstimate> {
    check_lists(p, q)?;
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    // Welford running mean / variance.
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for n in 1..=samples {
        let mut ratio = 1.0;
        for (pi, qi) in p.iter().zip(q) {
            let x = sample(qi, rng);
            ratio *= pi.prob(x) / qi.prob(x);
        }
        let value = ratio.min(1.0);
        let delta = value - mean;
        mean += delta / n as f64;
        m2 += delta * (value - mean);
    }
    let std_error = if samples > 1 {
        (m2 / (samples - 1) as f64 / samples as f64).sqrt()
    } else {
        0.0
    };
    Ok(McEstimate {
        estimate: mean,
        std_error,
        samples,
    })
}

pub fn acceptance_report_exact(
    p: &[CategoricalDistribution],
    q: &[CategoricalDistribution],
) -> Result<AcceptanceReport> {
    let per_position_alphas: Vec<f64> = {
        check_lists(p, q)?;
        p.iter().zip(q).map(|(a, b)| alpha(a, b)).collect()
    };
    Ok(AcceptanceReport {
        alpha_tokenwise: per_position_alphas.iter().product(),
        alpha_phrase: alpha_phr_exact(p, q)?,
        per_position_alphas,
        method: Method::Exact,
        sample_count: None,
        std_error: None,
    })
}

pub fn acceptance_report_mc<R: Rng + ?Sized>(
    p: &[CategoricalDistribution],
    q: &[CategoricalDistribution],
    samples: u64,
    rng: &mut R,
) -> Result<AcceptanceReport> {
    check_lists(p, q)?;
    let per_position_alphas: Vec<f64> = p.iter().zip(q).map(|(a, b)| alpha(a, b)).collect();
    let mc = alpha_phr_mc(p, q, samples, rng)?;
    Ok(AcceptanceReport {
        alpha_tokenwise: per_position_alphas.iter().product(),
        alpha_phrase: mc.estimate,
        per_position_alphas,
        method: Method::MonteCarlo,
        sample_count: Some(samples),
        std_error: Some(mc.std_error),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinInequality {
    /// `min(1, ∏ r_i)`
    pub lhs: f64,
    /// `∏ min(1, r_i)`
    pub rhs: f64,
    pub holds: bool,
}

pub fn min_inequality_check(ratios: &[f64]) -> Result<MinInequality> {
    if let Some(&bad) = ratios.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "ratio {bad} is not a finite non-negative number"
        )));
    }
    let lhs = ratios.iter().product::<f64>().min(1.0);
    let rhs = ratios.iter().map(|r| r.min(1.0)).product::<f64>();
    Ok(MinInequality {
        lhs,
        rhs,
        holds: lhs >= rhs - EXACT_TOL,
    })
}

/// Random `(p_i, q_i)` lists of length `len` over `vocab` tokens. Each row
/// is a symmetric Dirichlet draw whose concentration is log-uniform on
/// `[0.1, 10]`.
pub fn random_instance<R: Rng + ?Sized>(
    vocab: usize,
    len: usize,
    rng: &mut R,
) -> Result<(Vec<CategoricalDistribution>, Vec<CategoricalDistribution>)> {
    let row = |rng: &mut R| {
        let c = (rng.random_range(0.1f64.ln()..=10f64.ln())).exp();
        sample_dirichlet(vocab, c, rng)
    };
    let mut p = Vec::with_capacity(len);
    let mut q = Vec::with_capacity(len);
    for _ in 0..len {
        p.push(row(rng)?);
        q.push(row(rng)?);
    }
    Ok((p, q))
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub trials: usize,
    pub v_max: usize,
    pub l_min: usize,
    pub l_max: usize,
    /// Use `q_i = p_i` in every trial.
    pub identical: bool,
}

impl SweepConfig {
    pub fn new(trials: usize, v_max: usize, l_max: usize) -> Self {
        Self {
            trials,
            v_max,
            l_min: 1,
            l_max,
            identical: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub vocab: usize,
    pub len: usize,
    pub alpha_seq: f64,
    pub alpha_phr: f64,
}

impl TrialRecord {
    pub fn gap(&self) -> f64 {
        self.alpha_phr - self.alpha_seq
    }
}

/// Number of equal-width bins over `[0, 1]` in the gap histogram.
pub const GAP_BINS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub trials: usize,
    /// Trials with `alpha_phr < alpha_seq − 1e-12`.
    pub violations: usize,
    pub min_gap: f64,
    pub max_gap: f64,
    pub mean_gap: f64,
    /// Counts of `alpha_phr − alpha_seq` in [`GAP_BINS`] bins over `[0, 1]`;
    /// tiny negative gaps land in the first bin.
    pub gap_histogram: Vec<u64>,
    pub records: Vec<TrialRecord>,
}

/// Draws random instances and checks `alpha_phr >= alpha_seq` exactly.
/// Trials run in parallel, each on its own stream derived from one draw of
/// `rng`, so the summary does not depend on scheduling.
pub fn acceptance_bound_sweep<R: Rng + ?Sized>(
    cfg: &SweepConfig,
    rng: &mut R,
) -> Result<SweepSummary> {
    if cfg.v_max < 2 || cfg.l_max < 1 || cfg.l_min < 1 || cfg.l_min > cfg.l_max {
        return Err(Error::InvalidArgument(format!(
            "sweep needs V_max >= 2 and 1 <= L_min <= L_max, got {cfg:?}"
        )));
    }
    let base: u64 = rng.random();
    let records = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let mut r = seeded(derive_seed(base, i as u64));
            let vocab = r.random_range(2..=cfg.v_max);
            let len = r.random_range(cfg.l_min..=cfg.l_max);
            let (p, mut q) = random_instance(vocab, len, &mut r)?;
            if cfg.identical {
                q = p.clone();
            }
            Ok(TrialRecord {
                vocab,
                len,
                alpha_seq: alpha_seq(&p, &q)?,
                alpha_phr: alpha_phr_exact(&p, &q)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut hist = vec![0u64; GAP_BINS];
    let mut violations = 0;
    let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for rec in &records {
        let g = rec.gap();
        if g < -EXACT_TOL {
            violations += 1;
        }
        lo = lo.min(g);
        hi = hi.max(g);
        sum += g;
        let bin = ((g.max(0.0) * GAP_BINS as f64) as usize).min(GAP_BINS - 1);
        hist[bin] += 1;
    }
    let n = records.len();
    Ok(SweepSummary {
        trials: n,
        violations,
        min_gap: if n == 0 { 0.0 } else { lo },
        max_gap: if n == 0 { 0.0 } else { hi },
        mean_gap: if n == 0 { 0.0 } else { sum / n as f64 },
        gap_histogram: hist,
        records,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinInequalitySummary {
    pub trials: usize,
    pub failures: usize,
    /// Largest `rhs − lhs` seen (negative when the bound is never tight).
    pub worst_margin: f64,
}

/// Checks the min-inequality on random ratio lists of length 1..=`max_len`
/// with ratios log-uniform on `[1e-6, 1e6]`.
pub fn min_inequality_sweep<R: Rng + ?Sized>(
    trials: usize,
    max_len: usize,
    rng: &mut R,
) -> Result<MinInequalitySummary> {
    if max_len == 0 {
        return Err(Error::InvalidArgument("max_len must be at least 1".into()));
    }
    let (lo, hi) = (1e-6f64.ln(), 1e6f64.ln());
    let mut failures = 0;
    let mut worst = f64::NEG_INFINITY;
    let mut ratios = Vec::with_capacity(max_len);
    for _ in 0..trials {
        ratios.clear();
        let len = rng.random_range(1..=max_len);
        ratios.extend((0..len).map(|_| rng.random_range(lo..=hi).exp()));
        let check = min_inequality_check(&ratios)?;
        if !check.holds {
            failures += 1;
        }
        worst = worst.max(check.rhs - check.lhs);
    }
    Ok(MinInequalitySummary {
        trials,
        failures,
        worst_margin: worst,
    })
}
