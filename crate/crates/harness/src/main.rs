use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use sjdpv_core::models::MarkovModel;
use sjdpv_core::phrase::{build_library, cooccurrence_stats, write_corpus};
use sjdpv_core::rng::{derive_seed, seeded};
use sjdpv_core::{decode, DecodeMode, VerifyConfig};
use sjdpv_harness::bench::{load_corpus, Workload};
use sjdpv_harness::checks::theory_check;
use sjdpv_harness::report::{emit_plot_data, write_benchmark, write_config, write_json, CoocRow};
use sjdpv_harness::{
    planted_phrase_corpus, run_benchmark, run_merge_sweep, run_tau_sweep, ExperimentConfig,
};

#[derive(Parser)]
#[command(
    name = "sjdpv",
    version,
    about = "Phrase-verified speculative Jacobi decoding experiments"
)]
struct Cli {
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Flat key = value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learns a phrase library from a corpus file.
    BuildLibrary {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        merges: usize,
        #[arg(long = "max-len", default_value_t = 8)]
        max_len: usize,
        /// Vocabulary size; defaults to the largest token id plus one.
        #[arg(long)]
        vocab: Option<usize>,
        /// Library file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Decodes one sequence and prints it with its metrics.
    Decode {
        #[arg(long, default_value = "sjd_pv")]
        mode: DecodeMode,
    },
    /// Paired benchmark of every configured mode.
    Bench,
    /// Phrase-verified decoding across neighborhood thresholds.
    SweepTau {
        #[arg(long, value_delimiter = ',', default_value = "0.005,0.01,0.02,0.05")]
        taus: Vec<f64>,
    },
    /// Phrase-verified decoding across merge counts.
    SweepMerges {
        #[arg(long, value_delimiter = ',', default_value = "32,256,1024")]
        merges: Vec<usize>,
    },
    /// Checks the joint-versus-token-wise acceptance bound on random instances.
    TheoryCheck {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long = "v-max", default_value_t = 8)]
        v_max: usize,
        #[arg(long = "l-max", default_value_t = 3)]
        l_max: usize,
        #[arg(long = "min-trials", default_value_t = 100_000)]
        min_trials: usize,
    },
    /// Adjacent-pair counts of a corpus as a rank/count series.
    CoocStats {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 500)]
        top: usize,
    },
    /// Writes the configured model, its corpus and (for planted models)
    /// the planted phrases.
    Plant,
}

fn resolve(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    Ok(cfg)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let cfg = resolve(&cli)?;
    let out = cfg.out.clone();
    match cli.command {
        Command::BuildLibrary {
            corpus,
            merges,
            max_len,
            vocab,
            out,
        } => {
            let vocab = match vocab {
                Some(v) => v,
                None => {
                    let text = std::fs::read_to_string(&corpus)
                        .with_context(|| corpus.display().to_string())?;
                    let max = text
                        .lines()
                        .filter(|l| !l.trim_start().starts_with('#'))
                        .flat_map(str::split_whitespace)
                        .filter_map(|t| t.parse::<u32>().ok())
                        .max();
                    match max {
                        Some(m) => m as usize + 1,
                        None => bail!("{}: corpus is empty", corpus.display()),
                    }
                }
            };
            let seqs = load_corpus(&corpus, vocab)?;
            let lib = build_library(&seqs, vocab, merges, max_len)?;
            lib.save(&out).with_context(|| out.display().to_string())?;
            println!(
                "{} merges, {} phrases -> {}",
                lib.merges(),
                lib.len(),
                out.display()
            );
        }
        Command::Decode { mode } => {
            let workload = Workload::prepare(&cfg)?;
            let lib = workload.library(cfg.merges, cfg.max_phrase_len)?;
            let vcfg = VerifyConfig::new(mode, cfg.window, cfg.tau)?
                .with_greedy(cfg.greedy)
                .with_max_phrase_len(cfg.max_phrase_len);
            let mut rng = seeded(derive_seed(cfg.seed, 2));
            let lib = (mode == DecodeMode::SjdPv).then_some(&lib);
            let (seq, m) = decode(&workload.model, lib, &vcfg, cfg.tokens, &mut rng)?;
            println!("{seq}");
            println!(
                "nfe {} tokens {} tokens/iter {:.3} phrase {}/{} tokens {}/{}",
                m.nfe,
                m.tokens_emitted,
                m.mean_tokens_per_iteration(),
                m.phrase_accepts,
                m.phrase_attempts,
                m.token_accepts,
                m.token_accepts + m.token_rejects
            );
        }
        Command::Bench => {
            let report = run_benchmark(&cfg)?;
            write_benchmark(&report, &out)?;
            println!("library size {}", report.library_size);
            for m in &report.modes {
                println!(
                    "{:<7} mean_nfe {:>9.2}  tokens/iter {:.3}  phrase_hit {:.3}  accel {:.3}x  {:.2}s",
                    m.mode, m.mean_nfe, m.mean_tokens_per_iteration, m.phrase_hit_rate, m.nfe_acceleration, m.wall_clock_secs
                );
            }
        }
        Command::SweepTau { taus } => {
            let rows = run_tau_sweep(&cfg, &taus)?;
            emit_plot_data(&rows, out.join("sweep_tau.csv"))?;
            write_config(&cfg, &out)?;
            for r in &rows {
                println!("tau {:<6} mean_nfe {:.2}", r.tau, r.mean_nfe);
            }
        }
        Command::SweepMerges { merges } => {
            let rows = run_merge_sweep(&cfg, &merges)?;
            emit_plot_data(&rows, out.join("sweep_merges.csv"))?;
            write_config(&cfg, &out)?;
            for r in &rows {
                println!(
                    "M {:<6} library {:<6} mean_nfe {:.2}",
                    r.merges, r.library_size, r.mean_nfe
                );
            }
        }
        Command::TheoryCheck {
            trials,
            v_max,
            l_max,
            min_trials,
        } => {
            let report = theory_check(cfg.seed, trials, v_max, l_max, min_trials)?;
            write_json(&report, out.join("theory.json"))?;
            println!(
                "{} trials, {} violations; {} min-inequality lists, {} failures",
                report.trials,
                report.violations,
                report.min_inequality_trials,
                report.min_inequality_failures
            );
        }
        Command::CoocStats { corpus, top } => {
            let text =
                std::fs::read_to_string(&corpus).with_context(|| corpus.display().to_string())?;
            let seqs = sjdpv_core::phrase::read_corpus(text.as_bytes())
                .with_context(|| corpus.display().to_string())?;
            let rows: Vec<CoocRow> = cooccurrence_stats(&seqs, top)?
                .into_iter()
                .enumerate()
                .map(|(i, ((a, b), count))| CoocRow {
                    rank: i + 1,
                    left: a.0,
                    right: b.0,
                    count,
                })
                .collect();
            emit_plot_data(&rows, out.join("cooc.csv"))?;
            println!("{} pairs -> {}", rows.len(), out.join("cooc.csv").display());
        }
        Command::Plant => plant(&cfg)?,
    }
    Ok(())
}

fn plant(cfg: &ExperimentConfig) -> Result<()> {
    let out = &cfg.out;
    std::fs::create_dir_all(out).with_context(|| out.display().to_string())?;
    let mut rng = seeded(derive_seed(cfg.seed, 0));
    let (corpus, planted) = planted_phrase_corpus(
        &cfg.plant_spec(),
        cfg.corpus_sequences,
        cfg.corpus_seq_len,
        &mut rng,
    )?;
    let model: &MarkovModel = &planted.model;
    model.save(out.join("model.psdm"))?;
    let path = out.join("corpus.txt");
    let mut w = BufWriter::new(File::create(&path).with_context(|| path.display().to_string())?);
    write_corpus(&mut w, &corpus)?;
    w.flush()?;
    let path = out.join("phrases.txt");
    let mut w = BufWriter::new(File::create(&path).with_context(|| path.display().to_string())?);
    for p in &planted.phrases {
        writeln!(w, "{p}")?;
    }
    w.flush()?;
    write_config(cfg, out)?;
    println!(
        "{} sequences, {} planted phrases -> {}",
        corpus.len(),
        planted.phrases.len(),
        out.display()
    );
    Ok(())
}
