//! `dqnn`: train, sweep and compare DQNN / CCQ / QCL experiments from TOML configs.
//!
//! Any config field can be overridden after the config path with its dotted
//! key, e.g. `dqnn train configs/ring-dqnn4.toml --train.iterations=200`.
//! Exit codes: 0 ok, 2 config, 3 divergence, 4 missing data, 1 other.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dqnn::encoding::amplitude_encode;
use dqnn::experiment::{
    self as exp, Axis, ExperimentConfig, ExperimentError, Override, TableId, OUTPUT_ENV,
};
use dqnn::universality::FitConfig;

#[derive(Parser, Debug)]
#[command(name = "dqnn", version, about = "Duplication-free quantum neural network experiments")]
struct Cli {
    /// Replace each config's seed list with this single seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for seeds and samples; all cores when absent.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Root directory for outputs.
    #[arg(long, global = true, env = OUTPUT_ENV, default_value = "results")]
    output_root: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train one config over its seeds; writes results, aggregate and cards.
    Train {
        config: PathBuf,
        /// Output directory, overriding the config and the output root.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Dotted overrides such as `--train.iterations=50`.
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Sweep noise over one axis for one or more configs.
    SweepNoise {
        #[arg(short, long = "config", required = true)]
        configs: Vec<PathBuf>,
        #[arg(long)]
        axis: Axis,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// CSV path; `<output-root>/sweep-<axis>.csv` when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Run the configs behind a reference table and compare with published values.
    Reproduce {
        /// II-a, II-b, III-subset or noise-figs.
        table: TableId,
        #[arg(long, default_value = "configs")]
        configs: PathBuf,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Fit sigmoid-of-overlap expansions of growing size to a target.
    UniversalityDemo {
        /// constant, indicator or regression.
        #[arg(long, default_value = "indicator")]
        target: String,
        #[arg(long = "n-s", value_delimiter = ',', default_value = "0,1,2,4,8,16,32")]
        n_s: Vec<usize>,
        /// Grid nodes per axis.
        #[arg(long, default_value_t = 24)]
        side: usize,
        /// The grid covers `[-half, half]²`.
        #[arg(long, default_value_t = 0.8)]
        half: f64,
        #[arg(long, default_value_t = FitConfig::default().iterations)]
        iterations: usize,
        #[arg(long, default_value_t = FitConfig::default().restarts)]
        restarts: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the train and evaluation sets a config would use.
    GenData {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Print the amplitude encoding of a feature vector.
    Encode {
        #[arg(value_delimiter = ',', required = true, allow_negative_numbers = true)]
        features: Vec<f64>,
    },
    /// Gate and observable counts of the models behind some configs.
    ComplexityReport {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_overrides(raw: &[String]) -> Result<Vec<Override>, ExperimentError> {
    raw.iter().map(|s| s.parse()).collect()
}

fn base_dir(config: &Path) -> PathBuf {
    config.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf)
}

fn load(cli: &Cli, path: &Path, overrides: &[Override]) -> Result<ExperimentConfig, ExperimentError> {
    let mut all = overrides.to_vec();
    if let Some(s) = cli.seed {
        all.push(Override { path: "seeds".into(), value: format!("[{s}]") });
    }
    ExperimentConfig::load(path, &all)
}

fn print_outcome(out: &exp::RunOutcome) {
    for r in out.rows() {
        println!("{} seed {:>3}: {:?} = {:.6} (train {:.6})", r.name, r.seed, r.metric, r.value, r.train_value);
    }
    let a = out.aggregate();
    println!("{}: {:?} {:?} = {:.6}, mean {:.6} ± {:.6} over {} seeds", a.name, a.summary, a.metric, a.value, a.mean, a.std, a.n_seeds);
}

fn write_run_checked(dir: &Path, out: &exp::RunOutcome) -> Result<(), ExperimentError> {
    exp::write_run(dir, out)?;
    println!("wrote {}", dir.display());
    let diverged = out.diverged_seeds();
    if diverged.is_empty() { Ok(()) } else { Err(ExperimentError::Diverged(diverged)) }
}

fn execute(cli: &Cli) -> Result<(), ExperimentError> {
    match &cli.command {
        Command::Train { config, out, overrides } => {
            let cfg = load(cli, config, &parse_overrides(overrides)?)?;
            let outcome = exp::run(&cfg, &base_dir(config))?;
            print_outcome(&outcome);
            let dir = out.clone().unwrap_or_else(|| cfg.output_dir(Some(&cli.output_root)));
            write_run_checked(&dir, &outcome)
        }
        Command::SweepNoise { configs, axis, values, out, overrides } => {
            let ovs = parse_overrides(overrides)?;
            let cfgs = configs.iter().map(|p| Ok((load(cli, p, &ovs)?, base_dir(p)))).collect::<Result<Vec<_>, ExperimentError>>()?;
            let points = exp::sweep(&cfgs, *axis, values)?;
            for p in &points {
                let r = p.row();
                println!("{} = {:<6} {:<5} mean {:.6} ± {:.6} ({} seeds)", r.axis, r.value, r.model, r.metric_mean, r.metric_std, r.seeds);
            }
            let path = out.clone().unwrap_or_else(|| cli.output_root.join(format!("sweep-{axis}.csv")));
            exp::write_sweep(&path, &points)?;
            println!("wrote {}", path.display());
            let diverged: Vec<u64> = points.iter().flat_map(|p| p.outcome.diverged_seeds()).collect();
            if diverged.is_empty() { Ok(()) } else { Err(ExperimentError::Diverged(diverged)) }
        }
        Command::Reproduce { table, configs, overrides } => {
            let mut ovs = parse_overrides(overrides)?;
            if let Some(s) = cli.seed {
                ovs.push(Override { path: "seeds".into(), value: format!("[{s}]") });
            }
            let report = exp::reproduce(*table, configs, &ovs)?;
            let dir = cli.output_root.join(format!("reproduce-{table}"));
            for out in &report.runs {
                exp::write_run(&dir.join(&out.config.name), out)?;
            }
            if !report.sweeps.is_empty() {
                let (delta, p): (Vec<_>, Vec<_>) = report.sweeps.iter().cloned().partition(|s| s.axis == Axis::Delta);
                exp::write_sweep(&dir.join("sweep-delta.csv"), &delta)?;
                exp::write_sweep(&dir.join("sweep-p.csv"), &p)?;
            }
            exp::write_repro(&dir.join("comparison.csv"), &report.rows)?;
            for r in &report.rows {
                let reference = r.reference.map_or("-".to_string(), |v| format!("{v:.4}"));
                println!("[{}] {:<55} reference {:>7} ours {:.4} ({})", r.status(), r.row, reference, r.ours, r.bound);
            }
            println!("wrote {}", dir.display());
            Ok(())
        }
        Command::UniversalityDemo { target, n_s, side, half, iterations, restarts, out } => {
            let fit = FitConfig { iterations: *iterations, restarts: *restarts, seed: cli.seed.unwrap_or(0), ..FitConfig::default() };
            let rows = exp::universality_demo(target, n_s, *side, *half, &fit)?;
            for r in &rows {
                println!("n_s = {:>3}: L2 error {:.6e} (relative {:.4})", r.n_s, r.l2_error, r.relative_error);
            }
            let path = out.clone().unwrap_or_else(|| cli.output_root.join(format!("universality-{target}.csv")));
            exp::write_universality(&path, &rows)?;
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::GenData { config, out, overrides } => {
            let cfg = load(cli, config, &parse_overrides(overrides)?)?;
            let dir = out.clone().unwrap_or_else(|| cli.output_root.join(&cfg.name).join("data"));
            for &seed in &cfg.seeds {
                let (train, test) = cfg.task.load(&base_dir(config), seed)?;
                for (d, stem) in [(train, format!("train-seed-{seed}")), (test, format!("test-seed-{seed}"))] {
                    let (data, _) = d.save(&dir, &stem)?;
                    println!("{}: {} samples, {} features", data.display(), d.len(), d.n_features());
                }
                if !cfg.task.seeded() {
                    break;
                }
            }
            Ok(())
        }
        Command::Encode { features } => {
            let state = amplitude_encode(features).map_err(|e| ExperimentError::Config(e.to_string()))?;
            println!("{} qubits", state.n_qubits());
            for (i, a) in state.amplitudes().iter().enumerate() {
                println!("|{i:0width$b}>  {:+.12}", a.re, width = state.n_qubits());
            }
            Ok(())
        }
        Command::ComplexityReport { configs, out } => {
            let rows = configs
                .iter()
                .map(|p| exp::complexity_row(&load(cli, p, &[])?, &base_dir(p)))
                .collect::<Result<Vec<_>, ExperimentError>>()?;
            println!("{:<20} {:<5} {:>6} {:>6} {:>5} {:>5} {:>6} {:>5} {:>6}", "config", "model", "n_data", "n_copy", "n_tot", "n_lay", "n_gate", "n_obs", "C");
            for r in &rows {
                println!(
                    "{:<20} {:<5} {:>6} {:>6} {:>5} {:>5} {:>6} {:>5} {:>6}",
                    r.config, r.model, r.n_data, r.n_copy, r.n_tot, r.n_lay, r.n_gate, r.n_obs, r.c
                );
            }
            if let Some(path) = out {
                exp::write_complexity(path, &rows)?;
                println!("wrote {}", path.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: --jobs {n}: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
