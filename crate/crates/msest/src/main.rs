use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use msest::experiment::{run_experiment, ExperimentConfig};
use msest::registry;

#[derive(Parser)]
#[command(
    name = "msest",
    version,
    about = "Ensemble estimation of drift and diffusion parameters in coarse-grained SDEs"
)]
struct Cli {
    /// Worker threads (default: MSEST_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a configured experiment and write CSV reports.
    Run {
        /// Path to a `key = value` experiment config.
        #[arg(long)]
        config: PathBuf,
        /// Cap the ensemble at 500 paths and 50 initial conditions.
        #[arg(long)]
        fast: bool,
        /// Output directory (overrides the config's `out_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List registered models with their parameters.
    ListModels,
    /// Print the effective coarse-grained coefficients of a model.
    Truth {
        #[arg(long)]
        model: String,
        /// Parameter override, `name=value`; repeatable.
        #[arg(long = "param", value_name = "NAME=VALUE")]
        params: Vec<String>,
    },
}

fn parse_param_overrides(pairs: &[String]) -> msest::Result<BTreeMap<String, f64>> {
    let mut map = BTreeMap::new();
    for pair in pairs {
        let (name, value) = pair.split_once('=').ok_or_else(|| {
            msest::Error::Config(format!("expected NAME=VALUE, got `{pair}`"))
        })?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| msest::Error::Config(format!("`{value}` is not a number")))?;
        map.insert(name.trim().to_string(), v);
    }
    Ok(map)
}

fn configure_threads(cli_threads: Option<usize>) {
    let threads = cli_threads.or_else(|| {
        std::env::var("MSEST_THREADS").ok().and_then(|v| v.parse().ok())
    });
    if let Some(k) = threads {
        if k >= 1 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
        }
    }
}

fn run(cli: Cli) -> msest::Result<()> {
    configure_threads(cli.threads);
    match cli.cmd {
        Cmd::Run { config, fast, out } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let report = run_experiment(&cfg, fast, out.as_deref())?;
            let s = &report.shape;
            println!(
                "{}: h={} n={} N={} m={} seed={}",
                report.model, s.h, s.n, s.paths, s.num_ics, s.seed
            );
            if let Some(last) = report.series.rows.last() {
                println!("estimates at t = {}:", last.t);
                for (p, name) in report.series.param_names.iter().enumerate() {
                    let est = last.estimates[p];
                    match report.series.truths[p] {
                        Some(t) if t != 0.0 => {
                            let rel = ((est - t) / t).abs();
                            println!("  {name:>10} = {est:+.6e}  (known {t:+.6e}, rel err {:.2}%)", 100.0 * rel);
                        }
                        Some(t) => {
                            println!("  {name:>10} = {est:+.6e}  (known {t:+.6e})");
                        }
                        None => println!("  {name:>10} = {est:+.6e}"),
                    }
                }
            }
            println!("series report: {}", report.series_csv.display());
            if let Some(p) = &report.sweep_csv {
                println!("subsampling report: {}", p.display());
            }
        }
        Cmd::ListModels => {
            for name in registry::model_names() {
                let m = registry::lookup(name)?;
                println!("{name}: {}", m.summary());
                let params: Vec<String> = m
                    .param_defaults()
                    .iter()
                    .map(|(k, v)| format!("{k}={v}"))
                    .collect();
                println!("  params: {}", params.join(", "));
                println!(
                    "  effective coefficients: {}",
                    if m.has_truth() { "known" } else { "not available" }
                );
            }
        }
        Cmd::Truth { model, params } => {
            let overrides = parse_param_overrides(&params)?;
            let m = registry::lookup(&model)?;
            let truth = m.effective_truth(&overrides)?;
            for (k, v) in &truth {
                println!("{k} = {v:.12}");
            }
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
